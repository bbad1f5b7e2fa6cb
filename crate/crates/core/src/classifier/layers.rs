//! Layer primitives for the toy CNN.
//!
//! Activations are channel-major `[ch][row][col]` slices of f64. Parameters
//! are stored as f32 (the checkpoint word size) and widened to f64 for all
//! arithmetic, so a save/load round trip is lossless and forward outputs
//! reproduce bit-identically.

/// 3x3 convolution, stride 1, zero 'same' padding.
pub fn conv3x3_forward(
    input: &[f64],
    h: usize,
    w: usize,
    in_ch: usize,
    out_ch: usize,
    weight: &[f32],
    bias: &[f32],
) -> Vec<f64> {
    debug_assert_eq!(input.len(), in_ch * h * w);
    debug_assert_eq!(weight.len(), out_ch * in_ch * 9);
    let mut out = vec![0.0f64; out_ch * h * w];
    for o in 0..out_ch {
        let b = bias[o] as f64;
        for y in 0..h {
            for x in 0..w {
                let mut acc = b;
                for i in 0..in_ch {
                    let wbase = ((o * in_ch + i) * 3) * 3;
                    let pbase = i * h * w;
                    for ky in 0..3usize {
                        let iy = y as isize + ky as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = pbase + iy as usize * w;
                        for kx in 0..3usize {
                            let ix = x as isize + kx as isize - 1;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += weight[wbase + ky * 3 + kx] as f64 * input[row + ix as usize];
                        }
                    }
                }
                out[(o * h + y) * w + x] = acc;
            }
        }
    }
    out
}

/// Gradient with respect to the convolution input.
pub fn conv3x3_backward_input(
    grad_out: &[f64],
    h: usize,
    w: usize,
    in_ch: usize,
    out_ch: usize,
    weight: &[f32],
) -> Vec<f64> {
    let mut grad_in = vec![0.0f64; in_ch * h * w];
    for o in 0..out_ch {
        for y in 0..h {
            for x in 0..w {
                let g = grad_out[(o * h + y) * w + x];
                if g == 0.0 {
                    continue;
                }
                for i in 0..in_ch {
                    let wbase = ((o * in_ch + i) * 3) * 3;
                    let pbase = i * h * w;
                    for ky in 0..3usize {
                        let iy = y as isize + ky as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = pbase + iy as usize * w;
                        for kx in 0..3usize {
                            let ix = x as isize + kx as isize - 1;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            grad_in[row + ix as usize] += weight[wbase + ky * 3 + kx] as f64 * g;
                        }
                    }
                }
            }
        }
    }
    grad_in
}

/// Accumulates parameter gradients for one sample into `grad_w`/`grad_b`.
#[allow(clippy::too_many_arguments)]
pub fn conv3x3_backward_params(
    input: &[f64],
    grad_out: &[f64],
    h: usize,
    w: usize,
    in_ch: usize,
    out_ch: usize,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
) {
    for o in 0..out_ch {
        for y in 0..h {
            for x in 0..w {
                let g = grad_out[(o * h + y) * w + x];
                if g == 0.0 {
                    continue;
                }
                grad_b[o] += g;
                for i in 0..in_ch {
                    let wbase = ((o * in_ch + i) * 3) * 3;
                    let pbase = i * h * w;
                    for ky in 0..3usize {
                        let iy = y as isize + ky as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = pbase + iy as usize * w;
                        for kx in 0..3usize {
                            let ix = x as isize + kx as isize - 1;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            grad_w[wbase + ky * 3 + kx] += input[row + ix as usize] * g;
                        }
                    }
                }
            }
        }
    }
}

pub fn relu_forward(input: &[f64]) -> Vec<f64> {
    input.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Subgradient 0 at exactly zero.
pub fn relu_backward(pre_activation: &[f64], grad_out: &[f64]) -> Vec<f64> {
    pre_activation
        .iter()
        .zip(grad_out)
        .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
        .collect()
}

/// 2x2 average pooling, stride 2. Spatial dims must be even.
pub fn avgpool2_forward(input: &[f64], h: usize, w: usize, ch: usize) -> Vec<f64> {
    debug_assert!(h.is_multiple_of(2) && w.is_multiple_of(2));
    let (h2, w2) = (h / 2, w / 2);
    let mut out = vec![0.0f64; ch * h2 * w2];
    for c in 0..ch {
        for y in 0..h2 {
            for x in 0..w2 {
                let base = (c * h + 2 * y) * w + 2 * x;
                out[(c * h2 + y) * w2 + x] =
                    0.25 * (input[base] + input[base + 1] + input[base + w] + input[base + w + 1]);
            }
        }
    }
    out
}

pub fn avgpool2_backward(grad_out: &[f64], h: usize, w: usize, ch: usize) -> Vec<f64> {
    let (h2, w2) = (h / 2, w / 2);
    let mut grad_in = vec![0.0f64; ch * h * w];
    for c in 0..ch {
        for y in 0..h2 {
            for x in 0..w2 {
                let g = 0.25 * grad_out[(c * h2 + y) * w2 + x];
                let base = (c * h + 2 * y) * w + 2 * x;
                grad_in[base] = g;
                grad_in[base + 1] = g;
                grad_in[base + w] = g;
                grad_in[base + w + 1] = g;
            }
        }
    }
    grad_in
}

/// Global average pool: one value per channel.
pub fn gap_forward(input: &[f64], h: usize, w: usize, ch: usize) -> Vec<f64> {
    let n = (h * w) as f64;
    (0..ch)
        .map(|c| input[c * h * w..(c + 1) * h * w].iter().sum::<f64>() / n)
        .collect()
}

pub fn gap_backward(grad_out: &[f64], h: usize, w: usize, ch: usize) -> Vec<f64> {
    let n = (h * w) as f64;
    let mut grad_in = vec![0.0f64; ch * h * w];
    for c in 0..ch {
        let g = grad_out[c] / n;
        for v in &mut grad_in[c * h * w..(c + 1) * h * w] {
            *v = g;
        }
    }
    grad_in
}

/// Affine head: `logits[k] = b[k] + sum_f w[k*F + f] * feat[f]`.
pub fn affine_forward(features: &[f64], weight: &[f32], bias: &[f32], classes: usize) -> Vec<f64> {
    let dim = features.len();
    (0..classes)
        .map(|k| {
            let mut acc = bias[k] as f64;
            for (f, &v) in features.iter().enumerate() {
                acc += weight[k * dim + f] as f64 * v;
            }
            acc
        })
        .collect()
}

pub fn affine_backward_input(grad_logits: &[f64], weight: &[f32], feature_dim: usize) -> Vec<f64> {
    let mut grad_feat = vec![0.0f64; feature_dim];
    for (k, &g) in grad_logits.iter().enumerate() {
        for f in 0..feature_dim {
            grad_feat[f] += weight[k * feature_dim + f] as f64 * g;
        }
    }
    grad_feat
}

pub fn affine_backward_params(
    features: &[f64],
    grad_logits: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
) {
    let dim = features.len();
    for (k, &g) in grad_logits.iter().enumerate() {
        grad_b[k] += g;
        for (f, &v) in features.iter().enumerate() {
            grad_w[k * dim + f] += v * g;
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
