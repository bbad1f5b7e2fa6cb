//! Preprocessing defenses.
//!
//! `jpeg_like_defense` is the lossy core of JPEG held in memory: per-channel
//! 8x8 block DCT, quantization against the standard luminance table scaled
//! by the conventional quality rule, dequantization, inverse DCT. No chroma
//! subsampling and no entropy coding; the lossless stages do not change
//! what the defense does to a perturbation.
//!
//! `tv_reconstruct` rebuilds an image from a random subset of kept pixels
//! under an anisotropic total-variation penalty, by fixed-step projected
//! subgradient descent.

use crate::error::{Error, Result};
use crate::field::ChannelField;
use crate::fog::Image;
use crate::rng::CounterRng;

/// Standard JPEG luminance quantization table, in zig-zag-free row-major
/// order.
const LUMA_QUANT: [f64; 64] = [
    16.0, 11.0, 10.0, 16.0, 24.0, 40.0, 51.0, 61.0, //
    12.0, 12.0, 14.0, 19.0, 26.0, 58.0, 60.0, 55.0, //
    14.0, 13.0, 16.0, 24.0, 40.0, 57.0, 69.0, 56.0, //
    14.0, 17.0, 22.0, 29.0, 51.0, 87.0, 80.0, 62.0, //
    18.0, 22.0, 37.0, 56.0, 68.0, 109.0, 103.0, 77.0, //
    24.0, 35.0, 55.0, 64.0, 81.0, 104.0, 113.0, 92.0, //
    49.0, 64.0, 78.0, 87.0, 103.0, 121.0, 120.0, 101.0, //
    72.0, 92.0, 95.0, 98.0, 112.0, 100.0, 103.0, 99.0,
];

/// Conventional quality-to-table scaling: quality 50 uses the table as-is,
/// higher qualities shrink the divisors toward 1, lower qualities inflate
/// them.
pub fn quant_table(quality: u8) -> Result<[f64; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(Error::invalid(format!(
            "quality {quality} outside [1, 100]"
        )));
    }
    let scale = if quality < 50 {
        5000.0 / quality as f64
    } else {
        200.0 - 2.0 * quality as f64
    };
    let mut table = [0.0f64; 64];
    for (out, &base) in table.iter_mut().zip(&LUMA_QUANT) {
        *out = ((base * scale + 50.0) / 100.0).floor().clamp(1.0, 255.0);
    }
    Ok(table)
}

/// Orthonormal 8x8 DCT-II basis matrix.
fn dct_matrix() -> [[f64; 8]; 8] {
    let mut t = [[0.0f64; 8]; 8];
    for (u, row) in t.iter_mut().enumerate() {
        let c = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = 0.5 * c * ((2.0 * x as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    t
}

/// F = T f T^T (forward) or f = T^T F T (inverse).
fn dct_2d(block: &[[f64; 8]; 8], t: &[[f64; 8]; 8], inverse: bool) -> [[f64; 8]; 8] {
    let mut tmp = [[0.0f64; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let mut acc = 0.0;
            for k in 0..8 {
                let left = if inverse { t[k][i] } else { t[i][k] };
                acc += left * block[k][j];
            }
            tmp[i][j] = acc;
        }
    }
    let mut out = [[0.0f64; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let mut acc = 0.0;
            for k in 0..8 {
                let right = if inverse { t[k][j] } else { t[j][k] };
                acc += tmp[i][k] * right;
            }
            out[i][j] = acc;
        }
    }
    out
}

/// In-memory DCT-quantization round trip at the given quality, per channel,
/// edge blocks padded by replication.
pub fn jpeg_like_defense(x: &Image, quality: u8) -> Result<Image> {
    let table = quant_table(quality)?;
    let t = dct_matrix();
    let (h, w, channels) = x.shape();
    let mut out = ChannelField::zeros(h, w, channels);

    for ch in 0..channels {
        for by in (0..h).step_by(8) {
            for bx in (0..w).step_by(8) {
                // Load one block, replicating the last row/col past the edge,
                // shifted into the signed 0-centered 8-bit range.
                let mut block = [[0.0f64; 8]; 8];
                for (r, row) in block.iter_mut().enumerate() {
                    let sy = (by + r).min(h - 1);
                    for (c, v) in row.iter_mut().enumerate() {
                        let sx = (bx + c).min(w - 1);
                        *v = x.get(sy, sx, ch) * 255.0 - 128.0;
                    }
                }
                let mut coeffs = dct_2d(&block, &t, false);
                for (r, row) in coeffs.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        let q = table[r * 8 + c];
                        *v = (*v / q).round() * q;
                    }
                }
                let rebuilt = dct_2d(&coeffs, &t, true);
                for (r, row) in rebuilt.iter().enumerate() {
                    let sy = by + r;
                    if sy >= h {
                        break;
                    }
                    for (c, &v) in row.iter().enumerate() {
                        let sx = bx + c;
                        if sx >= w {
                            break;
                        }
                        out.set(sy, sx, ch, ((v + 128.0) / 255.0).clamp(0.0, 1.0));
                    }
                }
            }
        }
    }
    Image::new(out)
}

/// Peak signal-to-noise ratio in dB for unit-range images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let diff = a.field().zip(b.field(), |x, y| (x - y) * (x - y))?;
    let mse = diff.values().iter().sum::<f64>() / diff.values().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * mse.log10())
}

/// Total-variation reconstruction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvSpec {
    /// TV penalty weight.
    pub weight: f64,
    /// Probability that a pixel location is dropped from the data term.
    pub drop_rate: f64,
    pub iterations: usize,
    /// Subgradient step length.
    pub step: f64,
    pub seed: u64,
}

impl TvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.weight < 0.0 {
            return Err(Error::invalid("TV weight must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return Err(Error::invalid("drop rate must lie in [0, 1]"));
        }
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(Error::invalid("step must be positive"));
        }
        Ok(())
    }
}

impl Default for TvSpec {
    fn default() -> Self {
        TvSpec {
            weight: 0.03,
            drop_rate: 0.5,
            iterations: 50,
            step: 5e-3,
            seed: 0,
        }
    }
}

/// Keep-mask over pixel locations, shared by all channels of a location.
fn keep_mask(h: usize, w: usize, drop_rate: f64, seed: u64) -> Vec<bool> {
    let rng = CounterRng::new(seed);
    (0..h * w)
        .map(|i| rng.unit_f64(i as u64) >= drop_rate)
        .collect()
}

#[inline]
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Objective: sum over kept pixels of (z - x)^2, plus `weight` times the
/// anisotropic TV of z (absolute horizontal plus vertical differences,
/// summed per channel).
pub fn tv_objective(z: &ChannelField, x: &Image, keep: &[bool], weight: f64) -> f64 {
    let (h, w, channels) = z.shape();
    let mut data = 0.0;
    let mut tv = 0.0;
    for ch in 0..channels {
        for r in 0..h {
            for c in 0..w {
                let v = z.get(r, c, ch);
                if keep[r * w + c] {
                    let d = v - x.get(r, c, ch);
                    data += d * d;
                }
                if r + 1 < h {
                    tv += (z.get(r + 1, c, ch) - v).abs();
                }
                if c + 1 < w {
                    tv += (z.get(r, c + 1, ch) - v).abs();
                }
            }
        }
    }
    data + weight * tv
}

/// Reconstructs `x` from its kept pixels by projected subgradient descent on
/// [`tv_objective`], starting from `x` itself.
pub fn tv_reconstruct(x: &Image, spec: &TvSpec) -> Result<Image> {
    spec.validate()?;
    let (h, w, channels) = x.shape();
    let keep = keep_mask(h, w, spec.drop_rate, spec.seed);
    let mut z = x.field().clone();

    for _ in 0..spec.iterations {
        let mut grad = ChannelField::zeros(h, w, channels);
        for ch in 0..channels {
            for r in 0..h {
                for c in 0..w {
                    let v = z.get(r, c, ch);
                    let mut g = 0.0;
                    if keep[r * w + c] {
                        g += 2.0 * (v - x.get(r, c, ch));
                    }
                    // Subgradients of |neighbor differences| touching (r, c).
                    if r > 0 {
                        g += spec.weight * sgn(v - z.get(r - 1, c, ch));
                    }
                    if r + 1 < h {
                        g -= spec.weight * sgn(z.get(r + 1, c, ch) - v);
                    }
                    if c > 0 {
                        g += spec.weight * sgn(v - z.get(r, c - 1, ch));
                    }
                    if c + 1 < w {
                        g -= spec.weight * sgn(z.get(r, c + 1, ch) - v);
                    }
                    grad.set(r, c, ch, g);
                }
            }
        }
        z = z.zip(&grad, |v, g| (v - spec.step * g).clamp(0.0, 1.0))?;
    }
    Image::new(z)
}
