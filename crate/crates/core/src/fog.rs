//! Differentiable fog image formation.
//!
//! The forward chain is: whiteness-blend the mask into a fog layer, blend
//! the layer into the clean image, clamp to the valid pixel range. The
//! backward pass propagates gradients back to the mask exactly, with a zero
//! subgradient wherever the forward clamp saturated. Gaussian smoothing of
//! the mask is a regularization post-step and sits outside the
//! differentiated chain.

use crate::error::{Error, Result};
use crate::field::{ChannelField, ScalarField};

/// Clean input or adversarial output; values confined to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    field: ChannelField,
}

impl Image {
    pub fn new(field: ChannelField) -> Result<Self> {
        if !field.values().iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::invalid("image values must lie in [0, 1]"));
        }
        Ok(Image { field })
    }

    /// Clamps into range instead of rejecting.
    pub fn from_field_clamped(field: ChannelField) -> Self {
        Image {
            field: project01(&field),
        }
    }

    pub fn field(&self) -> &ChannelField {
        &self.field
    }

    pub fn into_field(self) -> ChannelField {
        self.field
    }

    pub fn height(&self) -> usize {
        self.field.height()
    }

    pub fn width(&self) -> usize {
        self.field.width()
    }

    pub fn channels(&self) -> usize {
        self.field.channels()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.field.shape()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.field.get(row, col, ch)
    }
}

/// The optimization variable: a per-channel fog intensity field in [0, 1]
/// with the same shape as the attacked image.
#[derive(Debug, Clone, PartialEq)]
pub struct FogMask {
    field: ChannelField,
}

impl FogMask {
    pub fn new(field: ChannelField) -> Result<Self> {
        if !field.values().iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::invalid("fog mask values must lie in [0, 1]"));
        }
        Ok(FogMask { field })
    }

    /// Replicates one [0, 1] plane across all channels.
    pub fn from_plane(plane: &ScalarField, channels: usize) -> Result<Self> {
        FogMask::new(ChannelField::replicate(plane, channels))
    }

    pub fn field(&self) -> &ChannelField {
        &self.field
    }

    pub fn into_field(self) -> ChannelField {
        self.field
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.field.shape()
    }
}

/// Fog formation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogParams {
    /// Whiteness intensity of the fog layer.
    pub whiteness: f64,
    /// Blending strength of the fog layer into the image.
    pub blend_strength: f64,
    /// Standard deviation of the per-iteration mask smoothing, in pixels.
    pub smooth_sigma: f64,
}

impl FogParams {
    pub const DEFAULT_WHITENESS: f64 = 0.2;
    pub const DEFAULT_BLEND_STRENGTH: f64 = 0.6;
    pub const DEFAULT_SMOOTH_SIGMA: f64 = 0.7;

    pub fn new(whiteness: f64, blend_strength: f64, smooth_sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&whiteness) {
            return Err(Error::invalid("whiteness must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&blend_strength) {
            return Err(Error::invalid("blend strength must lie in [0, 1]"));
        }
        if smooth_sigma.is_nan() || smooth_sigma <= 0.0 {
            return Err(Error::invalid("smoothing sigma must be positive"));
        }
        Ok(FogParams {
            whiteness,
            blend_strength,
            smooth_sigma,
        })
    }
}

impl Default for FogParams {
    fn default() -> Self {
        FogParams {
            whiteness: Self::DEFAULT_WHITENESS,
            blend_strength: Self::DEFAULT_BLEND_STRENGTH,
            smooth_sigma: Self::DEFAULT_SMOOTH_SIGMA,
        }
    }
}

/// Fog layer `F = (1 - w) * C + w * 1`: the mask pulled toward white.
pub fn fog_layer(mask: &FogMask, whiteness: f64) -> Result<ChannelField> {
    if !(0.0..=1.0).contains(&whiteness) {
        return Err(Error::invalid("whiteness must lie in [0, 1]"));
    }
    Ok(mask.field().map(|c| (1.0 - whiteness) * c + whiteness))
}

/// Adversarial composition `clamp01(b * F + (1 - b) * x)`.
pub fn blend(x: &Image, fog: &ChannelField, blend_strength: f64) -> Result<Image> {
    if !(0.0..=1.0).contains(&blend_strength) {
        return Err(Error::invalid("blend strength must lie in [0, 1]"));
    }
    if blend_strength == 0.0 {
        // Degenerate blend must reproduce the input bit-exactly.
        return Ok(x.clone());
    }
    let composed = x
        .field()
        .zip(fog, |xi, fi| blend_strength * fi + (1.0 - blend_strength) * xi)?;
    Ok(Image::from_field_clamped(composed))
}

/// Elementwise clamp to [0, 1].
pub fn project01(field: &ChannelField) -> ChannelField {
    field.map(|v| v.clamp(0.0, 1.0))
}

/// 1-D Gaussian taps at integer offsets |t| <= ceil(3 sigma), normalized to
/// sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::invalid("sigma must be positive"));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|t| (-(t * t) as f64 * inv).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for w in &mut taps {
        *w /= sum;
    }
    Ok(taps)
}

#[inline]
fn reflect(idx: isize, len: usize) -> usize {
    let n = len as isize;
    let mut i = idx;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

fn convolve_rows(plane: &mut [f64], height: usize, width: usize, kernel: &[f64]) {
    let radius = (kernel.len() / 2) as isize;
    let mut row_buf = vec![0.0f64; width];
    for r in 0..height {
        let row = &plane[r * width..(r + 1) * width];
        for (c, out) in row_buf.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let src = reflect(c as isize + k as isize - radius, width);
                acc += w * row[src];
            }
            *out = acc;
        }
        plane[r * width..(r + 1) * width].copy_from_slice(&row_buf);
    }
}

fn convolve_cols(plane: &mut [f64], height: usize, width: usize, kernel: &[f64]) {
    let radius = (kernel.len() / 2) as isize;
    let mut col_buf = vec![0.0f64; height];
    for c in 0..width {
        for (r, out) in col_buf.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let src = reflect(r as isize + k as isize - radius, height);
                acc += w * plane[src * width + c];
            }
            *out = acc;
        }
        for (r, &v) in col_buf.iter().enumerate() {
            plane[r * width + c] = v;
        }
    }
}

/// Separable Gaussian convolution per channel with reflect padding.
pub fn gaussian_smooth(field: &ChannelField, sigma: f64) -> Result<ChannelField> {
    let kernel = gaussian_kernel(sigma)?;
    let (height, width, channels) = field.shape();
    let mut out = field.clone();
    for ch in 0..channels {
        let plane = out.plane_mut(ch);
        convolve_rows(plane, height, width, &kernel);
        convolve_cols(plane, height, width, &kernel);
    }
    Ok(out)
}

/// Pulls a gradient on the adversarial image back to the fog mask.
///
/// The chain is d(adv)/dF = b and dF/dC = 1 - w, so interior pixels scale by
/// b(1 - w). Where the forward clamp saturated (pre-clamp value strictly
/// outside [0, 1]) the propagated gradient is zero.
pub fn formation_backward(
    grad_wrt_adv: &ChannelField,
    x: &Image,
    fog: &ChannelField,
    params: &FogParams,
) -> Result<ChannelField> {
    if !grad_wrt_adv.same_shape(x.field()) || !grad_wrt_adv.same_shape(fog) {
        return Err(Error::shape(
            format!("{:?}", grad_wrt_adv.shape()),
            format!("{:?} / {:?}", x.shape(), fog.shape()),
        ));
    }
    let scale = params.blend_strength * (1.0 - params.whiteness);
    let b = params.blend_strength;
    let n = grad_wrt_adv.values().len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let pre = b * fog.values()[i] + (1.0 - b) * x.field().values()[i];
        if (0.0..=1.0).contains(&pre) {
            out.push(scale * grad_wrt_adv.values()[i]);
        } else {
            out.push(0.0);
        }
    }
    let (h, w, c) = grad_wrt_adv.shape();
    ChannelField::new(h, w, c, out)
}
