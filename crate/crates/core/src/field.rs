//! Dense value containers: 2-D scalar fields and per-channel image-shaped
//! fields. Row-major within a plane, planes stored channel-major.

use crate::error::{Error, Result};

/// A 2-D grid of real values (noise maps, single fog planes).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("field dimensions must be positive"));
        }
        if values.len() != height * width {
            return Err(Error::shape(
                format!("{}x{} = {} values", height, width, height * width),
                format!("{} values", values.len()),
            ));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(ScalarField {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        ScalarField {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    /// Builds a field by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        ScalarField {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.width + col] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// An H×W×C field of reals: images, fog masks, gradients, fog layers.
/// Plane `c` holds channel `c` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelField {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ChannelField {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::invalid("field dimensions must be positive"));
        }
        if values.len() != height * width * channels {
            return Err(Error::shape(
                format!("{}x{}x{} values", height, width, channels),
                format!("{} values", values.len()),
            ));
        }
        Ok(ChannelField {
            height,
            width,
            channels,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        ChannelField {
            height,
            width,
            channels,
            values: vec![0.0; height * width * channels],
        }
    }

    pub fn constant(height: usize, width: usize, channels: usize, v: f64) -> Self {
        ChannelField {
            height,
            width,
            channels,
            values: vec![v; height * width * channels],
        }
    }

    /// Replicates one 2-D plane across `channels` channels.
    pub fn replicate(plane: &ScalarField, channels: usize) -> Self {
        let mut values = Vec::with_capacity(plane.values().len() * channels);
        for _ in 0..channels {
            values.extend_from_slice(plane.values());
        }
        ChannelField {
            height: plane.height(),
            width: plane.width(),
            channels,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn same_shape(&self, other: &ChannelField) -> bool {
        self.shape() == other.shape()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.values[(ch * self.height + row) * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        self.values[(ch * self.height + row) * self.width + col] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn plane(&self, ch: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[ch * n..(ch + 1) * n]
    }

    pub fn plane_mut(&mut self, ch: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.values[ch * n..(ch + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ChannelField {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combine; shapes must match.
    pub fn zip(&self, other: &ChannelField, f: impl Fn(f64, f64) -> f64) -> Result<ChannelField> {
        if !self.same_shape(other) {
            return Err(Error::shape(
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(ChannelField {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn mean_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs_diff(&self, other: &ChannelField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
