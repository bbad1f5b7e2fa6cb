//! Synthetic texture dataset.
//!
//! Four parametric texture families (one per class) with per-sample jitter:
//! oriented stripes, a checkerboard, a radial gradient, and a flat field
//! with a bright blob. Pixel data is deterministic in the generator seed.

use crate::error::{Error, Result};
use crate::field::ChannelField;
use crate::fog::Image;
use crate::rng::{derive_key, CounterRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticDatasetSpec {
    pub num_classes: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl SyntheticDatasetSpec {
    pub fn new(num_classes: usize, samples_per_class: usize, seed: u64) -> Result<Self> {
        let spec = SyntheticDatasetSpec {
            num_classes,
            height: 32,
            width: 32,
            channels: 3,
            samples_per_class,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.num_classes) {
            return Err(Error::invalid(
                "class count must be between 2 and 4 (one parametric texture family per class)",
            ));
        }
        if self.samples_per_class < 5 {
            return Err(Error::invalid(
                "need at least 5 samples per class for a meaningful 80/20 split",
            ));
        }
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        Ok(())
    }
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        SyntheticDatasetSpec {
            num_classes: 4,
            height: 32,
            width: 32,
            channels: 3,
            samples_per_class: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub image: Image,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
    pub num_classes: usize,
}

/// Per-channel texture value at normalized coordinates. Each family pairs a
/// distinct spatial structure with a distinct channel signature, so classes
/// stay separable even when a gray overlay crushes overall contrast.
fn texture_value(class: usize, rng: &CounterRng, x: f64, y: f64, ch: usize) -> f64 {
    match class {
        // Oriented stripes, warm-tinted: strongest in the first channel.
        0 => {
            let angle = rng.range_f64(0, 0.3, 1.1);
            let freq = rng.range_f64(1, 4.0, 6.5);
            let phase = rng.range_f64(2, 0.0, std::f64::consts::TAU);
            let t = x * angle.cos() + y * angle.sin();
            let s = (std::f64::consts::TAU * freq * t + phase).sin();
            0.5 + [0.40, 0.30, 0.20][ch] * s
        }
        // Hard checkerboard, cool-tinted: strongest in the last channel.
        1 => {
            let cell = rng.range_f64(0, 0.10, 0.16);
            let ox = rng.range_f64(1, 0.0, 1.0);
            let oy = rng.range_f64(2, 0.0, 1.0);
            let cx = ((x + ox) / cell).floor() as i64;
            let cy = ((y + oy) / cell).floor() as i64;
            let p = if (cx + cy) % 2 == 0 { 1.0 } else { -1.0 };
            0.5 + [0.20, 0.30, 0.40][ch] * p
        }
        // Radial gradient with opposite tints at center and rim: the
        // first-vs-last channel difference sweeps the whole range.
        2 => {
            let cx = rng.range_f64(0, 0.35, 0.65);
            let cy = rng.range_f64(1, 0.35, 0.65);
            let falloff = rng.range_f64(2, 0.55, 0.85);
            let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            let t = (1.0 - r / falloff).clamp(0.0, 1.0);
            match ch {
                0 => 0.12 + 0.72 * t,
                1 => 0.30 + 0.40 * t,
                _ => 0.84 - 0.72 * t,
            }
        }
        // Flat gray background plus one gray Gaussian blob: the only class
        // with no channel differential at all.
        3 => {
            let bg = rng.range_f64(0, 0.25, 0.40);
            let amp = rng.range_f64(1, 0.40, 0.55);
            let cx = rng.range_f64(2, 0.30, 0.70);
            let cy = rng.range_f64(3, 0.30, 0.70);
            let sigma = rng.range_f64(4, 0.08, 0.15);
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            (bg + amp * (-d2 / (2.0 * sigma * sigma)).exp()).clamp(0.0, 1.0)
        }
        _ => unreachable!("class index validated against texture family count"),
    }
}

fn render_sample(spec: &SyntheticDatasetSpec, class: usize, sample: usize) -> Image {
    let key = derive_key(spec.seed, (class as u64) << 32 | sample as u64);
    let params = CounterRng::new(key);
    let noise = params.split(1);
    let (h, w, c) = (spec.height, spec.width, spec.channels);
    let mut values = vec![0.0f64; h * w * c];
    for row in 0..h {
        for col in 0..w {
            let x = (col as f64 + 0.5) / w as f64;
            let y = (row as f64 + 0.5) / h as f64;
            for ch in 0..c {
                let base = texture_value(class, &params, x, y, ch.min(2));
                // Small per-pixel speckle so samples are never bit-copies.
                let jitter = noise.range_f64(((ch * h + row) * w + col) as u64, -0.02, 0.02);
                values[(ch * h + row) * w + col] = (base + jitter).clamp(0.0, 1.0);
            }
        }
    }
    Image::new(ChannelField::new(h, w, c, values).expect("consistent dims"))
        .expect("values clamped into range")
}

/// Generates the dataset and splits it 80/20 per class, train first.
pub fn synth_dataset(spec: &SyntheticDatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.samples_per_class;
    let n_train = n * 4 / 5;
    let mut train = Vec::with_capacity(spec.num_classes * n_train);
    let mut test = Vec::with_capacity(spec.num_classes * (n - n_train));
    for class in 0..spec.num_classes {
        for sample in 0..n {
            let item = LabeledImage {
                image: render_sample(spec, class, sample),
                label: class,
            };
            if sample < n_train {
                train.push(item);
            } else {
                test.push(item);
            }
        }
    }
    Ok(Dataset {
        train,
        test,
        num_classes: spec.num_classes,
    })
}
