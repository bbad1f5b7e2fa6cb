//! A small self-contained differentiable CNN.
//!
//! Architecture: (3x3 conv -> relu -> 2x2 avg pool) twice, global average
//! pool, affine head to K logits. Trained with plain minibatch SGD. The one
//! capability everything downstream leans on is the exact reverse-mode
//! gradient of the loss with respect to the *input*.

pub mod dataset;
pub mod layers;

pub use dataset::{synth_dataset, Dataset, LabeledImage, SyntheticDatasetSpec};

use crate::error::{Error, Result};
use crate::field::ChannelField;
use crate::fog::Image;
use crate::rng::{shuffle, CounterRng};
use layers::*;

const CE_PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub input_channels: usize,
    /// Channel width of both conv layers (the surrogate-diversity knob).
    pub conv_width: usize,
    pub num_classes: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_height: 32,
            input_width: 32,
            input_channels: 3,
            conv_width: 8,
            num_classes: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub conv1_w: Vec<f32>,
    pub conv1_b: Vec<f32>,
    pub conv2_w: Vec<f32>,
    pub conv2_b: Vec<f32>,
    pub head_w: Vec<f32>,
    pub head_b: Vec<f32>,
}

/// Cached activations from one forward pass.
pub struct ForwardCache {
    input: Vec<f64>,
    conv1_pre: Vec<f64>,
    pool1: Vec<f64>,
    conv2_pre: Vec<f64>,
    pub features: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardCache {
    /// Activity pattern of every relu unit (true where the pre-activation
    /// is positive). Gradient-checking oracles use this to detect probe
    /// stencils that straddle a kink, where a central difference is not
    /// expected to match the subgradient.
    pub fn relu_activity(&self) -> Vec<bool> {
        self.conv1_pre
            .iter()
            .chain(&self.conv2_pre)
            .map(|&v| v > 0.0)
            .collect()
    }
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        if !config.input_height.is_multiple_of(4) || !config.input_width.is_multiple_of(4) {
            return Err(Error::invalid(
                "input dims must be divisible by 4 (two 2x2 pooling stages)",
            ));
        }
        if config.conv_width == 0 || config.num_classes < 2 {
            return Err(Error::invalid("need conv width >= 1 and >= 2 classes"));
        }
        let rng = CounterRng::new(config.seed);
        let uniform_init = |stream: u64, n: usize, fan_in: usize| -> Vec<f32> {
            let s = 1.0 / (fan_in as f64).sqrt();
            let r = rng.split(stream);
            (0..n).map(|i| r.range_f64(i as u64, -s, s) as f32).collect()
        };
        let w = config.conv_width;
        let c = config.input_channels;
        Ok(Model {
            config,
            conv1_w: uniform_init(0, w * c * 9, c * 9),
            conv1_b: vec![0.0; w],
            conv2_w: uniform_init(1, w * w * 9, w * 9),
            conv2_b: vec![0.0; w],
            head_w: uniform_init(2, config.num_classes * w, w),
            head_b: vec![0.0; config.num_classes],
        })
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.config.conv_width
    }

    fn check_input(&self, x: &Image) -> Result<()> {
        let want = (
            self.config.input_height,
            self.config.input_width,
            self.config.input_channels,
        );
        if x.shape() != want {
            return Err(Error::shape(format!("{want:?}"), format!("{:?}", x.shape())));
        }
        Ok(())
    }

    /// Full forward pass with cached intermediates.
    pub fn forward_cached(&self, x: &Image) -> Result<ForwardCache> {
        self.check_input(x)?;
        let (h, w) = (self.config.input_height, self.config.input_width);
        let (c, cw) = (self.config.input_channels, self.config.conv_width);
        let input = x.field().values().to_vec();

        let conv1_pre = conv3x3_forward(&input, h, w, c, cw, &self.conv1_w, &self.conv1_b);
        let relu1 = relu_forward(&conv1_pre);
        let pool1 = avgpool2_forward(&relu1, h, w, cw);

        let (h2, w2) = (h / 2, w / 2);
        let conv2_pre = conv3x3_forward(&pool1, h2, w2, cw, cw, &self.conv2_w, &self.conv2_b);
        let relu2 = relu_forward(&conv2_pre);
        let pool2 = avgpool2_forward(&relu2, h2, w2, cw);

        let (h4, w4) = (h2 / 2, w2 / 2);
        let features = gap_forward(&pool2, h4, w4, cw);
        let logits = affine_forward(&features, &self.head_w, &self.head_b, self.config.num_classes);
        let probs = softmax(&logits);

        Ok(ForwardCache {
            input,
            conv1_pre,
            pool1,
            conv2_pre,
            features,
            logits,
            probs,
        })
    }

    /// Class probability vector for one image.
    pub fn forward(&self, x: &Image) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.probs)
    }

    pub fn predict(&self, x: &Image) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Penultimate (global-average-pool) feature vector.
    pub fn features(&self, x: &Image) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.features)
    }

    /// Exact gradient of `cross_entropy(forward(x), y)` with respect to x.
    pub fn backward_input(&self, x: &Image, y: usize) -> Result<ChannelField> {
        let cache = self.forward_cached(x)?;
        self.input_grad_from_cache(&cache, y)
    }

    /// Input gradient given an already-computed cache.
    pub fn input_grad_from_cache(&self, cache: &ForwardCache, y: usize) -> Result<ChannelField> {
        if y >= self.config.num_classes {
            return Err(Error::invalid(format!(
                "label {y} out of range for {} classes",
                self.config.num_classes
            )));
        }
        let (h, w) = (self.config.input_height, self.config.input_width);
        let (c, cw) = (self.config.input_channels, self.config.conv_width);
        let (h2, w2) = (h / 2, w / 2);
        let (h4, w4) = (h2 / 2, w2 / 2);

        let grad_logits = ce_softmax_grad(&cache.probs, y);
        let grad_feat = affine_backward_input(&grad_logits, &self.head_w, cw);
        let grad_pool2 = gap_backward(&grad_feat, h4, w4, cw);
        let grad_relu2 = avgpool2_backward(&grad_pool2, h2, w2, cw);
        let grad_conv2 = relu_backward(&cache.conv2_pre, &grad_relu2);
        let grad_pool1 = conv3x3_backward_input(&grad_conv2, h2, w2, cw, cw, &self.conv2_w);
        let grad_relu1 = avgpool2_backward(&grad_pool1, h, w, cw);
        let grad_conv1 = relu_backward(&cache.conv1_pre, &grad_relu1);
        let grad_input = conv3x3_backward_input(&grad_conv1, h, w, c, cw, &self.conv1_w);
        ChannelField::new(h, w, c, grad_input)
    }

    /// Flattened view of every parameter, conv1 through head.
    pub fn parameters(&self) -> Vec<f32> {
        let mut all = Vec::new();
        all.extend_from_slice(&self.conv1_w);
        all.extend_from_slice(&self.conv1_b);
        all.extend_from_slice(&self.conv2_w);
        all.extend_from_slice(&self.conv2_b);
        all.extend_from_slice(&self.head_w);
        all.extend_from_slice(&self.head_b);
        all
    }
}

/// `-log p_y` with the probability floored at 1e-12.
pub fn cross_entropy(probs: &[f64], y: usize) -> Result<f64> {
    if y >= probs.len() {
        return Err(Error::invalid(format!(
            "label {y} out of range for {} classes",
            probs.len()
        )));
    }
    Ok(-probs[y].max(CE_PROB_FLOOR).ln())
}

/// d(cross_entropy . softmax)/d logits = p - onehot(y).
fn ce_softmax_grad(probs: &[f64], y: usize) -> Vec<f64> {
    probs
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == y { p - 1.0 } else { p })
        .collect()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 24,
            learning_rate: 0.12,
            batch_size: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// Per-parameter-tensor gradient accumulators.
struct ParamGrads {
    conv1_w: Vec<f64>,
    conv1_b: Vec<f64>,
    conv2_w: Vec<f64>,
    conv2_b: Vec<f64>,
    head_w: Vec<f64>,
    head_b: Vec<f64>,
}

impl ParamGrads {
    fn zeros_like(model: &Model) -> Self {
        ParamGrads {
            conv1_w: vec![0.0; model.conv1_w.len()],
            conv1_b: vec![0.0; model.conv1_b.len()],
            conv2_w: vec![0.0; model.conv2_w.len()],
            conv2_b: vec![0.0; model.conv2_b.len()],
            head_w: vec![0.0; model.head_w.len()],
            head_b: vec![0.0; model.head_b.len()],
        }
    }
}

/// Accumulates parameter gradients for one sample into `grads`; returns the
/// sample loss.
fn accumulate_sample(model: &Model, sample: &LabeledImage, grads: &mut ParamGrads) -> Result<f64> {
    let cfg = &model.config;
    let (h, w) = (cfg.input_height, cfg.input_width);
    let (c, cw) = (cfg.input_channels, cfg.conv_width);
    let (h2, w2) = (h / 2, w / 2);
    let (h4, w4) = (h2 / 2, w2 / 2);

    let cache = model.forward_cached(&sample.image)?;
    let loss = cross_entropy(&cache.probs, sample.label)?;

    let grad_logits = ce_softmax_grad(&cache.probs, sample.label);
    affine_backward_params(&cache.features, &grad_logits, &mut grads.head_w, &mut grads.head_b);
    let grad_feat = affine_backward_input(&grad_logits, &model.head_w, cw);
    let grad_pool2 = gap_backward(&grad_feat, h4, w4, cw);
    let grad_relu2 = avgpool2_backward(&grad_pool2, h2, w2, cw);
    let grad_conv2 = relu_backward(&cache.conv2_pre, &grad_relu2);
    conv3x3_backward_params(
        &cache.pool1,
        &grad_conv2,
        h2,
        w2,
        cw,
        cw,
        &mut grads.conv2_w,
        &mut grads.conv2_b,
    );
    let grad_pool1 = conv3x3_backward_input(&grad_conv2, h2, w2, cw, cw, &model.conv2_w);
    let grad_relu1 = avgpool2_backward(&grad_pool1, h, w, cw);
    let grad_conv1 = relu_backward(&cache.conv1_pre, &grad_relu1);
    conv3x3_backward_params(
        &cache.input,
        &grad_conv1,
        h,
        w,
        c,
        cw,
        &mut grads.conv1_w,
        &mut grads.conv1_b,
    );
    Ok(loss)
}

fn sgd_step(params: &mut [f32], grads: &[f64], lr: f64, inv_batch: f64) {
    for (p, &g) in params.iter_mut().zip(grads) {
        *p = (*p as f64 - lr * g * inv_batch) as f32;
    }
}

/// Minibatch SGD. Deterministic given the config seed: the per-epoch batch
/// order comes from a counter stream keyed on (seed, epoch).
pub fn train(model: &mut Model, data: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    if data.train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::invalid("batch size and epoch count must be positive"));
    }
    let shuffle_root = CounterRng::new(config.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        shuffle(&mut order, &shuffle_root.split(epoch as u64));
        let mut total_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = ParamGrads::zeros_like(model);
            for &idx in batch {
                total_loss += accumulate_sample(model, &data.train[idx], &mut grads)?;
            }
            let inv = 1.0 / batch.len() as f64;
            let lr = config.learning_rate;
            sgd_step(&mut model.conv1_w, &grads.conv1_w, lr, inv);
            sgd_step(&mut model.conv1_b, &grads.conv1_b, lr, inv);
            sgd_step(&mut model.conv2_w, &grads.conv2_w, lr, inv);
            sgd_step(&mut model.conv2_b, &grads.conv2_b, lr, inv);
            sgd_step(&mut model.head_w, &grads.head_w, lr, inv);
            sgd_step(&mut model.head_b, &grads.head_b, lr, inv);
        }
        epoch_loss.push(total_loss / data.train.len() as f64);
    }

    Ok(TrainReport {
        epoch_loss,
        train_accuracy: accuracy(model, &data.train)?,
        test_accuracy: accuracy(model, &data.test)?,
    })
}

pub fn accuracy(model: &Model, samples: &[LabeledImage]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot score an empty sample set"));
    }
    let mut correct = 0usize;
    for s in samples {
        if model.predict(&s.image)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}
