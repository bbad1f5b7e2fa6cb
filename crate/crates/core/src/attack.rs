//! Gradient-guided fog mask optimization.
//!
//! Each iteration forms the fog image, pulls the classifier's input gradient
//! back to the mask, normalizes it by its mean absolute value, folds it into
//! a momentum accumulator, steps the mask by the sign of the accumulator,
//! and re-smooths. Pixel-space L-inf baselines (FGSM / PGD / MI-FGSM) live
//! here too for head-to-head comparisons.

use crate::classifier::{cross_entropy, Model};
use crate::error::{Error, Result};
use crate::field::ChannelField;
use crate::fog::{blend, fog_layer, formation_backward, gaussian_smooth, project01, FogMask, FogParams, Image};
use crate::noise::{fbm_field, normalize01, FbmSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMode {
    /// Push the prediction anywhere away from the true label.
    Untargeted,
    /// Pull the prediction toward a chosen label.
    Targeted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    /// Optimization iterations T.
    pub iterations: usize,
    /// Sign-step size in mask intensity units.
    pub step_size: f64,
    /// Momentum decay factor.
    pub momentum_decay: f64,
    /// Whiteness / blend strength / smoothing sigma.
    pub fog: FogParams,
    /// Octave schedule for the initial mask.
    pub fbm: FbmSpec,
    pub mode: AttackMode,
    pub seed: u64,
}

impl AttackConfig {
    pub const DEFAULT_ITERATIONS: usize = 20;
    pub const DEFAULT_STEP_SIZE: f64 = 1.0 / 255.0;
    pub const DEFAULT_MOMENTUM_DECAY: f64 = 1.0;

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iteration count must be at least 1"));
        }
        if self.step_size.is_nan() || self.step_size <= 0.0 {
            return Err(Error::invalid("step size must be positive"));
        }
        if self.momentum_decay.is_nan() || self.momentum_decay < 0.0 {
            return Err(Error::invalid("momentum decay must be nonnegative"));
        }
        Ok(())
    }
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            iterations: Self::DEFAULT_ITERATIONS,
            step_size: Self::DEFAULT_STEP_SIZE,
            momentum_decay: Self::DEFAULT_MOMENTUM_DECAY,
            fog: FogParams::default(),
            fbm: FbmSpec::default(),
            mode: AttackMode::Untargeted,
            seed: 0,
        }
    }
}

/// Mask and momentum mid-run.
#[derive(Debug, Clone)]
pub struct AttackState {
    pub mask: FogMask,
    pub momentum: ChannelField,
    pub iteration: usize,
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub adversarial: Image,
    pub mask: FogMask,
    /// Optimized objective (mean cross-entropy against the attack label) at
    /// the top of each iteration.
    pub losses: Vec<f64>,
    pub clean_prediction: usize,
    pub adversarial_prediction: usize,
    pub success: bool,
    pub mode: AttackMode,
}

/// Per-iteration mask snapshots for tests and diagnostics.
#[derive(Debug, Clone, Default)]
pub struct AttackTrace {
    /// Mask right after the sign update and projection, before smoothing.
    pub pre_smooth: Vec<ChannelField>,
    /// Mask at the iteration boundary (after smoothing and re-projection).
    pub post_iteration: Vec<FogMask>,
}

/// Initial fog mask: normalized multi-octave field replicated to every
/// channel.
pub fn init_fog_mask(
    height: usize,
    width: usize,
    channels: usize,
    fbm: &FbmSpec,
    seed: u64,
) -> Result<FogMask> {
    let plane = normalize01(&fbm_field(fbm, height, width, seed)?);
    FogMask::from_plane(&plane, channels)
}

/// Scales a gradient by the reciprocal of its mean absolute value. A nearly
/// zero gradient (mean below 1e-12) is returned unchanged rather than blown
/// up.
pub fn normalize_grad(g: &ChannelField) -> ChannelField {
    let mean = g.mean_abs();
    if mean < 1e-12 {
        return g.clone();
    }
    g.scale(1.0 / mean)
}

/// Momentum accumulation `m = decay * m_prev + g_norm`.
pub fn momentum_step(
    m_prev: &ChannelField,
    g_norm: &ChannelField,
    decay: f64,
) -> Result<ChannelField> {
    m_prev.zip(g_norm, |m, g| decay * m + g)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Signed mask step with projection back to [0, 1]. Untargeted attacks climb
/// the loss (`+step`), targeted attacks descend it (`-step`).
pub fn mask_update(
    mask: &FogMask,
    momentum: &ChannelField,
    step: f64,
    mode: AttackMode,
) -> Result<FogMask> {
    let delta = match mode {
        AttackMode::Untargeted => step,
        AttackMode::Targeted(_) => -step,
    };
    let stepped = mask
        .field()
        .zip(momentum, |c, m| (c + delta * sign(m)).clamp(0.0, 1.0))?;
    FogMask::new(stepped)
}

/// Mean of the per-model input gradients of the cross-entropy loss, which
/// equals the gradient of the mean loss.
pub fn ensemble_gradient(models: &[Model], x_adv: &Image, label: usize) -> Result<ChannelField> {
    Ok(ensemble_grad_and_loss(models, x_adv, label)?.0)
}

fn ensemble_grad_and_loss(
    models: &[Model],
    x_adv: &Image,
    label: usize,
) -> Result<(ChannelField, f64)> {
    if models.is_empty() {
        return Err(Error::invalid("ensemble needs at least one model"));
    }
    let (h, w, c) = x_adv.shape();
    let mut acc = ChannelField::zeros(h, w, c);
    let mut loss = 0.0;
    for model in models {
        let cache = model.forward_cached(x_adv)?;
        loss += cross_entropy(&cache.probs, label)?;
        let g = model.input_grad_from_cache(&cache, label)?;
        acc = acc.zip(&g, |a, b| a + b)?;
    }
    let inv = 1.0 / models.len() as f64;
    Ok((acc.scale(inv), loss * inv))
}

/// Mean of per-model probability vectors; the ensemble's prediction is its
/// argmax. Reduces to the plain model prediction for a single model.
pub fn ensemble_predict(models: &[Model], x: &Image) -> Result<usize> {
    if models.is_empty() {
        return Err(Error::invalid("ensemble needs at least one model"));
    }
    let k = models[0].num_classes();
    let mut acc = vec![0.0f64; k];
    for model in models {
        for (a, p) in acc.iter_mut().zip(model.forward(x)?) {
            *a += p;
        }
    }
    Ok(crate::classifier::argmax(&acc))
}

/// Runs the full fog-mask optimization. See [`run_attack_traced`] for the
/// variant that also returns per-iteration snapshots.
pub fn run_attack(
    models: &[Model],
    x: &Image,
    y: usize,
    cfg: &AttackConfig,
) -> Result<AttackOutcome> {
    run_attack_inner(models, x, y, cfg, None)
}

pub fn run_attack_traced(
    models: &[Model],
    x: &Image,
    y: usize,
    cfg: &AttackConfig,
) -> Result<(AttackOutcome, AttackTrace)> {
    let mut trace = AttackTrace::default();
    let outcome = run_attack_inner(models, x, y, cfg, Some(&mut trace))?;
    Ok((outcome, trace))
}

fn run_attack_inner(
    models: &[Model],
    x: &Image,
    y: usize,
    cfg: &AttackConfig,
    mut trace: Option<&mut AttackTrace>,
) -> Result<AttackOutcome> {
    cfg.validate()?;
    if models.is_empty() {
        return Err(Error::invalid("attack needs at least one model"));
    }
    let classes = models[0].num_classes();
    let io_shape = |m: &Model| {
        let c = &m.config;
        (c.input_height, c.input_width, c.input_channels, c.num_classes)
    };
    if models.iter().any(|m| io_shape(m) != io_shape(&models[0])) {
        return Err(Error::invalid(
            "ensemble models must share input shape and class count",
        ));
    }
    if y >= classes {
        return Err(Error::invalid(format!(
            "label {y} out of range for {classes} classes"
        )));
    }
    let attack_label = match cfg.mode {
        AttackMode::Untargeted => y,
        AttackMode::Targeted(t) => {
            if t >= classes {
                return Err(Error::invalid(format!(
                    "target label {t} out of range for {classes} classes"
                )));
            }
            if t == y {
                return Err(Error::invalid(
                    "targeted attack requires a target different from the true label",
                ));
            }
            t
        }
    };

    let (h, w, c) = x.shape();
    let clean_prediction = ensemble_predict(models, x)?;
    let mut state = AttackState {
        mask: init_fog_mask(h, w, c, &cfg.fbm, cfg.seed)?,
        momentum: ChannelField::zeros(h, w, c),
        iteration: 0,
    };
    let mut losses = Vec::with_capacity(cfg.iterations);

    while state.iteration < cfg.iterations {
        let fog = fog_layer(&state.mask, cfg.fog.whiteness)?;
        let adv = blend(x, &fog, cfg.fog.blend_strength)?;
        let (grad_adv, loss) = ensemble_grad_and_loss(models, &adv, attack_label)?;
        losses.push(loss);

        let grad_mask = formation_backward(&grad_adv, x, &fog, &cfg.fog)?;
        let normalized = normalize_grad(&grad_mask);
        state.momentum = momentum_step(&state.momentum, &normalized, cfg.momentum_decay)?;
        let stepped = mask_update(&state.mask, &state.momentum, cfg.step_size, cfg.mode)?;
        if let Some(t) = trace.as_deref_mut() {
            t.pre_smooth.push(stepped.field().clone());
        }
        let smoothed = gaussian_smooth(stepped.field(), cfg.fog.smooth_sigma)?;
        state.mask = FogMask::new(project01(&smoothed))?;
        state.iteration += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.post_iteration.push(state.mask.clone());
        }
    }

    let mask = state.mask;
    let fog = fog_layer(&mask, cfg.fog.whiteness)?;
    let adversarial = blend(x, &fog, cfg.fog.blend_strength)?;
    let adversarial_prediction = ensemble_predict(models, &adversarial)?;
    let success = match cfg.mode {
        AttackMode::Untargeted => adversarial_prediction != y,
        AttackMode::Targeted(t) => adversarial_prediction == t,
    };

    Ok(AttackOutcome {
        adversarial,
        mask,
        losses,
        clean_prediction,
        adversarial_prediction,
        success,
        mode: cfg.mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Fgsm,
    Pgd,
    MiFgsm,
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fgsm" => Ok(BaselineKind::Fgsm),
            "pgd" => Ok(BaselineKind::Pgd),
            "mifgsm" | "mi-fgsm" => Ok(BaselineKind::MiFgsm),
            other => Err(Error::invalid(format!("unknown baseline attack '{other}'"))),
        }
    }
}

/// Standard pixel-space L-inf attacks, untargeted. The output stays within
/// `epsilon` of the input in max norm and inside [0, 1].
pub fn baseline_attack(
    kind: BaselineKind,
    model: &Model,
    x: &Image,
    y: usize,
    epsilon: f64,
    steps: usize,
    step_size: f64,
) -> Result<Image> {
    if epsilon < 0.0 {
        return Err(Error::invalid("epsilon must be nonnegative"));
    }
    if epsilon == 0.0 {
        return Ok(x.clone());
    }
    let project = |field: &ChannelField| -> Result<Image> {
        let boxed = field.zip(x.field(), |v, orig| {
            v.clamp(orig - epsilon, orig + epsilon).clamp(0.0, 1.0)
        })?;
        Image::new(boxed)
    };
    match kind {
        BaselineKind::Fgsm => {
            let g = model.backward_input(x, y)?;
            let stepped = x.field().zip(&g, |v, gi| v + epsilon * sign(gi))?;
            project(&stepped)
        }
        BaselineKind::Pgd | BaselineKind::MiFgsm => {
            if steps == 0 || step_size.is_nan() || step_size <= 0.0 {
                return Err(Error::invalid(
                    "iterative baselines need steps >= 1 and a positive step size",
                ));
            }
            let (h, w, c) = x.shape();
            let mut adv = x.clone();
            let mut momentum = ChannelField::zeros(h, w, c);
            for _ in 0..steps {
                let g = model.backward_input(&adv, y)?;
                let direction = match kind {
                    BaselineKind::Pgd => g,
                    BaselineKind::MiFgsm => {
                        momentum = momentum_step(&momentum, &normalize_grad(&g), 1.0)?;
                        momentum.clone()
                    }
                    BaselineKind::Fgsm => unreachable!(),
                };
                let stepped = adv
                    .field()
                    .zip(&direction, |v, d| v + step_size * sign(d))?;
                adv = project(&stepped)?;
            }
            Ok(adv)
        }
    }
}
