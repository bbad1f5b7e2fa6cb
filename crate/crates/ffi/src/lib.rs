//! C ABI for the fog perturbation toolkit.
//!
//! Conventions:
//! - Every fallible function returns a [`FogStatus`]; `FOG_STATUS_OK` is 0.
//!   On failure, [`fogfool_last_error`] returns a message for the calling
//!   thread, valid until that thread's next failing call.
//! - Models are opaque handles created by the `fogfool_model_*` functions
//!   and released with [`fogfool_model_free`].
//! - Pixel buffers are f64 in [0, 1], channel-major planes: all of channel
//!   0 row-major, then channel 1, and so on. Buffer length is always
//!   `height * width * channels` of the model the call targets.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fogfool::attack::{run_attack, AttackConfig, AttackMode};
use fogfool::classifier::{synth_dataset, train, Model, ModelConfig, SyntheticDatasetSpec, TrainConfig};
use fogfool::error::Error;
use fogfool::eval::{jpeg_like_defense, linear_cka, tv_reconstruct, TvSpec};
use fogfool::field::{ChannelField, ScalarField};
use fogfool::fog::{FogParams, Image};
use fogfool::noise::{fbm_field, normalize01, FbmSpec};

/// Result code of every fallible call in this API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FogStatus {
    Ok = 0,
    /// A parameter violated a precondition.
    InvalidArgument = 1,
    /// Buffer or model shapes disagree.
    ShapeMismatch = 2,
    /// A serialized artifact was malformed.
    FormatError = 3,
    /// A metric had a zero denominator.
    UndefinedMetric = 4,
    IoError = 5,
    /// A required pointer was null.
    NullPointer = 6,
    /// An internal panic was caught at the boundary.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstring = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn fail(err: &Error) -> FogStatus {
    set_error(err.to_string());
    match err {
        Error::InvalidArgument(_) => FogStatus::InvalidArgument,
        Error::ShapeMismatch { .. } => FogStatus::ShapeMismatch,
        Error::Format(_) => FogStatus::FormatError,
        Error::UndefinedMetric(_) => FogStatus::UndefinedMetric,
        Error::Io(_) => FogStatus::IoError,
    }
}

fn null_pointer(what: &str) -> FogStatus {
    set_error(format!("{what} must not be null"));
    FogStatus::NullPointer
}

/// Runs `body` with panics converted to `FOG_STATUS_PANIC`.
fn guarded(body: impl FnOnce() -> FogStatus) -> FogStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            FogStatus::Panic
        }
    }
}

/// Opaque trained-classifier handle.
pub struct FogModel {
    inner: Model,
}

/// Knobs of the fog attack; get defaults from
/// [`fogfool_attack_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FogAttackOptions {
    /// Optimization iterations.
    pub iterations: usize,
    /// Sign-step size in mask units.
    pub step_size: f64,
    /// Momentum decay factor.
    pub momentum_decay: f64,
    /// Fog whiteness blend.
    pub whiteness: f64,
    /// Fog-to-image blending strength.
    pub blend_strength: f64,
    /// Per-iteration Gaussian smoothing sigma, pixels.
    pub smooth_sigma: f64,
    /// Octaves in the initial fog field.
    pub octaves: usize,
    /// Lattice cells per axis at the coarsest octave.
    pub base_cells: usize,
    /// Nonzero for a targeted attack on `target_label`.
    pub targeted: u8,
    pub target_label: usize,
    pub seed: u64,
}

/// Crate version as a static C string.
#[no_mangle]
pub extern "C" fn fogfool_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the calling thread's most recent failure, or null if none.
/// The pointer stays valid until the thread's next failing call.
#[no_mangle]
pub extern "C" fn fogfool_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Default attack options: 20 iterations, 1/255 step, decay 1, whiteness
/// 0.2, blend 0.6, sigma 0.7, 6 octaves.
#[no_mangle]
pub extern "C" fn fogfool_attack_options_default() -> FogAttackOptions {
    FogAttackOptions {
        iterations: AttackConfig::DEFAULT_ITERATIONS,
        step_size: AttackConfig::DEFAULT_STEP_SIZE,
        momentum_decay: AttackConfig::DEFAULT_MOMENTUM_DECAY,
        whiteness: FogParams::DEFAULT_WHITENESS,
        blend_strength: FogParams::DEFAULT_BLEND_STRENGTH,
        smooth_sigma: FogParams::DEFAULT_SMOOTH_SIGMA,
        octaves: FbmSpec::DEFAULT_OCTAVES,
        base_cells: FbmSpec::DEFAULT_BASE_CELLS,
        targeted: 0,
        target_label: 0,
        seed: 0,
    }
}

/// Writes a normalized multi-octave fog field into `out` (length
/// `height * width`, row-major, values in [0, 1]).
///
/// # Safety
/// `out` must point to at least `height * width` writable f64 slots.
#[no_mangle]
pub unsafe extern "C" fn fogfool_noise_field(
    height: usize,
    width: usize,
    octaves: usize,
    base_cells: usize,
    seed: u64,
    out: *mut f64,
) -> FogStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let spec = match FbmSpec::new(octaves, base_cells) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        match fbm_field(&spec, height, width, seed) {
            Ok(field) => {
                let normed = normalize01(&field);
                unsafe {
                    std::ptr::copy_nonoverlapping(normed.values().as_ptr(), out, height * width);
                }
                FogStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

unsafe fn path_from(ptr: *const c_char) -> Result<std::path::PathBuf, FogStatus> {
    if ptr.is_null() {
        return Err(null_pointer("path"));
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(std::path::PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8".to_string());
            Err(FogStatus::InvalidArgument)
        }
    }
}

/// Loads a FOGB checkpoint into a fresh handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable slot.
#[no_mangle]
pub unsafe extern "C" fn fogfool_model_load(
    path: *const c_char,
    out: *mut *mut FogModel,
) -> FogStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(status) => return status,
    };
    guarded(|| match fogfool::io::load_model(&path) {
        Ok(model) => {
            unsafe { *out = Box::into_raw(Box::new(FogModel { inner: model })) };
            FogStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Saves a handle's model as a FOGB checkpoint.
///
/// # Safety
/// `model` must be a live handle from this library; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fogfool_model_save(
    model: *const FogModel,
    path: *const c_char,
) -> FogStatus {
    if model.is_null() {
        return null_pointer("model");
    }
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(status) => return status,
    };
    let model = unsafe { &*model };
    guarded(|| match fogfool::io::save_model(&model.inner, &path) {
        Ok(()) => FogStatus::Ok,
        Err(e) => fail(&e),
    })
}

/// Trains a fresh toy classifier on the built-in 32x32 synthetic texture
/// set and returns its handle.
///
/// # Safety
/// `out` must be a writable slot.
#[no_mangle]
pub unsafe extern "C" fn fogfool_model_train_synthetic(
    classes: usize,
    per_class: usize,
    data_seed: u64,
    conv_width: usize,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
    out: *mut *mut FogModel,
) -> FogStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    guarded(|| {
        let build = || -> fogfool::Result<Model> {
            let spec = SyntheticDatasetSpec::new(classes, per_class, data_seed)?;
            let data = synth_dataset(&spec)?;
            let mut model = Model::new(ModelConfig {
                conv_width,
                num_classes: classes,
                seed,
                ..ModelConfig::default()
            })?;
            train(
                &mut model,
                &data,
                &TrainConfig {
                    epochs,
                    learning_rate,
                    batch_size,
                    seed,
                },
            )?;
            Ok(model)
        };
        match build() {
            Ok(model) => {
                unsafe { *out = Box::into_raw(Box::new(FogModel { inner: model })) };
                FogStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fogfool_model_free(model: *mut FogModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Reports the input geometry and class count of a model.
///
/// # Safety
/// All pointers must be valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fogfool_model_input_shape(
    model: *const FogModel,
    height: *mut usize,
    width: *mut usize,
    channels: *mut usize,
    classes: *mut usize,
) -> FogStatus {
    if model.is_null() {
        return null_pointer("model");
    }
    if height.is_null() || width.is_null() || channels.is_null() || classes.is_null() {
        return null_pointer("shape outputs");
    }
    let cfg = unsafe { &(*model).inner.config };
    unsafe {
        *height = cfg.input_height;
        *width = cfg.input_width;
        *channels = cfg.input_channels;
        *classes = cfg.num_classes;
    }
    FogStatus::Ok
}

unsafe fn image_from(model: &Model, pixels: *const f64, len: usize) -> Result<Image, FogStatus> {
    let cfg = &model.config;
    let expect = cfg.input_height * cfg.input_width * cfg.input_channels;
    if len != expect {
        set_error(format!("pixel buffer holds {len} values, model expects {expect}"));
        return Err(FogStatus::ShapeMismatch);
    }
    let values = unsafe { std::slice::from_raw_parts(pixels, len) }.to_vec();
    let field = ChannelField::new(cfg.input_height, cfg.input_width, cfg.input_channels, values)
        .map_err(|e| fail(&e))?;
    Image::new(field).map_err(|e| fail(&e))
}

/// Classifies one image; writes the predicted class, and the full
/// probability vector when `probs` is non-null.
///
/// # Safety
/// `pixels` must hold `len` readable f64; `probs`, when non-null, must hold
/// one slot per class.
#[no_mangle]
pub unsafe extern "C" fn fogfool_model_predict(
    model: *const FogModel,
    pixels: *const f64,
    len: usize,
    prediction: *mut usize,
    probs: *mut f64,
) -> FogStatus {
    if model.is_null() {
        return null_pointer("model");
    }
    if pixels.is_null() || prediction.is_null() {
        return null_pointer("pixels/prediction");
    }
    let model = unsafe { &(*model).inner };
    guarded(|| {
        let image = match unsafe { image_from(model, pixels, len) } {
            Ok(img) => img,
            Err(status) => return status,
        };
        match model.forward(&image) {
            Ok(p) => {
                unsafe {
                    *prediction = fogfool::classifier::argmax(&p);
                    if !probs.is_null() {
                        std::ptr::copy_nonoverlapping(p.as_ptr(), probs, p.len());
                    }
                }
                FogStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Runs the fog attack against an ensemble of models and writes the
/// adversarial image (same layout and length as the input), the ensemble's
/// adversarial prediction, and the success flag.
///
/// # Safety
/// `models` must point to `n_models` live handles; `pixels` and
/// `adversarial_out` must each hold `len` f64.
#[no_mangle]
pub unsafe extern "C" fn fogfool_attack_run(
    models: *const *const FogModel,
    n_models: usize,
    pixels: *const f64,
    len: usize,
    label: usize,
    options: FogAttackOptions,
    adversarial_out: *mut f64,
    adversarial_prediction: *mut usize,
    success: *mut u8,
) -> FogStatus {
    if models.is_null() || pixels.is_null() || adversarial_out.is_null() {
        return null_pointer("models/pixels/adversarial_out");
    }
    if adversarial_prediction.is_null() || success.is_null() {
        return null_pointer("result outputs");
    }
    if n_models == 0 {
        set_error("ensemble needs at least one model".to_string());
        return FogStatus::InvalidArgument;
    }
    let handles = unsafe { std::slice::from_raw_parts(models, n_models) };
    if handles.iter().any(|h| h.is_null()) {
        return null_pointer("every model handle");
    }
    let owned: Vec<Model> = handles
        .iter()
        .map(|&h| unsafe { (*h).inner.clone() })
        .collect();

    guarded(|| {
        let image = match unsafe { image_from(&owned[0], pixels, len) } {
            Ok(img) => img,
            Err(status) => return status,
        };
        let build = || -> fogfool::Result<AttackConfig> {
            Ok(AttackConfig {
                iterations: options.iterations,
                step_size: options.step_size,
                momentum_decay: options.momentum_decay,
                fog: FogParams::new(
                    options.whiteness,
                    options.blend_strength,
                    options.smooth_sigma,
                )?,
                fbm: FbmSpec::new(options.octaves, options.base_cells)?,
                mode: if options.targeted != 0 {
                    AttackMode::Targeted(options.target_label)
                } else {
                    AttackMode::Untargeted
                },
                seed: options.seed,
            })
        };
        let cfg = match build() {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        match run_attack(&owned, &image, label, &cfg) {
            Ok(outcome) => {
                unsafe {
                    std::ptr::copy_nonoverlapping(
                        outcome.adversarial.field().values().as_ptr(),
                        adversarial_out,
                        len,
                    );
                    *adversarial_prediction = outcome.adversarial_prediction;
                    *success = u8::from(outcome.success);
                }
                FogStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

unsafe fn free_image_from(
    pixels: *const f64,
    height: usize,
    width: usize,
    channels: usize,
) -> Result<Image, FogStatus> {
    let len = height * width * channels;
    let values = unsafe { std::slice::from_raw_parts(pixels, len) }.to_vec();
    let field = ChannelField::new(height, width, channels, values).map_err(|e| fail(&e))?;
    Image::new(field).map_err(|e| fail(&e))
}

/// DCT-quantization defense at the given quality, in place of a file-based
/// JPEG round trip. Input and output are `height * width * channels` f64.
///
/// # Safety
/// `pixels` and `out` must each hold `height * width * channels` f64.
#[no_mangle]
pub unsafe extern "C" fn fogfool_defense_jpeg(
    pixels: *const f64,
    height: usize,
    width: usize,
    channels: usize,
    quality: u8,
    out: *mut f64,
) -> FogStatus {
    if pixels.is_null() || out.is_null() {
        return null_pointer("pixels/out");
    }
    guarded(|| {
        let image = match unsafe { free_image_from(pixels, height, width, channels) } {
            Ok(img) => img,
            Err(status) => return status,
        };
        match jpeg_like_defense(&image, quality) {
            Ok(defended) => {
                unsafe {
                    std::ptr::copy_nonoverlapping(
                        defended.field().values().as_ptr(),
                        out,
                        height * width * channels,
                    );
                }
                FogStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Total-variation reconstruction defense.
///
/// # Safety
/// `pixels` and `out` must each hold `height * width * channels` f64.
#[no_mangle]
pub unsafe extern "C" fn fogfool_defense_tv(
    pixels: *const f64,
    height: usize,
    width: usize,
    channels: usize,
    weight: f64,
    drop_rate: f64,
    iterations: usize,
    step: f64,
    seed: u64,
    out: *mut f64,
) -> FogStatus {
    if pixels.is_null() || out.is_null() {
        return null_pointer("pixels/out");
    }
    guarded(|| {
        let image = match unsafe { free_image_from(pixels, height, width, channels) } {
            Ok(img) => img,
            Err(status) => return status,
        };
        let spec = TvSpec {
            weight,
            drop_rate,
            iterations,
            step,
            seed,
        };
        match tv_reconstruct(&image, &spec) {
            Ok(defended) => {
                unsafe {
                    std::ptr::copy_nonoverlapping(
                        defended.field().values().as_ptr(),
                        out,
                        height * width * channels,
                    );
                }
                FogStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Linear centered kernel alignment between two feature matrices with the
/// same row count (`x` is rows x dim_x row-major, `y` rows x dim_y).
///
/// # Safety
/// `x` must hold `rows * dim_x` f64, `y` `rows * dim_y`, and `out` one slot.
#[no_mangle]
pub unsafe extern "C" fn fogfool_linear_cka(
    x: *const f64,
    rows: usize,
    dim_x: usize,
    y: *const f64,
    dim_y: usize,
    out: *mut f64,
) -> FogStatus {
    if x.is_null() || y.is_null() || out.is_null() {
        return null_pointer("x/y/out");
    }
    guarded(|| {
        let build = || -> fogfool::Result<f64> {
            let xs = unsafe { std::slice::from_raw_parts(x, rows * dim_x) }.to_vec();
            let ys = unsafe { std::slice::from_raw_parts(y, rows * dim_y) }.to_vec();
            linear_cka(
                &ScalarField::new(rows, dim_x, xs)?,
                &ScalarField::new(rows, dim_y, ys)?,
            )
        };
        match build() {
            Ok(v) => {
                unsafe { *out = v };
                FogStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
