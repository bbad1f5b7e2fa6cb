/* C interface to the fogfool toolkit. Generated by cbindgen; do not edit. */

#ifndef FOGFOOL_H
#define FOGFOOL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call in this API.
typedef enum FogStatus {
  FOG_STATUS_OK = 0,
  // A parameter violated a precondition.
  FOG_STATUS_INVALID_ARGUMENT = 1,
  // Buffer or model shapes disagree.
  FOG_STATUS_SHAPE_MISMATCH = 2,
  // A serialized artifact was malformed.
  FOG_STATUS_FORMAT_ERROR = 3,
  // A metric had a zero denominator.
  FOG_STATUS_UNDEFINED_METRIC = 4,
  FOG_STATUS_IO_ERROR = 5,
  // A required pointer was null.
  FOG_STATUS_NULL_POINTER = 6,
  // An internal panic was caught at the boundary.
  FOG_STATUS_PANIC = 7,
} FogStatus;

// Opaque trained-classifier handle.
typedef struct FogModel FogModel;

// Knobs of the fog attack; get defaults from
// [`fogfool_attack_options_default`].
typedef struct FogAttackOptions {
  // Optimization iterations.
  size_t iterations;
  // Sign-step size in mask units.
  double step_size;
  // Momentum decay factor.
  double momentum_decay;
  // Fog whiteness blend.
  double whiteness;
  // Fog-to-image blending strength.
  double blend_strength;
  // Per-iteration Gaussian smoothing sigma, pixels.
  double smooth_sigma;
  // Octaves in the initial fog field.
  size_t octaves;
  // Lattice cells per axis at the coarsest octave.
  size_t base_cells;
  // Nonzero for a targeted attack on `target_label`.
  uint8_t targeted;
  size_t target_label;
  uint64_t seed;
} FogAttackOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Crate version as a static C string.
const char *fogfool_version(void);

// Message of the calling thread's most recent failure, or null if none.
// The pointer stays valid until the thread's next failing call.
const char *fogfool_last_error(void);

// Default attack options: 20 iterations, 1/255 step, decay 1, whiteness
// 0.2, blend 0.6, sigma 0.7, 6 octaves.
struct FogAttackOptions fogfool_attack_options_default(void);

// Writes a normalized multi-octave fog field into `out` (length
// `height * width`, row-major, values in [0, 1]).
//
// # Safety
// `out` must point to at least `height * width` writable f64 slots.
enum FogStatus fogfool_noise_field(size_t height,
                                   size_t width,
                                   size_t octaves,
                                   size_t base_cells,
                                   uint64_t seed,
                                   double *out);

// Loads a FOGB checkpoint into a fresh handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable slot.
enum FogStatus fogfool_model_load(const char *path, struct FogModel **out);

// Saves a handle's model as a FOGB checkpoint.
//
// # Safety
// `model` must be a live handle from this library; `path` NUL-terminated.
enum FogStatus fogfool_model_save(const struct FogModel *model, const char *path);

// Trains a fresh toy classifier on the built-in 32x32 synthetic texture
// set and returns its handle.
//
// # Safety
// `out` must be a writable slot.
enum FogStatus fogfool_model_train_synthetic(size_t classes,
                                             size_t per_class,
                                             uint64_t data_seed,
                                             size_t conv_width,
                                             size_t epochs,
                                             double learning_rate,
                                             size_t batch_size,
                                             uint64_t seed,
                                             struct FogModel **out);

// Releases a model handle. Null is a no-op.
//
// # Safety
// `model` must have come from this library and not be freed twice.
void fogfool_model_free(struct FogModel *model);

// Reports the input geometry and class count of a model.
//
// # Safety
// All pointers must be valid; `model` must be a live handle.
enum FogStatus fogfool_model_input_shape(const struct FogModel *model,
                                         size_t *height,
                                         size_t *width,
                                         size_t *channels,
                                         size_t *classes);

// Classifies one image; writes the predicted class, and the full
// probability vector when `probs` is non-null.
//
// # Safety
// `pixels` must hold `len` readable f64; `probs`, when non-null, must hold
// one slot per class.
enum FogStatus fogfool_model_predict(const struct FogModel *model,
                                     const double *pixels,
                                     size_t len,
                                     size_t *prediction,
                                     double *probs);

// Runs the fog attack against an ensemble of models and writes the
// adversarial image (same layout and length as the input), the ensemble's
// adversarial prediction, and the success flag.
//
// # Safety
// `models` must point to `n_models` live handles; `pixels` and
// `adversarial_out` must each hold `len` f64.
enum FogStatus fogfool_attack_run(const struct FogModel *const *models,
                                  size_t n_models,
                                  const double *pixels,
                                  size_t len,
                                  size_t label,
                                  struct FogAttackOptions options,
                                  double *adversarial_out,
                                  size_t *adversarial_prediction,
                                  uint8_t *success);

// DCT-quantization defense at the given quality, in place of a file-based
// JPEG round trip. Input and output are `height * width * channels` f64.
//
// # Safety
// `pixels` and `out` must each hold `height * width * channels` f64.
enum FogStatus fogfool_defense_jpeg(const double *pixels,
                                    size_t height,
                                    size_t width,
                                    size_t channels,
                                    uint8_t quality,
                                    double *out);

// Total-variation reconstruction defense.
//
// # Safety
// `pixels` and `out` must each hold `height * width * channels` f64.
enum FogStatus fogfool_defense_tv(const double *pixels,
                                  size_t height,
                                  size_t width,
                                  size_t channels,
                                  double weight,
                                  double drop_rate,
                                  size_t iterations,
                                  double step,
                                  uint64_t seed,
                                  double *out);

// Linear centered kernel alignment between two feature matrices with the
// same row count (`x` is rows x dim_x row-major, `y` rows x dim_y).
//
// # Safety
// `x` must hold `rows * dim_x` f64, `y` `rows * dim_y`, and `out` one slot.
enum FogStatus fogfool_linear_cka(const double *x,
                                  size_t rows,
                                  size_t dim_x,
                                  const double *y,
                                  size_t dim_y,
                                  double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FOGFOOL_H */
