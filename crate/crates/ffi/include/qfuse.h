#ifndef QFUSE_H
#define QFUSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Dataset presets for the decomposition weights.
 */
typedef enum QfusePreset {
  QFUSE_PRESET_LYTRO = 0,
  QFUSE_PRESET_MFFW = 1,
  QFUSE_PRESET_MFI_WHU = 2,
} QfusePreset;

/**
 * Result codes of every fallible call.
 */
typedef enum QfuseStatus {
  QFUSE_STATUS_OK = 0,
  QFUSE_STATUS_NULL_POINTER = 1,
  QFUSE_STATUS_INVALID_ARGUMENT = 2,
  QFUSE_STATUS_SHAPE_MISMATCH = 3,
  QFUSE_STATUS_IO = 4,
  QFUSE_STATUS_NUMERICAL = 5,
  QFUSE_STATUS_PANIC = 6,
} QfuseStatus;

/**
 * Fusion parameters.
 */
typedef struct QfuseConfig QfuseConfig;

/**
 * Quaternion image; color images are pure quaternions `r·i + g·j + b·k`.
 */
typedef struct QfuseImage QfuseImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *qfuse_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qfuse_version(void);

/**
 * Builds an image from `width·height` interleaved row-major RGB triples in
 * `[0, 1]` (values outside are clamped).
 *
 * # Safety
 * `rgb` must point to `3·width·height` readable doubles; `out` must be writable.
 */
enum QfuseStatus qfuse_image_from_rgb(const double *rgb,
                                      size_t width,
                                      size_t height,
                                      struct QfuseImage **out);

/**
 * Reads a PNG or JPEG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QfuseStatus qfuse_image_read(const char *path, struct QfuseImage **out);

/**
 * Writes the imaginary parts as an 8-bit RGB PNG.
 *
 * # Safety
 * `img` must be a live handle; `path` a NUL-terminated string.
 */
enum QfuseStatus qfuse_image_write_png(const struct QfuseImage *img, const char *path);

/**
 * # Safety
 * `img` must be null or a live handle.
 */
size_t qfuse_image_width(const struct QfuseImage *img);

/**
 * # Safety
 * `img` must be null or a live handle.
 */
size_t qfuse_image_height(const struct QfuseImage *img);

/**
 * Copies interleaved RGB (the i, j, k parts clamped to `[0, 1]`) into `out`,
 * which must hold `len ≥ 3·width·height` doubles.
 *
 * # Safety
 * `img` must be a live handle; `out` must point to `len` writable doubles.
 */
enum QfuseStatus qfuse_image_to_rgb(const struct QfuseImage *img, double *out, size_t len);

/**
 * Copies the raw quaternions, row-major, as `(real, i, j, k)` quadruples into
 * `out`, which must hold `len ≥ 4·width·height` doubles.
 *
 * # Safety
 * `img` must be a live handle; `out` must point to `len` writable doubles.
 */
enum QfuseStatus qfuse_image_quaternions(const struct QfuseImage *img, double *out, size_t len);

/**
 * # Safety
 * `img` must be null or a handle not freed before.
 */
void qfuse_image_free(struct QfuseImage *img);

/**
 * Default parameters.
 */
struct QfuseConfig *qfuse_config_new(void);

/**
 * Parameters from a flat JSON run configuration (for example
 * `{"preset": "mffw", "max_iter": 30}`); path fields are ignored.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum QfuseStatus qfuse_config_from_json(const char *json, struct QfuseConfig **out);

/**
 * Sets `(α, β, λ)` from a preset.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum QfuseStatus qfuse_config_set_preset(struct QfuseConfig *cfg, enum QfusePreset preset);

/**
 * Caps the decomposition iterations.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum QfuseStatus qfuse_config_set_max_iter(struct QfuseConfig *cfg, size_t max_iter);

/**
 * # Safety
 * `cfg` must be null or a handle not freed before.
 */
void qfuse_config_free(struct QfuseConfig *cfg);

/**
 * Fuses `n ≥ 2` equally sized images. A null `cfg` means defaults.
 *
 * # Safety
 * `inputs` must point to `n` live image handles; `out` must be writable.
 */
enum QfuseStatus qfuse_fuse(const struct QfuseImage *const *inputs,
                            size_t n,
                            const struct QfuseConfig *cfg,
                            struct QfuseImage **out);

/**
 * Splits an image into base, detail and noise layers (`I = B + D + E`).
 * Any of the output pointers may be null to discard that layer;
 * `iterations` (nullable) receives the iteration count.
 *
 * # Safety
 * `img` must be a live handle; non-null outputs must be writable.
 */
enum QfuseStatus qfuse_decompose(const struct QfuseImage *img,
                                 const struct QfuseConfig *cfg,
                                 struct QfuseImage **base,
                                 struct QfuseImage **detail,
                                 struct QfuseImage **noise,
                                 size_t *iterations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFUSE_H */
