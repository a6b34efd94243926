#ifndef DIMMATCH_H
#define DIMMATCH_H

#include <stddef.h>
#include <stdint.h>

// Convolution backend selector.
typedef enum DimConvMode {
  DIM_CONV_MODE_AUTO = 0,
  DIM_CONV_MODE_DIRECT = 1,
  DIM_CONV_MODE_FOURIER = 2,
} DimConvMode;

typedef enum DimColorspace {
  DIM_COLORSPACE_GRAY = 0,
  DIM_COLORSPACE_RGB = 1,
  DIM_COLORSPACE_CIE_LAB = 2,
  DIM_COLORSPACE_HSV = 3,
} DimColorspace;

// Result code of every fallible call.
typedef enum DimStatus {
  DIM_STATUS_OK = 0,
  DIM_STATUS_NULL_POINTER = 1,
  DIM_STATUS_INVALID_ARGUMENT = 2,
  DIM_STATUS_IO = 3,
  DIM_STATUS_DEGENERATE_TEMPLATE = 4,
  DIM_STATUS_DIMENSION_MISMATCH = 5,
  DIM_STATUS_OUT_OF_BOUNDS = 6,
  DIM_STATUS_INTERNAL = 7,
} DimStatus;

// Additional-template placement strategy.
typedef enum DimStrategy {
  DIM_STRATEGY_MAX_CORRELATION = 0,
  DIM_STRATEGY_KEYPOINT = 1,
  DIM_STRATEGY_RANDOM = 2,
} DimStrategy;

// Opaque handle to a set of same-size similarity maps.
typedef struct DimField DimField;

// Opaque image handle.
typedef struct DimImage DimImage;

// Matcher settings. Start from `dim_params_default()`.
typedef struct DimMatchParams {
  double epsilon2;
  // Values <= 0 derive epsilon1 from the template bank.
  double epsilon1;
  // 0 selects the default schedule.
  size_t iterations;
  double lambda;
  double sigma_scale;
  enum DimConvMode conv_mode;
  // Colourspace colour images are converted to.
  enum DimColorspace colorspace;
} DimMatchParams;

// Axis-aligned box: top-left corner and size in pixels.
typedef struct DimBox {
  int64_t x;
  int64_t y;
  int64_t w;
  int64_t h;
} DimBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dim_version(void);

// Message of the last failure on this thread (empty if none). Valid until
// the next failing call on the same thread.
const char *dim_last_error(void);

// Default matcher settings.
struct DimMatchParams dim_params_default(void);

// Creates an image from `width * height * channels` interleaved samples in
// `[0, 1]`. `channels` is 1 or 3.
//
// # Safety
// `data` must point to `len` readable doubles; `out` must be writable.
enum DimStatus dim_image_new(size_t width,
                             size_t height,
                             size_t channels,
                             const double *data,
                             size_t len,
                             struct DimImage **out);

// Loads a PNG, PNM or JPEG file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DimStatus dim_image_load(const char *path, struct DimImage **out);

// Releases an image. Null is ignored.
//
// # Safety
// `img` must come from this library and not be used afterwards.
void dim_image_free(struct DimImage *img);

// # Safety
// `img` must be a live handle; output pointers may be null to skip a value.
enum DimStatus dim_image_dims(const struct DimImage *img,
                              size_t *width,
                              size_t *height,
                              size_t *channels);

// DIM similarity of the `target` region of `source` over `query`, with
// `n_additional` further regions of `source` competing as non-target
// templates. Map 0 of the result belongs to the target.
//
// # Safety
// Handles must be live; `additional` must hold `n_additional` boxes (may be
// null when zero); `params` may be null for defaults; `out` must be writable.
enum DimStatus dim_match(const struct DimImage *query,
                         const struct DimImage *source,
                         struct DimBox target,
                         const struct DimBox *additional,
                         size_t n_additional,
                         const struct DimMatchParams *params,
                         struct DimField **out);

// DIM with additional templates chosen automatically from `source`.
//
// # Safety
// As [`dim_match`].
enum DimStatus dim_match_auto(const struct DimImage *query,
                              const struct DimImage *source,
                              struct DimBox target,
                              enum DimStrategy strategy,
                              size_t max_additional,
                              uint64_t seed,
                              const struct DimMatchParams *params,
                              struct DimField **out);

// Summed per-channel ZNCC of the `target` region of `source` over `query`,
// after converting colour images to `space`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum DimStatus dim_zncc_match(const struct DimImage *query,
                              const struct DimImage *source,
                              struct DimBox target,
                              enum DimColorspace space,
                              struct DimField **out);

// Number of maps and their size.
//
// # Safety
// `field` must be live; output pointers may be null to skip a value.
enum DimStatus dim_field_info(const struct DimField *field,
                              size_t *count,
                              size_t *width,
                              size_t *height);

// Copies map `index` row by row into `buffer` (`len` = width * height).
//
// # Safety
// `field` must be live; `buffer` must hold `len` writable doubles.
enum DimStatus dim_field_copy(const struct DimField *field,
                              size_t index,
                              double *buffer,
                              size_t len);

// Location and value of the largest entry of map `index` (first in raster
// order on ties).
//
// # Safety
// `field` must be live; output pointers may be null to skip a value.
enum DimStatus dim_field_argmax(const struct DimField *field,
                                size_t index,
                                size_t *x,
                                size_t *y,
                                double *score);

// Releases a field. Null is ignored.
//
// # Safety
// `field` must come from this library and not be used afterwards.
void dim_field_free(struct DimField *field);

// Chooses up to `capacity` non-overlapping boxes of the target's size that
// avoid the target; `written` receives the count.
//
// # Safety
// `img` must be live; `boxes` must hold `capacity` writable boxes (may be
// null when zero); `written` must be writable.
enum DimStatus dim_select_additional(const struct DimImage *img,
                                     struct DimBox target,
                                     enum DimStrategy strategy,
                                     uint64_t seed,
                                     struct DimBox *boxes,
                                     size_t capacity,
                                     size_t *written);

// Intersection over union; NaN if either box has a non-positive size.
double dim_iou(struct DimBox a, struct DimBox b);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIMMATCH_H */
