#ifndef TABLEGRID_H
#define TABLEGRID_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_NULL_POINTER = 1,
  TG_STATUS_INVALID_ARGUMENT = 2,
  TG_STATUS_IO = 3,
  TG_STATUS_INVALID_DATA = 4,
  TG_STATUS_NO_TABLE = 5,
  TG_STATUS_NO_SKEW_STRUCTURE = 6,
  TG_STATUS_BUFFER_TOO_SMALL = 7,
  TG_STATUS_PANIC = 8,
} TgStatus;

// Opaque table genotype handle.
typedef struct TgGenotype TgGenotype;

// Opaque raster image handle.
typedef struct TgImage TgImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *tg_last_error_message(void);

// Rounded Rec. 601 luminance of an RGB triple.
uint8_t tg_luminance(uint8_t r, uint8_t g, uint8_t b);

// Top-left offsets of a centered `target_w` x `target_h` crop.
enum TgStatus tg_crop_offsets(uint32_t width,
                              uint32_t height,
                              uint32_t target_w,
                              uint32_t target_h,
                              uint32_t *out_x,
                              uint32_t *out_y);

// Reads a PNG (or any supported format) from `path`.
enum TgStatus tg_image_load(const char *path, struct TgImage **out);

// Copies a row-major 8-bit grayscale buffer into a new image.
enum TgStatus tg_image_from_gray(uint32_t width,
                                 uint32_t height,
                                 const uint8_t *data,
                                 size_t len,
                                 struct TgImage **out);

// Writes the image as PNG.
enum TgStatus tg_image_save_png(const struct TgImage *img, const char *path);

// Image width in pixels, 0 for null.
uint32_t tg_image_width(const struct TgImage *img);

// Image height in pixels, 0 for null.
uint32_t tg_image_height(const struct TgImage *img);

// Channels per pixel (1 gray, 3 RGB), 0 for null.
uint8_t tg_image_channels(const struct TgImage *img);

// Pointer to the row-major pixel bytes (`width * height * channels`),
// valid while the handle lives. Null for null.
const uint8_t *tg_image_data(const struct TgImage *img);

void tg_image_free(struct TgImage *img);

// Renders a skeleton of `genotype` on a `canvas_w` x `canvas_h` canvas.
// `blurry` selects the gray falloff border style.
enum TgStatus tg_render_skeleton(const struct TgGenotype *genotype,
                                 bool blurry,
                                 uint32_t canvas_w,
                                 uint32_t canvas_h,
                                 struct TgImage **out);

// Estimates the table structure of a skeleton image. Pixels at or below
// `threshold` count as black; scanlines need a run of at least
// `min_frac` times the longest run.
enum TgStatus tg_estimate_structure(const struct TgImage *skeleton,
                                    uint8_t threshold,
                                    double min_frac,
                                    struct TgGenotype **out);

// Deskews an image with up to `passes` Hough passes searching within
// `max_angle` degrees. Writes the corrected image and the total correction
// in degrees.
enum TgStatus tg_deskew(const struct TgImage *img,
                        uint32_t passes,
                        double max_angle,
                        struct TgImage **out,
                        double *out_angle);

// Builds a genotype from its JSON form.
enum TgStatus tg_genotype_from_json(const char *json, struct TgGenotype **out);

// Serializes a genotype to JSON. Release the string with [`tg_string_free`].
enum TgStatus tg_genotype_to_json(const struct TgGenotype *genotype, char **out);

void tg_string_free(char *s);

// Checks that the genotype is well formed and fits the canvas.
enum TgStatus tg_genotype_validate(const struct TgGenotype *genotype,
                                   uint32_t canvas_w,
                                   uint32_t canvas_h);

// Number of nonzero row heights, 0 for null.
size_t tg_genotype_rows(const struct TgGenotype *genotype);

// Number of nonzero column widths, 0 for null.
size_t tg_genotype_cols(const struct TgGenotype *genotype);

enum TgStatus tg_genotype_origin(const struct TgGenotype *genotype, int32_t *out_x, int32_t *out_y);

// Copies the nonzero row heights into `buf` and writes their count to
// `out_len`. With a short buffer, only the count is written and
// [`TgStatus::BufferTooSmall`] is returned.
enum TgStatus tg_genotype_row_heights(const struct TgGenotype *genotype,
                                      int32_t *buf,
                                      size_t cap,
                                      size_t *out_len);

// Column counterpart of [`tg_genotype_row_heights`].
enum TgStatus tg_genotype_col_widths(const struct TgGenotype *genotype,
                                     int32_t *buf,
                                     size_t cap,
                                     size_t *out_len);

void tg_genotype_free(struct TgGenotype *genotype);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TABLEGRID_H */
