#ifndef YOCCOZ_H
#define YOCCOZ_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum YzStatus {
  YZ_STATUS_OK = 0,
  YZ_STATUS_NULL_POINTER = 1,
  // Bad argument, configuration or precondition.
  YZ_STATUS_INVALID_ARGUMENT = 2,
  YZ_STATUS_NUMERICAL = 3,
  YZ_STATUS_COMBINATORICS = 4,
  YZ_STATUS_UNDER_RESOLVED = 5,
  // Exact angle arithmetic ran out before the requested depth.
  YZ_STATUS_TRUNCATED = 6,
  // Malformed JSON or I/O failure.
  YZ_STATUS_SERIALIZATION = 7,
  // The output buffer is too small; the required length was written.
  YZ_STATUS_BUFFER_TOO_SMALL = 8,
  YZ_STATUS_PANIC = 9,
} YzStatus;

// A principal nest.
typedef struct YzNest YzNest;

// A puzzle or parapuzzle piece.
typedef struct YzPiece YzPiece;

// A grid estimate at `resolution` and half of it.
typedef struct YzEstimate {
  uintptr_t resolution;
  double value;
  double coarse;
  double richardson;
  double residual;
} YzEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty after a success. Valid until the
// next call into the library on the same thread.
const char *yz_last_error(void);

// Static name of a status code.
const char *yz_status_name(enum YzStatus status);

// The real Fibonacci parameter.
//
// # Safety
// `out` must be valid for a write.
enum YzStatus yz_fibonacci_parameter(double *out);

// The superstable center `c_n` (`1 <= n <= 11`) and its residual.
//
// # Safety
// `c` and `residual` must be valid for writes.
enum YzStatus yz_superstable_center(uintptr_t n, double *c, double *residual);

// Green's function of `z^2 + c` at `z`, default escape-time settings.
//
// # Safety
// `out` must be valid for a write.
enum YzStatus yz_green(double c_re, double c_im, double z_re, double z_im, double *out);

// Green's function of the Mandelbrot set at `c`.
//
// # Safety
// `out` must be valid for a write.
enum YzStatus yz_parameter_green(double c_re, double c_im, double *out);

// Build the principal nest of `z^2 + c` to `depth` with the default profile. A nest
// stopped early still comes back in `out`, with status `Truncated`.
//
// # Safety
// `out` must be valid for a write; the handle is freed with [`yz_nest_free`].
enum YzStatus yz_nest_build(double c_re,
                            double c_im,
                            uintptr_t depth,
                            double equip_level,
                            struct YzNest **out);

// # Safety
// `nest` is null or a handle from [`yz_nest_build`] not yet freed.
void yz_nest_free(struct YzNest *nest);

// Depth actually built.
//
// # Safety
// `nest` is a live handle; `out` valid for a write.
enum YzStatus yz_nest_depth(const struct YzNest *nest, uintptr_t *out);

// Copy of the central piece `V(n,0)`.
//
// # Safety
// `nest` is a live handle; `out` valid for a write. Free the piece with
// [`yz_piece_free`].
enum YzStatus yz_nest_central(const struct YzNest *nest, uintptr_t n, struct YzPiece **out);

// Parse a piece from NUL-terminated JSON.
//
// # Safety
// `json` is a valid C string; `out` valid for a write.
enum YzStatus yz_piece_from_json(const char *json, struct YzPiece **out);

// Serialize a piece; free the string with [`yz_string_free`].
//
// # Safety
// `piece` is a live handle; `out` valid for a write.
enum YzStatus yz_piece_to_json(const struct YzPiece *piece, char **out);

// # Safety
// `s` is null or a string returned by this library, not yet freed.
void yz_string_free(char *s);

// # Safety
// `piece` is null or a live handle.
void yz_piece_free(struct YzPiece *piece);

// Boundary vertices as interleaved `re, im` pairs. `*len` is set to the vertex count;
// if `capacity` (in vertices) is smaller, nothing is copied and `BufferTooSmall` is
// returned. `xy` may be null when `capacity` is 0.
//
// # Safety
// `piece` is a live handle; `xy` valid for `2 * capacity` doubles; `len` for a write.
enum YzStatus yz_piece_boundary(const struct YzPiece *piece,
                                double *xy,
                                uintptr_t capacity,
                                uintptr_t *len);

// Whether `z` lies inside the piece.
//
// # Safety
// `piece` is a live handle; `out` valid for a write.
enum YzStatus yz_piece_contains(const struct YzPiece *piece, double re, double im, bool *out);

// Modulus of the annulus between two nested pieces.
//
// # Safety
// Both pieces are live handles; `out` valid for a write.
enum YzStatus yz_modulus(const struct YzPiece *outer,
                         const struct YzPiece *inner,
                         uintptr_t resolution,
                         double solver_tol,
                         struct YzEstimate *out);

// Capacity of a piece at infinity or at the interior point `(re, im)`.
//
// # Safety
// `piece` is a live handle; `out` valid for a write.
enum YzStatus yz_capacity(const struct YzPiece *piece,
                          bool at_infinity,
                          double re,
                          double im,
                          uintptr_t resolution,
                          double solver_tol,
                          struct YzEstimate *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* YOCCOZ_H */
