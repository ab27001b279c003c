#ifndef WARPSPEC_H
#define WARPSPEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; the first five match the CLI exit codes.
typedef enum WsStatus {
  WS_STATUS_OK = 0,
  WS_STATUS_IO = 1,
  WS_STATUS_CONFIG = 2,
  WS_STATUS_NUMERICAL = 3,
  WS_STATUS_VERIFICATION = 4,
  WS_STATUS_NULL_POINTER = 5,
  WS_STATUS_INVALID_ARGUMENT = 6,
  WS_STATUS_PANIC = 7,
} WsStatus;

// Parsed run configuration.
typedef struct WsConfig WsConfig;

// Sampled spinor field.
typedef struct WsGrid WsGrid;

// Quantized torus with the model it was built from.
typedef struct WsTorus WsTorus;

// Plain-data view of a torus.
typedef struct WsTorusSummary {
  uint32_t nu1;
  int32_t nu2;
  double energy;
  double p_phi;
  double r_minus;
  double r_plus;
  double period;
  double omega1;
  double omega2;
  double action;
} WsTorusSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *ws_version(void);

// Message of the last failed call on this thread; empty after a success.
// Valid until the next `ws_*` call on the same thread.
const char *ws_last_error_message(void);

// Default configuration (the built-in example).
//
// # Safety
// `out` must be valid for a pointer write.
enum WsStatus ws_config_default(struct WsConfig **out);

// Parses a TOML configuration.
//
// # Safety
// `text` must be a NUL-terminated string and `out` valid for a pointer write.
enum WsStatus ws_config_from_str(const char *text, struct WsConfig **out);

// # Safety
// `cfg` must come from a `ws_config_*` constructor or be null.
void ws_config_free(struct WsConfig *cfg);

// Quantizes the configured torus.
//
// # Safety
// `cfg` must be a live handle and `out` valid for a pointer write.
enum WsStatus ws_torus_quantize(const struct WsConfig *cfg, struct WsTorus **out);

// # Safety
// `torus` must be a live handle and `out` valid for a write.
enum WsStatus ws_torus_summary(const struct WsTorus *torus, struct WsTorusSummary *out);

// Spectral correction `lambda` on the torus.
//
// # Safety
// `torus` must be a live handle and `out` valid for a write.
enum WsStatus ws_torus_lambda(const struct WsTorus *torus, double *out);

// # Safety
// `torus` must come from [`ws_torus_quantize`] or be null.
void ws_torus_free(struct WsTorus *torus);

// Runs the full pipeline and samples the spinor field on the configured grid.
//
// # Safety
// `cfg` must be a live handle and `out` valid for a pointer write.
enum WsStatus ws_field_grid(const struct WsConfig *cfg, struct WsGrid **out);

// Grid size and window `[x_min, x_max, y_min, y_max]`; any output may be null.
//
// # Safety
// `grid` must be a live handle; `window`, if not null, must hold 4 doubles.
enum WsStatus ws_grid_dims(const struct WsGrid *grid, size_t *nx, size_t *ny, double *window);

// Copies `|Psi|^2` into `buf`, row-major with `y` increasing.
//
// # Safety
// `grid` must be a live handle and `buf` valid for `len` doubles.
enum WsStatus ws_grid_density(const struct WsGrid *grid, double *buf, size_t len);

// # Safety
// `grid` must come from [`ws_field_grid`] or be null.
void ws_grid_free(struct WsGrid *grid);

// `Ai(x)` and `Ai'(x)`; either output may be null.
//
// # Safety
// Non-null outputs must be valid for a write.
enum WsStatus ws_airy(double x, double *ai, double *ai_prime);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WARPSPEC_H */
