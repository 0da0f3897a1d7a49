#ifndef TDSNC_H
#define TDSNC_H

/* Generated by cbindgen from crates/tdsnc-ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TdsncStatus {
  TDSNC_STATUS_OK = 0,
  TDSNC_STATUS_NULL_POINTER = 1,
  TDSNC_STATUS_INVALID_ARGUMENT = 2,
  TDSNC_STATUS_PARSE = 3,
  TDSNC_STATUS_UNRESOLVED = 4,
  TDSNC_STATUS_UNSTABLE = 5,
  TDSNC_STATUS_IO = 6,
  TDSNC_STATUS_RESOURCE = 7,
  TDSNC_STATUS_PANIC = 8,
} TdsncStatus;

typedef enum TdsncMode {
  TDSNC_MODE_ANALYZE = 0,
  TDSNC_MODE_SIMULATE = 1,
  TDSNC_MODE_VERIFY = 2,
} TdsncMode;

typedef struct TdsncBound TdsncBound;

typedef struct TdsncCurve TdsncCurve;

typedef struct TdsncDelay TdsncDelay;

typedef struct TdsncReport TdsncReport;

typedef struct TdsncScenario TdsncScenario;

typedef struct TdsncServer TdsncServer;

typedef struct TdsncTraffic TdsncTraffic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the next failing call.
 */
const char *tdsnc_last_error(void);

/**
 * Piecewise-linear curve through `n` breakpoints, continued with `tail_slope`.
 *
 * # Safety
 * `xs` and `vs` must point to `n` readable doubles; `out` must be writable.
 */
enum TdsncStatus tdsnc_curve_new(const double *xs,
                                 const double *vs,
                                 size_t n,
                                 double tail_slope,
                                 struct TdsncCurve **out);

/**
 * # Safety
 * `c` must be NULL or a handle from this library that has not been freed.
 */
void tdsnc_curve_free(struct TdsncCurve *c);

/**
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
enum TdsncStatus tdsnc_curve_eval(const struct TdsncCurve *c, double x, double *out);

/**
 * Max-plus (`max_plus = 1`) or min-plus convolution evaluated on the grid `{0, step, .., horizon}`.
 *
 * # Safety
 * `a` and `b` must be live handles and `out` writable.
 */
enum TdsncStatus tdsnc_curve_conv(const struct TdsncCurve *a,
                                  const struct TdsncCurve *b,
                                  int32_t max_plus,
                                  double step,
                                  double horizon,
                                  struct TdsncCurve **out);

/**
 * Bounding function `min(1, a e^{-b x})`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TdsncStatus tdsnc_bound_exponential(double a, double b, struct TdsncBound **out);

/**
 * # Safety
 * `f` must be NULL or a live handle.
 */
void tdsnc_bound_free(struct TdsncBound *f);

/**
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum TdsncStatus tdsnc_bound_eval(const struct TdsncBound *f, double x, double *out);

/**
 * GCRA-shaped deterministic envelope.
 *
 * # Safety
 * `out` must be writable.
 */
enum TdsncStatus tdsnc_traffic_gcra(double t, double tau, struct TdsncTraffic **out);

/**
 * Poisson packets of rate `mu` seen by a server of constant service time `d`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TdsncStatus tdsnc_traffic_md1(double mu, double d, struct TdsncTraffic **out);

/**
 * # Safety
 * `m` must be NULL or a live handle.
 */
void tdsnc_traffic_free(struct TdsncTraffic *m);

/**
 * # Safety
 * `out` must be writable.
 */
enum TdsncStatus tdsnc_server_constant(double t, struct TdsncServer **out);

/**
 * Slotted lossy link; a negative `headroom` selects the default.
 *
 * # Safety
 * `out` must be writable.
 */
enum TdsncStatus tdsnc_server_wireless(double delta,
                                       double pe,
                                       double headroom,
                                       double step,
                                       double horizon,
                                       struct TdsncServer **out);

/**
 * # Safety
 * `m` must be NULL or a live handle.
 */
void tdsnc_server_free(struct TdsncServer *m);

/**
 * Delay bound of `traffic` through `server`; [`TdsncStatus::Unstable`] when the server is too slow.
 *
 * # Safety
 * `traffic` and `server` must be live handles and `out` writable.
 */
enum TdsncStatus tdsnc_delay_bound(const struct TdsncTraffic *traffic,
                                   const struct TdsncServer *server,
                                   double step,
                                   double horizon,
                                   struct TdsncDelay **out);

/**
 * # Safety
 * `d` must be NULL or a live handle.
 */
void tdsnc_delay_free(struct TdsncDelay *d);

/**
 * `P{delay > x}` bound.
 *
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum TdsncStatus tdsnc_delay_prob(const struct TdsncDelay *d, double x, double *out);

/**
 * Smallest grid delay violated with probability at most `eps`; infinity if none within the horizon.
 *
 * # Safety
 * `d` must be a live handle and `out` writable.
 */
enum TdsncStatus tdsnc_delay_quantile(const struct TdsncDelay *d,
                                      double eps,
                                      double step,
                                      double horizon,
                                      double *out);

/**
 * Scenario from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum TdsncStatus tdsnc_scenario_load(const char *path, struct TdsncScenario **out);

/**
 * Scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum TdsncStatus tdsnc_scenario_parse(const char *json, struct TdsncScenario **out);

/**
 * # Safety
 * `s` must be NULL or a live handle.
 */
void tdsnc_scenario_free(struct TdsncScenario *s);

/**
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum TdsncStatus tdsnc_run(const struct TdsncScenario *s,
                           enum TdsncMode mode,
                           struct TdsncReport **out);

/**
 * # Safety
 * `r` must be NULL or a live handle.
 */
void tdsnc_report_free(struct TdsncReport *r);

/**
 * `*out` is 1 if every verdict passed, 0 if one failed, -1 outside verify mode.
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
enum TdsncStatus tdsnc_report_pass(const struct TdsncReport *r, int32_t *out);

/**
 * Report as JSON. Call with a NULL `buf` to learn the size through `needed`.
 *
 * # Safety
 * `r` must be a live handle; `buf` NULL or `len` writable bytes; `needed` NULL or writable.
 */
enum TdsncStatus tdsnc_report_json(const struct TdsncReport *r,
                                   char *buf,
                                   size_t len,
                                   size_t *needed);

/**
 * Writes `report.json` and the per-property CSV files into `dir`.
 *
 * # Safety
 * `r` must be a live handle and `dir` a NUL-terminated string.
 */
enum TdsncStatus tdsnc_report_write(const struct TdsncReport *r, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDSNC_H */
