#ifndef QTRACK_H
#define QTRACK_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

#define QTRACK_OK 0

/*
 A required pointer argument was null.
 */
#define QTRACK_ERR_NULL 1

/*
 A numeric argument is outside the operation's domain.
 */
#define QTRACK_ERR_DOMAIN 2

#define QTRACK_ERR_INVALID 3

/*
 The hypothesis grid exceeds the decoding budget.
 */
#define QTRACK_ERR_BUDGET 4

#define QTRACK_ERR_LENGTH 5

/*
 Information density undefined or empty capacity-achieving set.
 */
#define QTRACK_ERR_UNDEFINED 6

/*
 A Rust panic was caught at the boundary.
 */
#define QTRACK_ERR_PANIC 7

#define QTRACK_PRIOR_UNIFORM 0

#define QTRACK_PRIOR_WORST_CASE_GRID 1

#define QTRACK_PRIOR_REPRESENTATIVE 2

/*
 A measurement-dependent binary symmetric channel.
 */
typedef struct QtrackChannel QtrackChannel;

/*
 A planned grid, codebook and decoder.
 */
typedef struct QtrackScheme QtrackScheme;

/*
 Capacity, capacity-achieving inputs and dispersion of a channel.
 */
typedef struct QtrackStats QtrackStats;

/*
 One row of [`qtrack_simulate`] output.
 */
typedef struct QtrackSummary {
  double delta;
  /*
   `-log(delta) / n` in nats per query.
   */
  double rate;
  uint64_t trials;
  uint64_t excess;
  double p_hat;
  double ci_low;
  double ci_high;
  /*
   Gaussian approximation at the same resolution.
   */
  double eps_hat;
} QtrackSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failure on this thread, or null if none.

 The pointer stays valid until the next failing call on the same thread.
 */
const char *qtrack_last_error_message(void);

/*
 Library version as a static nul-terminated string.
 */
const char *qtrack_version(void);

/*
 Location on the unit torus at time `t` of a target that starts at `s`
 with velocity `v`.
 */
double qtrack_locate(double s, double v, double t);

/*
 Creates a channel with crossover `zeta * (slope * |A| + intercept)`.

 # Safety
 `out_channel` must be a valid pointer to writable storage for one handle.
 */
int qtrack_channel_new(double zeta,
                       double slope,
                       double intercept,
                       struct QtrackChannel **out_channel);

/*
 # Safety
 `channel` must be null or a handle from [`qtrack_channel_new`] not yet freed.
 */
void qtrack_channel_free(struct QtrackChannel *channel);

/*
 Crossover probability for a query of Lebesgue measure `measure`.

 # Safety
 Pointers must be valid.
 */
int qtrack_channel_crossover(const struct QtrackChannel *channel,
                             double measure,
                             double *out_crossover);

/*
 Computes capacity and dispersion statistics of `channel`.

 # Safety
 Pointers must be valid.
 */
int qtrack_stats_compute(const struct QtrackChannel *channel, struct QtrackStats **out_stats);

/*
 # Safety
 `stats` must be null or a handle from [`qtrack_stats_compute`] not yet freed.
 */
void qtrack_stats_free(struct QtrackStats *stats);

/*
 Capacity in nats per query, or NaN for a null handle.

 # Safety
 `stats` must be null or a live handle.
 */
double qtrack_stats_capacity(const struct QtrackStats *stats);

/*
 Smallest capacity-achieving input probability.

 # Safety
 Pointers must be valid.
 */
int qtrack_stats_p_star(const struct QtrackStats *stats, double *out_p);

/*
 Dispersion selected for target probability `eps` (max over the
 capacity-achieving set for `eps <= 1/2`, min otherwise).

 # Safety
 Pointers must be valid.
 */
int qtrack_stats_dispersion(const struct QtrackStats *stats, double eps, double *out_dispersion);

/*
 Critical decay rate `C / (2d)`, or NaN for a null handle.

 # Safety
 `stats` must be null or a live handle.
 */
double qtrack_critical_rate(size_t d, const struct QtrackStats *stats);

/*
 Natural log of the approximate minimal resolution for `n` queries in
 `d` dimensions at excess probability `eps`.

 # Safety
 Pointers must be valid.
 */
int qtrack_log_resolution_approx(size_t n,
                                 size_t d,
                                 double eps,
                                 const struct QtrackStats *stats,
                                 double *out_log_delta);

/*
 Approximate excess-resolution probability at `log(delta)`.

 # Safety
 Pointers must be valid.
 */
int qtrack_excess_prob_approx(size_t n,
                              size_t d,
                              double log_delta,
                              const struct QtrackStats *stats,
                              double *out_eps);

/*
 Wilson score interval for `k` successes out of `trials`.

 # Safety
 Pointers must be valid.
 */
int qtrack_wilson_ci(uint64_t k, uint64_t trials, double level, double *out_low, double *out_high);

/*
 Plans the hypothesis grid for resolution `delta` and draws the query
 codebook with bias `p` from `seed`.

 # Safety
 Pointers must be valid.
 */
int qtrack_scheme_new(const struct QtrackChannel *channel,
                      double delta,
                      size_t n,
                      size_t d,
                      double v_max,
                      double p,
                      uint64_t seed,
                      uint64_t budget,
                      struct QtrackScheme **out_scheme);

/*
 # Safety
 `scheme` must be null or a handle from [`qtrack_scheme_new`] not yet freed.
 */
void qtrack_scheme_free(struct QtrackScheme *scheme);

/*
 Number of hypotheses, or 0 for a null handle.

 # Safety
 `scheme` must be null or a live handle.
 */
size_t qtrack_scheme_hypotheses(const struct QtrackScheme *scheme);

/*
 Noiseless answers `x_1..x_n` for a target; `s` and `v` hold `d` values
 each, `out_bits` has room for `n`.

 # Safety
 Pointers must be valid for the stated lengths.
 */
int qtrack_scheme_answers(const struct QtrackScheme *scheme,
                          const double *s,
                          const double *v,
                          size_t d,
                          uint8_t *out_bits,
                          size_t n);

/*
 Decodes `n` noisy answers. Writes the hypothesis index and, when the
 pointers are non-null, its `d` location and velocity estimates.

 # Safety
 Pointers must be valid for the stated lengths.
 */
int qtrack_scheme_decode(const struct QtrackScheme *scheme,
                         const uint8_t *y,
                         size_t n,
                         size_t *out_index,
                         double *out_s_hat,
                         double *out_v_hat);

/*
 Monte Carlo excess-resolution estimate for each of `n_deltas`
 resolutions. `prior` is one of the `QTRACK_PRIOR_*` constants;
 `grid_points` is used by the worst-case grid. `p <= 0` selects the
 smallest capacity-achieving input. `out_rows` has room for `n_deltas`.

 # Safety
 Pointers must be valid for the stated lengths.
 */
int qtrack_simulate(const struct QtrackChannel *channel,
                    size_t n,
                    size_t d,
                    double v_max,
                    const double *deltas,
                    size_t n_deltas,
                    size_t trials,
                    uint64_t seed,
                    int prior,
                    size_t grid_points,
                    double p,
                    struct QtrackSummary *out_rows);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTRACK_H */
