#ifndef TUGWAR_H
#define TUGWAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TwStatus {
  TW_STATUS_OK = 0,
  TW_STATUS_NULL_POINTER = 1,
  TW_STATUS_INVALID_INPUT = 2,
  TW_STATUS_PRECONDITION = 3,
  TW_STATUS_CERTIFICATION = 4,
  TW_STATUS_GRADIENT_DEGENERATE = 5,
  TW_STATUS_OUT_OF_DOMAIN = 6,
  TW_STATUS_IO = 7,
  TW_STATUS_PANIC = 8,
} TwStatus;

/**
 * Side selector for [`tw_hm`].
 */
typedef enum TwSide {
  TW_SIDE_PLUS = 0,
  TW_SIDE_MINUS = 1,
} TwSide;

/**
 * Solver mode selector for [`tw_solve`].
 */
typedef enum TwMode {
  TW_MODE_LIMIT_F = 0,
  TW_MODE_BOUNDED_PLUS = 1,
  TW_MODE_BOUNDED_MINUS = 2,
} TwMode;

/**
 * Market coefficients.
 */
typedef struct TwMarket TwMarket;

/**
 * Terminal payoff.
 */
typedef struct TwPayoff TwPayoff;

/**
 * Solved space-time value surface.
 */
typedef struct TwSurface TwSurface;

/**
 * Message of the last failure on this thread. Valid until the next call
 * into this library from the same thread.
 */
const char *tw_last_error(void);

/**
 * # Safety
 * `mu` and `sigma` must point to `n` readable doubles; `out` must be writable.
 */
enum TwStatus tw_market_new(size_t n,
                            const double *mu,
                            const double *sigma,
                            double r,
                            double horizon,
                            struct TwMarket **out);

/**
 * # Safety
 * `market` must be null or a handle from [`tw_market_new`] not yet freed.
 */
void tw_market_free(struct TwMarket *market);

/**
 * # Safety
 * `weights` must point to `n` readable doubles; `out` must be writable.
 */
enum TwStatus tw_payoff_basket_put(size_t n,
                                   const double *weights,
                                   double strike,
                                   struct TwPayoff **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum TwStatus tw_payoff_constant(size_t n, double value, struct TwPayoff **out);

/**
 * # Safety
 * `payoff` must be a live handle, `x` must point to `n` doubles, `out`
 * must be writable.
 */
enum TwStatus tw_payoff_value(const struct TwPayoff *payoff,
                              const double *x,
                              size_t n,
                              double *out);

/**
 * # Safety
 * `payoff` must be null or a handle from a `tw_payoff_*` constructor.
 */
void tw_payoff_free(struct TwPayoff *payoff);

/**
 * `H_m^±(ξ, p, M)` with the default direction set; `hessian` is row-major
 * `n × n`.
 *
 * # Safety
 * `market` must be live; `p` must hold `n` and `hessian` `n*n` doubles.
 */
enum TwStatus tw_hm(const struct TwMarket *market,
                    double xi,
                    const double *p,
                    const double *hessian,
                    size_t n,
                    double m,
                    enum TwSide side,
                    double *out);

/**
 * The limit operator `F(ξ, p, M)`; fails with
 * [`TwStatus::GradientDegenerate`] at `p = 0`.
 *
 * # Safety
 * As for [`tw_hm`].
 */
enum TwStatus tw_f_limit(const struct TwMarket *market,
                         double xi,
                         const double *p,
                         const double *hessian,
                         size_t n,
                         double *out);

/**
 * Solves the terminal value problem on the box `[lo, hi]` with `nx`
 * points per axis. `nt = 0` picks the step count from the CFL bound.
 *
 * # Safety
 * `market` and `payoff` must be live; `lo`, `hi`, `nx` must hold `n`
 * entries; `out` must be writable.
 */
enum TwStatus tw_solve(const struct TwMarket *market,
                       const struct TwPayoff *payoff,
                       enum TwMode mode,
                       double m,
                       const double *lo,
                       const double *hi,
                       const size_t *nx,
                       size_t n,
                       size_t nt,
                       struct TwSurface **out);

/**
 * Interpolated value at `(x, t)` on the slice nearest to `t`; fails with
 * [`TwStatus::OutOfDomain`] outside the box.
 *
 * # Safety
 * `surface` must be live, `x` must hold `n` doubles, `out` writable.
 */
enum TwStatus tw_surface_value(const struct TwSurface *surface,
                               const double *x,
                               size_t n,
                               double t,
                               double *out);

/**
 * Number of time steps of a solved surface, or 0 for a null handle.
 *
 * # Safety
 * `surface` must be null or live.
 */
size_t tw_surface_nt(const struct TwSurface *surface);

/**
 * # Safety
 * `surface` must be null or a handle from [`tw_solve`] not yet freed.
 */
void tw_surface_free(struct TwSurface *surface);

#endif  /* TUGWAR_H */
