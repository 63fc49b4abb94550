#ifndef SUBLEVEL_L2_H
#define SUBLEVEL_L2_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_INPUT = 2,
  // The requested integral is infinite; the out value is set to +inf.
  SL_STATUS_DIVERGED = 3,
  SL_STATUS_NUMERICAL = 4,
  SL_STATUS_PANIC = 5,
} SlStatus;

typedef struct SlDomain SlDomain;

typedef struct SlFunction SlFunction;

typedef struct SlWeight SlWeight;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread; valid until the next
// failing call. Never null.
const char *sl_last_error_message(void);

// Polydisc with the given radii.
//
// # Safety
// `radii` must point to `n` doubles; `out_domain` must be writable.
enum SlStatus sl_domain_polydisc(const double *radii, size_t n, struct SlDomain **out_domain);

// Euclidean ball of `radius` in `C^dim`.
//
// # Safety
// `out_domain` must be writable.
enum SlStatus sl_domain_ball(double radius, size_t dim, struct SlDomain **out_domain);

// # Safety
// `domain` must come from a constructor above and not be freed twice.
void sl_domain_free(struct SlDomain *domain);

// `Σ c_j log|z_j|` with nonnegative coefficients.
//
// # Safety
// `coeffs` must point to `n` doubles; `out_weight` must be writable.
enum SlStatus sl_weight_toric(const double *coeffs, size_t n, struct SlWeight **out_weight);

// # Safety
// `weight` must come from [`sl_weight_toric`] and not be freed twice.
void sl_weight_free(struct SlWeight *weight);

// The zero polynomial in `dim` variables.
//
// # Safety
// `out_function` must be writable.
enum SlStatus sl_function_new(size_t dim, struct SlFunction **out_function);

// Adds `(re + i·im)·z^exponent`; repeated exponents accumulate.
//
// # Safety
// `function` must be a live handle; `exponent` must point to `n` values.
enum SlStatus sl_function_add_term(struct SlFunction *function,
                                   const uint32_t *exponent,
                                   size_t n,
                                   double re,
                                   double im);

// # Safety
// `function` must come from [`sl_function_new`] and not be freed twice.
void sl_function_free(struct SlFunction *function);

// `∫_{D ∩ {ψ < −t}} |z^α|² e^{−φ}`; `phi` may be null for `φ ≡ 0`.
//
// # Safety
// Handles must be live; `alpha` must point to `n` values; `out_value`
// must be writable.
enum SlStatus sl_monomial_mass(const uint32_t *alpha,
                               size_t n,
                               const struct SlDomain *domain,
                               const struct SlWeight *psi,
                               double t,
                               const struct SlWeight *phi,
                               double *out_value);

// Minimal `∫ |F|² e^{−φ}` over `D ∩ {ψ < −t}` among `F` with
// `F − f ∈ I(ψ + φ)`, by the exact orthogonal solver.
//
// # Safety
// Handles must be live (`phi` may be null); `out_value` must be writable.
enum SlStatus sl_minimal_l2(const struct SlFunction *function,
                            const struct SlDomain *domain,
                            const struct SlWeight *psi,
                            double t,
                            const struct SlWeight *phi,
                            double *out_value);

// `sup{c : |f|² e^{−2cφ} integrable near 0}`; `+inf` when unbounded.
//
// # Safety
// Handles must be live; `out_value` must be writable.
enum SlStatus sl_jumping_number(const struct SlFunction *function,
                                const struct SlWeight *phi,
                                double *out_value);

// Mass ratio `∫_D |f|² e^{−φ} / C` and the membership threshold `p*`.
// `out_passed` is 1 when the membership grid below `p*` agrees with the
// closed-form multiplier ideals.
//
// # Safety
// Handles must be live; out pointers must be writable.
enum SlStatus sl_effectiveness(const struct SlFunction *function,
                               const struct SlWeight *phi,
                               const struct SlDomain *domain,
                               double *out_ratio,
                               double *out_p_star,
                               int32_t *out_passed);

// `u = −log(1−e^{−t})`, `s = t/(1−e^{−t}) − 1` and the two ODE residuals.
//
// # Safety
// Out pointers must be writable.
enum SlStatus sl_ode_pair(double t,
                          double *out_u,
                          double *out_s,
                          double *out_residual1,
                          double *out_residual2);

// `1 − e^{−(t0+B)}`.
//
// # Safety
// `out_value` must be writable.
enum SlStatus sl_gz_factor(double t0, double b, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBLEVEL_L2_H */
