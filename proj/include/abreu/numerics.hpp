#pragma once

// Scalar numerical primitives: adaptive quadrature for the exponential kernels
// that drive the radial theory, and bracketed root finding / monotone
// inversion.  Everything here is deterministic: identical inputs produce
// identical bits.

#include <functional>

#include "abreu/errors.hpp"

namespace abreu {

struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_depth = 48;  // >= 1; panels are bisected at most this deep
};

struct Bracket {
  double lo;
  double hi;  // requires lo < hi
};

// Adaptive Gauss-Kronrod (7/15) panel integration of an arbitrary integrand.
// Throws QuadratureFailure if max_depth is reached with the local error still
// above tolerance, or if the integrand returns a non-finite value.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, const QuadratureSpec& spec = {});

// ∫_a^b exp((f_sign/p) s^p) s^(m-1) ds  with f_sign in {-1,+1}, p > 1, m >= 1.
// m is real: the exponentiation identity integrates s^(p-1) with real p.
double integrate_kernel(int f_sign, double p, double m, double a, double b,
                        const QuadratureSpec& spec = {});

// Same kernel with the exponent shifted by a constant:
//   ∫_a^b exp((f_sign/p) s^p - shift) s^(m-1) ds.
// The radial compatibility machinery uses shift = (f_sign/p) t^p to keep the
// integrand in representable range for f_sign = +1 at large t.
double integrate_kernel_shifted(int f_sign, double p, double m, double a,
                                double b, double shift,
                                const QuadratureSpec& spec = {});

// Root of fn on a sign-changing bracket, by bisection with secant
// acceleration.  Stops when the bracket width is <= tol.  Throws NoBracket if
// fn(lo) and fn(hi) have the same (nonzero) sign.
double find_root_bracketed(const std::function<double(double)>& fn, Bracket b,
                           double tol = 1e-12);

// Solves fn(t) = target for a strictly increasing fn on the bracket.  Throws
// InvalidInput if target lies outside [fn(lo), fn(hi)].
double invert_monotone(const std::function<double(double)>& fn, double target,
                       Bracket b, double tol = 1e-12);

}  // namespace abreu
