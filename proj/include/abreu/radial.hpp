#pragma once

#include <optional>
#include <string>
#include <vector>

#include "abreu/errors.hpp"
#include "abreu/numerics.hpp"

namespace abreu {

// Radial reduction on the unit ball: u(x) = v(|x|), slope g = v', and
// w = (det D^2 u)^{-1} = psi * exp((f/p) * (g(r)^p - g(1)^p)).
// The boundary slope g(1) solves the scalar compatibility equation
//   H(t) = I(t),  H(t) = int_0^t e^{(f/p) s^p} s^{n-1} ds,
//                 I(t) = (1/(n psi)) e^{(f/p) t^p}.

enum class Regime { F_NEG, P_LT_N, P_EQ_N, P_GT_N };

const char* regime_name(Regime r);

struct RadialProblem {
  int n = 2;         // dimension, >= 2
  double p = 2.0;    // gradient exponent, > 1
  int f_sign = 1;    // sign of the constant lower-order coefficient
  double psi = 1.0;  // boundary value of w, > 0
  double phi = 0.0;  // boundary value of u

  void validate() const;
  Regime regime() const;  // from (f_sign, p vs n)
};

struct CompatibilityAnalysis {
  Regime regime = Regime::F_NEG;
  std::vector<double> roots;          // admissible g(1) values, increasing
  std::optional<double> threshold_M;  // P_GT_N only
  double scan_max = 0.0;              // upper end of the interval actually scanned
  double scan_step = 0.0;
  bool closed_form_used = false;   // P_EQ_N root from the exact formula
  bool tangency_suspected = false; // near-tangent sign pattern in the scan
  std::string note;
};

struct RadialSample {
  double r = 0.0;
  double slope = 0.0;  // g(r) = v'(r)
  double v = 0.0;
  double w = 0.0;
  double det = 0.0;  // det D^2 u = 1/w
};

struct RadialSolution {
  RadialProblem problem;
  double g1 = 0.0;
  std::vector<RadialSample> samples;  // uniform in r, r=0 and r=1 included
};

// H(t): exact exp/expm1 branch when p == n, adaptive quadrature otherwise.
double kernel_H(double t, const RadialProblem& prob,
                const QuadratureSpec& spec = {});

// I(t) = (1/(n psi)) e^{(f/p) t^p}; closed form for both signs.
double kernel_I(double t, const RadialProblem& prob);

// Scaled residual with the same roots as H - I but bounded for f=+1:
//   f=+1:  e^{-t^p/p} H(t) - 1/(n psi)
//   f=-1:  H(t) - e^{-t^p/p}/(n psi)
double compat_residual(const RadialProblem& prob, double t,
                       const QuadratureSpec& spec = {});

// Existence bound for p > n: psi >= threshold_M(n, p) guarantees a root in (0,1).
double threshold_M(int n, double p, const QuadratureSpec& spec = {});

// Enumerates admissible boundary slopes by a sign-change scan of the scaled
// residual on [0, scan_max] plus bracketed refinement.  Scans past scan_max
// when the regime guarantees a root beyond it (F_NEG, P_LT_N, and P_EQ_N with
// psi > 1/n).  P_EQ_N uses the closed form and cross-checks it against the
// scan.  An empty root list is a result, not an error.
CompatibilityAnalysis solve_compatibility(const RadialProblem& prob,
                                          double scan_max = 10.0,
                                          double scan_step = 1e-3,
                                          const QuadratureSpec& spec = {});

// Reconstructs the full profile for a given compatibility root g1:
// slope by monotone inversion of the integrated equation, w by
// exponentiation, v by cumulative Simpson with v(1) = phi, det = 1/w.
// Refuses a g1 that fails the compatibility equation beyond tolerance.
RadialSolution solve_profile(const RadialProblem& prob, double g1,
                             int r_samples = 512,
                             const QuadratureSpec& spec = {});

// Max over interior samples of |lhs - rhs| of the first-order slope equation
//   e^{(f/p) g^p} g^{n-1} g' = (1/psi) e^{(f/p) g1^p} r^{n-1}
// with g' by centered differences.  O(h^2) small for genuine solutions.
double residual_ode(const RadialSolution& sol);

// Tightest constants with c_lo * r <= slope(r) <= c_hi * r over samples with
// r > 0.  c_lo = 0 flags a degenerate (non-convex) profile.
std::pair<double, double> check_linear_growth(const RadialSolution& sol);

}  // namespace abreu
