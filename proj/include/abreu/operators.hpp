#pragma once

// Pointwise algebra for the fourth-order system: cofactor matrices,
// elementary symmetric functions of the Hessian, and the right-hand side
// families of the linearized Monge-Ampere equation.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>

#include "abreu/errors.hpp"

namespace abreu {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Snapshot of (Du, D^2u) at one point, with the derived determinant and
// cofactor matrix.  Invariant: cof * hess = det * I (exactly in exact
// arithmetic; to ~1e-10 relative in floating point for sane inputs).
struct PointState {
  Vector grad;
  Matrix hess;
  double det = 0.0;
  Matrix cof;

  int dim() const { return static_cast<int>(hess.rows()); }
  static PointState make(Vector grad, Matrix hess);
};

// Cofactor matrix of a symmetric matrix: entry (i,j) is d(det H)/d(H_ij)
// for the symmetric off-diagonal pairs counted once, i.e. the adjugate.
// Defined for singular input too (then cof * H = 0).
Matrix cofactor(const Matrix& hess);

// Elementary symmetric function S_k of the eigenvalues, 0 <= k <= n.
// S_0 = 1, S_1 = trace, S_n = det.
double elementary_symmetric(const Matrix& hess, int k);

enum class RhsKind { LAPLACIAN_SCALED, P_LAPLACIAN, NEWTON, CLAMPED };

// The right-hand side F of  U^ij w_ij = F:
//   LAPLACIAN_SCALED: F = f(x) * tr(D^2 u)
//   P_LAPLACIAN:      F = f_sign * div(|Du|^(p-2) Du)
//                       = f_sign * [ (p-2)|Du|^(p-4) <D^2u Du, Du>
//                                    + |Du|^(p-2) tr(D^2u) ]
//   NEWTON:           F = -(tr)^(1/(n-1)) det^((n-2)/(n-1)) f
//                         - S_k^(1/(k(n-1))) det^((n-2)/(n-1)) g,
//                     with 0 <= f, g <= 1 and 1 <= k <= n-1
//   CLAMPED:          F = -(tr)^(1/(n-1)) det^((n-2)/(n-1)) * f_gamma, where
//                     f_gamma clamps gamma * (wrapped F) as in rhs_clamped
struct RhsModel {
  RhsKind kind = RhsKind::LAPLACIAN_SCALED;
  double p = 2.0;      // P_LAPLACIAN exponent (> 1)
  int f_sign = +1;     // P_LAPLACIAN sign
  double f_const = 1.0;
  std::function<double(const Vector&)> f_field;  // overrides f_const when set
  double g_const = 0.0;  // NEWTON only
  int k = 1;             // NEWTON only, 1 <= k <= n-1
  double gamma = 0.0;    // CLAMPED only, > 0
  std::shared_ptr<const RhsModel> wrapped;  // CLAMPED only

  double f_at(const Vector& x) const { return f_field ? f_field(x) : f_const; }

  static RhsModel laplacian_scaled(double f);
  static RhsModel laplacian_scaled(std::function<double(const Vector&)> f);
  static RhsModel p_laplacian(double p, int f_sign);
  static RhsModel newton(double f, double g, int k);
  static RhsModel clamped(RhsModel inner, double gamma);
  static RhsModel zero() { return laplacian_scaled(0.0); }
};

struct RhsEval {
  double value = 0.0;
  bool regularized = false;  // P_LAPLACIAN with p < 2 hit the |Du| floor
};

struct ClampEval {
  double value = 0.0;  // f_gamma in [0,1]
  bool active = false; // true when the min picked 1
};

// Evaluate F at a state.  NEWTON and CLAMPED require tr(D^2u) > 0 and
// det > 0 (throws InvalidInput otherwise).  P_LAPLACIAN with p < 2 at a
// vanishing gradient is evaluated with |Du| floored at machine epsilon and
// flagged.
RhsEval rhs_evaluate(const RhsModel& model, const PointState& st,
                     const Vector& x);

// f_gamma = min{ -gamma * F_wrapped / [ (tr)^(1/(n-1)) det^((n-2)/(n-1)) ], 1 }.
// Requires tr(D^2u) > 0 and det > 0.
ClampEval rhs_clamped(const RhsModel& wrapped, const PointState& st,
                      const Vector& x, double gamma);

// (tr >= S_k^(1/k),  S_{n-1} >= tr^(1/(n-1)) det^((n-2)/(n-1))), each allowed
// relative slack >= -rel_slack.  Requires symmetric positive definite input.
std::pair<bool, bool> check_trace_inequalities(const Matrix& hess, int k,
                                               double rel_slack = 1e-12);

}  // namespace abreu
