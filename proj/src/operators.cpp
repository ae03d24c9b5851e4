#include "abreu/operators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <vector>

namespace abreu {

namespace {

void require_symmetric(const Matrix& H, const char* who) {
  if (H.rows() != H.cols()) throw InvalidInput(std::string(who) + ": matrix not square");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInput(std::string(who) + ": matrix not symmetric");
}

}  // namespace

PointState PointState::make(Vector grad, Matrix hess) {
  require_symmetric(hess, "PointState");
  if (grad.size() != hess.rows())
    throw InvalidInput("PointState: gradient/Hessian dimension mismatch");
  PointState st;
  st.grad = std::move(grad);
  st.hess = std::move(hess);
  st.det = st.hess.determinant();
  st.cof = cofactor(st.hess);
  return st;
}

Matrix cofactor(const Matrix& hess) {
  require_symmetric(hess, "cofactor");
  const int n = static_cast<int>(hess.rows());
  if (n == 1) return Matrix::Ones(1, 1);
  Matrix cof(n, n);
  Matrix minor(n - 1, n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (int c = 0, cc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(rr, cc) = hess(r, c);
          ++cc;
        }
        ++rr;
      }
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      cof(i, j) = sign * minor.determinant();
    }
  }
  return cof;
}

double elementary_symmetric(const Matrix& hess, int k) {
  require_symmetric(hess, "elementary_symmetric");
  const int n = static_cast<int>(hess.rows());
  if (k < 0 || k > n)
    throw InvalidInput("elementary_symmetric: k out of range [0, n]");
  if (k == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess, Eigen::EigenvaluesOnly);
  const Vector lam = es.eigenvalues();
  // e_k of the eigenvalues by the usual one-pass recurrence.
  std::vector<double> e(static_cast<size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::min(i + 1, k); j >= 1; --j) e[j] += lam[i] * e[j - 1];
  return e[static_cast<size_t>(k)];
}

RhsModel RhsModel::laplacian_scaled(double f) {
  RhsModel m;
  m.kind = RhsKind::LAPLACIAN_SCALED;
  m.f_const = f;
  return m;
}

RhsModel RhsModel::laplacian_scaled(std::function<double(const Vector&)> f) {
  RhsModel m;
  m.kind = RhsKind::LAPLACIAN_SCALED;
  m.f_field = std::move(f);
  return m;
}

RhsModel RhsModel::p_laplacian(double p, int f_sign) {
  if (!(p > 1.0)) throw InvalidInput("p_laplacian: p must be > 1");
  if (f_sign != 1 && f_sign != -1)
    throw InvalidInput("p_laplacian: f_sign must be +1 or -1");
  RhsModel m;
  m.kind = RhsKind::P_LAPLACIAN;
  m.p = p;
  m.f_sign = f_sign;
  return m;
}

RhsModel RhsModel::newton(double f, double g, int k) {
  if (f < 0.0 || f > 1.0 || g < 0.0 || g > 1.0)
    throw InvalidInput("newton rhs: coefficients must lie in [0,1]");
  if (k < 1) throw InvalidInput("newton rhs: k must be >= 1");
  RhsModel m;
  m.kind = RhsKind::NEWTON;
  m.f_const = f;
  m.g_const = g;
  m.k = k;
  return m;
}

RhsModel RhsModel::clamped(RhsModel inner, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput("clamped rhs: gamma must be > 0");
  RhsModel m;
  m.kind = RhsKind::CLAMPED;
  m.gamma = gamma;
  m.wrapped = std::make_shared<const RhsModel>(std::move(inner));
  return m;
}

namespace {

// (tr D^2u)^(1/(n-1)) * (det D^2u)^((n-2)/(n-1)); the scale the clamped and
// Newton-type right-hand sides are measured against.
double newton_denominator(const PointState& st) {
  const int n = st.dim();
  if (n < 2) throw InvalidInput("rhs: dimension must be >= 2");
  const double tr = st.hess.trace();
  if (!(tr > 0.0) || !(st.det > 0.0))
    throw InvalidInput("rhs: requires tr(D^2u) > 0 and det(D^2u) > 0");
  const double a = std::pow(tr, 1.0 / (n - 1));
  const double b = (n == 2) ? 1.0 : std::pow(st.det, double(n - 2) / (n - 1));
  return a * b;
}

RhsEval eval_p_laplacian(const RhsModel& model, const PointState& st) {
  const double p = model.p;
  const double tr = st.hess.trace();
  const double t = st.grad.norm();
  RhsEval out;
  if (p == 2.0) {
    out.value = model.f_sign * tr;
    return out;
  }
  if (t == 0.0 && p > 2.0) {
    out.value = 0.0;  // |Du|^(p-2) wins the limit
    return out;
  }
  double tf = t;
  if (p < 2.0 && t < std::numeric_limits<double>::epsilon()) {
    tf = std::numeric_limits<double>::epsilon();
    out.regularized = true;
  }
  Vector dir = (t > 0.0) ? Vector(st.grad / tf) : Vector(Vector::Zero(st.dim()));
  const double dir_term = dir.dot(st.hess * dir);
  out.value = model.f_sign * std::pow(tf, p - 2.0) * ((p - 2.0) * dir_term + tr);
  return out;
}

}  // namespace

RhsEval rhs_evaluate(const RhsModel& model, const PointState& st,
                     const Vector& x) {
  switch (model.kind) {
    case RhsKind::LAPLACIAN_SCALED: {
      RhsEval out;
      out.value = model.f_at(x) * st.hess.trace();
      return out;
    }
    case RhsKind::P_LAPLACIAN:
      return eval_p_laplacian(model, st);
    case RhsKind::NEWTON: {
      const int n = st.dim();
      if (model.k < 1 || model.k > n - 1)
        throw InvalidInput("newton rhs: k must satisfy 1 <= k <= n-1");
      const double denom = newton_denominator(st);
      const double sk = elementary_symmetric(st.hess, model.k);
      if (!(sk > 0.0)) throw InvalidInput("newton rhs: S_k must be positive");
      const double detpow =
          (n == 2) ? 1.0 : std::pow(st.det, double(n - 2) / (n - 1));
      const double second = std::pow(sk, 1.0 / (model.k * (n - 1))) * detpow;
      RhsEval out;
      out.value = -denom * model.f_at(x) - second * model.g_const;
      return out;
    }
    case RhsKind::CLAMPED: {
      if (!model.wrapped) throw InvalidInput("clamped rhs: missing wrapped model");
      const ClampEval ce = rhs_clamped(*model.wrapped, st, x, model.gamma);
      RhsEval out;
      out.value = -newton_denominator(st) * ce.value;
      return out;
    }
  }
  throw InvalidInput("rhs_evaluate: unknown model kind");
}

ClampEval rhs_clamped(const RhsModel& wrapped, const PointState& st,
                      const Vector& x, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput("rhs_clamped: gamma must be > 0");
  const double denom = newton_denominator(st);
  const double fw = rhs_evaluate(wrapped, st, x).value;
  const double raw = -gamma * fw / denom;
  ClampEval out;
  out.active = raw >= 1.0;
  out.value = out.active ? 1.0 : raw;
  return out;
}

std::pair<bool, bool> check_trace_inequalities(const Matrix& hess, int k,
                                               double rel_slack) {
  require_symmetric(hess, "check_trace_inequalities");
  const int n = static_cast<int>(hess.rows());
  if (n < 2) throw InvalidInput("check_trace_inequalities: dimension must be >= 2");
  if (k < 1 || k > n - 1)
    throw InvalidInput("check_trace_inequalities: k must satisfy 1 <= k <= n-1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw InvalidInput("check_trace_inequalities: matrix must be positive definite");
  const double tr = hess.trace();
  const double det = hess.determinant();
  const double sk = elementary_symmetric(hess, k);
  const double sn1 = elementary_symmetric(hess, n - 1);

  const double lhs1 = tr - std::pow(sk, 1.0 / k);
  const bool first = lhs1 / std::max(1.0, std::fabs(tr)) >= -rel_slack;

  const double rhs2 = std::pow(tr, 1.0 / (n - 1)) *
                      ((n == 2) ? 1.0 : std::pow(det, double(n - 2) / (n - 1)));
  const bool second = (sn1 - rhs2) / std::max(1.0, std::fabs(sn1)) >= -rel_slack;
  return {first, second};
}

}  // namespace abreu
