#include "abreu/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace abreu {

namespace {

bool finite(double x) { return std::isfinite(x); }

// Everything downstream works with the scaled residual
//   f=+1:  D(t) = e^{-t^p/p} H(t) - 1/(n psi)
//   f=-1:  D(t) = H(t) - e^{-t^p/p} / (n psi)
// which shares its roots with H - I but stays bounded as t grows.

struct ScanPoint {
  double t;
  double d;
};

// One incremental sweep of the scaled residual.  For f=+1 the accumulator
// carries S(t) = e^{-t^p/p} H(t), rescaled at each step; for f=-1 it carries
// H(t) directly.  Panel integrals are cheap (the intervals are one step wide)
// and any accumulated drift only affects bracket placement, never the refined
// roots, which are recomputed from scratch.
class ResidualSweep {
 public:
  ResidualSweep(const RadialProblem& prob, const QuadratureSpec& spec)
      : prob_(prob), spec_(spec), inv_npsi_(1.0 / (prob.n * prob.psi)) {}

  double advance(double t_next) {
    const int f = prob_.f_sign;
    const double p = prob_.p;
    if (f > 0) {
      const double decay = std::exp((std::pow(t_, p) - std::pow(t_next, p)) / p);
      acc_ = decay * acc_ +
             integrate_kernel_shifted(f, p, prob_.n, t_, t_next,
                                      std::pow(t_next, p) / p, spec_);
      t_ = t_next;
      return acc_ - inv_npsi_;
    }
    acc_ += integrate_kernel(f, p, prob_.n, t_, t_next, spec_);
    t_ = t_next;
    return acc_ - std::exp(-std::pow(t_next, p) / p) * inv_npsi_;
  }

  double value_at_start() const { return -inv_npsi_; }

 private:
  RadialProblem prob_;
  QuadratureSpec spec_;
  double inv_npsi_;
  double t_ = 0.0;
  double acc_ = 0.0;
};

double refine_root(const RadialProblem& prob, double lo, double hi,
                   const QuadratureSpec& spec, bool* dropped) {
  auto full = [&](double t) { return compat_residual(prob, t, spec); };
  const double flo = full(lo);
  const double fhi = full(hi);
  // The residual is quadrature minus 1/(n psi); below the quadrature's own
  // error level its sign is noise, not a crossing.  This matters when the
  // residual approaches zero asymptotically (p == n with n*psi == 1).
  const double scale =
      std::max(std::fabs(flo), std::fabs(fhi)) + 1.0 / (prob.n * prob.psi);
  const double noise = 64.0 * (spec.abs_tol + spec.rel_tol * scale);
  if (std::min(std::fabs(flo), std::fabs(fhi)) <= noise) {
    *dropped = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
  if ((flo > 0.0) == (fhi > 0.0)) {
    // The incremental sweep bracketed a crossing that the full-accuracy
    // residual does not see: a drift artifact possible only where |D| is at
    // round-off scale, i.e. near a tangency.
    *dropped = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return find_root_bracketed(full, {lo, hi}, 1e-12);
}

std::string describe(Regime r, const std::vector<double>& roots) {
  std::ostringstream os;
  os << regime_name(r) << ": " << roots.size() << " admissible boundary slope"
     << (roots.size() == 1 ? "" : "s");
  return os.str();
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::F_NEG: return "F_NEG";
    case Regime::P_LT_N: return "P_LT_N";
    case Regime::P_EQ_N: return "P_EQ_N";
    case Regime::P_GT_N: return "P_GT_N";
  }
  return "?";
}

void RadialProblem::validate() const {
  if (n < 2) throw InvalidInput("radial problem: n must be >= 2");
  if (!(p > 1.0) || !finite(p)) throw InvalidInput("radial problem: p must be > 1");
  if (f_sign != 1 && f_sign != -1)
    throw InvalidInput("radial problem: f sign must be +1 or -1");
  if (!(psi > 0.0) || !finite(psi))
    throw InvalidInput("radial problem: psi must be > 0");
  if (!finite(phi)) throw InvalidInput("radial problem: phi must be finite");
}

Regime RadialProblem::regime() const {
  if (f_sign < 0) return Regime::F_NEG;
  if (p < double(n)) return Regime::P_LT_N;
  if (p == double(n)) return Regime::P_EQ_N;
  return Regime::P_GT_N;
}

double kernel_H(double t, const RadialProblem& prob, const QuadratureSpec& spec) {
  prob.validate();
  if (!finite(t) || t < 0.0) throw InvalidInput("kernel_H: t must be finite and >= 0");
  if (prob.p == double(prob.n)) {
    // d/dt expm1(f t^n / n) = e^{f t^n/n} t^{n-1} * f; exact for both signs.
    const double a = std::pow(t, prob.n) / prob.n;
    return prob.f_sign > 0 ? std::expm1(a) : -std::expm1(-a);
  }
  return integrate_kernel(prob.f_sign, prob.p, prob.n, 0.0, t, spec);
}

double kernel_I(double t, const RadialProblem& prob) {
  prob.validate();
  if (!finite(t) || t < 0.0) throw InvalidInput("kernel_I: t must be finite and >= 0");
  return std::exp(prob.f_sign * std::pow(t, prob.p) / prob.p) /
         (prob.n * prob.psi);
}

double compat_residual(const RadialProblem& prob, double t,
                       const QuadratureSpec& spec) {
  prob.validate();
  if (!finite(t) || t < 0.0)
    throw InvalidInput("compat_residual: t must be finite and >= 0");
  const double inv_npsi = 1.0 / (prob.n * prob.psi);
  const double shift = std::pow(t, prob.p) / prob.p;
  if (prob.f_sign > 0) {
    if (prob.p == double(prob.n)) return -std::expm1(-shift) - inv_npsi;
    return integrate_kernel_shifted(1, prob.p, prob.n, 0.0, t, shift, spec) -
           inv_npsi;
  }
  return kernel_H(t, prob, spec) - std::exp(-shift) * inv_npsi;
}

double threshold_M(int n, double p, const QuadratureSpec& spec) {
  if (n < 2) throw InvalidInput("threshold_M: n must be >= 2");
  if (!(p > double(n))) throw InvalidInput("threshold_M: requires p > n");
  const double h1 = integrate_kernel(1, p, n, 0.0, 1.0, spec);
  return 1.0 + std::exp(1.0 / p) / (n * h1);
}

CompatibilityAnalysis solve_compatibility(const RadialProblem& prob,
                                          double scan_max, double scan_step,
                                          const QuadratureSpec& spec) {
  prob.validate();
  if (!(scan_max > 0.0) || !finite(scan_max))
    throw InvalidInput("solve_compatibility: scan_max must be > 0");
  if (!(scan_step > 0.0) || !finite(scan_step))
    throw InvalidInput("solve_compatibility: scan_step must be > 0");

  CompatibilityAnalysis out;
  out.regime = prob.regime();
  out.scan_step = scan_step;
  out.scan_max = scan_max;
  const double inv_npsi = 1.0 / (prob.n * prob.psi);
  const double tangency_tol = 1e-7 * inv_npsi;

  // Closed form for p == n, f = +1: sup_t e^{-t^n/n} H(t) = 1, so a root
  // exists iff n*psi > 1 and then e^{g1^n/n} = n psi / (n psi - 1).
  double closed_root = std::numeric_limits<double>::quiet_NaN();
  if (out.regime == Regime::P_EQ_N) {
    out.closed_form_used = true;
    if (prob.psi * prob.n > 1.0) {
      closed_root = std::pow(
          prob.n * std::log(prob.n * prob.psi / (prob.n * prob.psi - 1.0)),
          1.0 / prob.n);
    }
  }

  // Sweep limits.  Regimes with a guaranteed root keep extending (doubling)
  // until they find it; P_GT_N may stop early once t^{n-p} < 1/(n psi) with
  // the residual negative, since the residual can never rise back to zero
  // beyond that point (S' = t^{n-1} - t^{p-1} S pins S under the decreasing
  // envelope t^{n-p}).
  const double hard_max = 1e6;
  double limit = scan_max;
  if (out.regime == Regime::P_EQ_N && std::isfinite(closed_root))
    limit = std::max(limit, 1.25 * closed_root + scan_step);

  std::vector<ScanPoint> pts;
  pts.push_back({0.0, -inv_npsi});
  ResidualSweep sweep(prob, spec);
  std::vector<double> roots;
  bool dropped_bracket = false;
  std::string early_stop_note;

  const bool guaranteed_root =
      out.regime == Regime::F_NEG || out.regime == Regime::P_LT_N ||
      (out.regime == Regime::P_EQ_N && std::isfinite(closed_root));

  long k = 0;
  while (true) {
    ++k;
    const double t = k * scan_step;
    if (t > limit + 0.5 * scan_step) {
      if (guaranteed_root && roots.empty()) {
        if (limit > hard_max)
          throw SolveFailure(
              "compatibility scan found no sign change below the hard limit "
              "in a regime that guarantees a root");
        limit *= 2.0;
        continue;
      }
      break;
    }
    const double d = sweep.advance(t);
    const double d_prev = pts.back().d;
    pts.push_back({t, d});
    const bool crossing = (d_prev < 0.0 && d >= 0.0) || (d_prev > 0.0 && d <= 0.0);
    if (crossing) {
      bool dropped = false;
      const double r = refine_root(prob, t - scan_step, t, spec, &dropped);
      if (dropped) {
        dropped_bracket = true;
      } else {
        roots.push_back(r);
      }
    }
    if (out.regime == Regime::P_GT_N && d < 0.0 && t >= scan_step &&
        std::pow(t, prob.n - prob.p) < inv_npsi) {
      std::ostringstream os;
      os << "; tail t > " << t
         << " excluded by the envelope bound t^(n-p) < 1/(n psi)";
      early_stop_note = os.str();
      break;
    }
  }

  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
              roots.end());

  // Tangency diagnostics: a near-zero residual at a node that is not part of
  // a sign change, two roots within one scan step, or a bracket the
  // full-accuracy residual rejected.
  bool tangency = dropped_bracket;
  for (size_t i = 1; i + 1 < pts.size() && !tangency; ++i) {
    const bool same_sign = (pts[i - 1].d > 0.0) == (pts[i].d > 0.0) &&
                           (pts[i].d > 0.0) == (pts[i + 1].d > 0.0);
    if (same_sign && pts[i].d != 0.0 && std::fabs(pts[i].d) < tangency_tol)
      tangency = true;
  }
  for (size_t i = 1; i < roots.size() && !tangency; ++i)
    if (roots[i] - roots[i - 1] < 2.0 * scan_step) tangency = true;
  out.tangency_suspected = tangency;

  if (out.regime == Regime::P_EQ_N) {
    if (!std::isfinite(closed_root)) {
      if (!roots.empty())
        throw SolveFailure(
            "scan found a root where the closed form proves none exists");
      out.roots.clear();
      std::ostringstream os;
      os << "P_EQ_N with n*psi <= 1: no admissible boundary slope "
            "(sup of the scaled residual is 1 - 1/(n psi) <= 0); scan of [0, "
         << limit << "] agrees";
      out.note = os.str();
      out.scan_max = limit;
      return out;
    }
    if (roots.size() != 1 ||
        std::fabs(roots[0] - closed_root) > 1e-8 * std::max(1.0, closed_root))
      throw SolveFailure(
          "closed-form boundary slope and quadrature scan disagree");
    out.roots = {closed_root};
    out.note = describe(out.regime, out.roots) + " (closed form, scan-checked)";
    out.scan_max = limit;
    return out;
  }

  if (out.regime == Regime::P_GT_N)
    out.threshold_M = threshold_M(prob.n, prob.p, spec);

  out.roots = std::move(roots);
  out.scan_max = limit;
  out.note = describe(out.regime, out.roots) + early_stop_note;
  if (out.tangency_suspected)
    out.note += "; tangency suspected: root count may be unresolved at this step";
  return out;
}

namespace {

// Profile reconstruction works with G(g) = e^{-(f/p) g1^p} H(g), which equals
// r^n/(n psi) at the sample radius r.  G'(g) = e^{(f/p)(g^p - g1^p)} g^{n-1}
// stays bounded for g in [0, g1] regardless of sign.
struct ProfileKernel {
  const RadialProblem& prob;
  double g1;
  double shift;  // f * g1^p / p, the rescaling inside the integral
  QuadratureSpec spec;

  double panel(double a, double b) const {
    if (b <= a) return 0.0;
    return integrate_kernel_shifted(prob.f_sign, prob.p, prob.n, a, b, shift,
                                    spec);
  }
  double full(double g) const { return panel(0.0, g); }
  double deriv(double g) const {
    return std::exp(prob.f_sign * (std::pow(g, prob.p) - std::pow(g1, prob.p)) /
                    prob.p) *
           std::pow(g, prob.n - 1);
  }
};

double invert_closed_form(const RadialProblem& prob, double g1, double r) {
  // p == n: G(g) = e^{-f g1^n/n} (e^{f g^n/n} - 1) / f = r^n/(n psi).
  const int n = prob.n;
  const double x = n * std::log(std::max(r, 0.0));
  if (prob.f_sign > 0) {
    // g^n/n = log1p(A r^n), A = e^{g1^n/n}/(n psi); evaluated in log space so
    // large g1 cannot overflow.
    const double la = std::pow(g1, n) / n - std::log(n * prob.psi);
    const double l = la + x;  // log(A r^n)
    if (r == 0.0) return 0.0;
    const double gn = (l > 40.0) ? l + std::exp(-l) : std::log1p(std::exp(l));
    return std::pow(n * gn, 1.0 / n);
  }
  const double b = std::exp(-std::pow(g1, n) / n) / (n * prob.psi);
  const double arg = -b * std::exp(x);
  if (arg <= -1.0)
    throw InvalidInput("profile inversion: slope target out of range");
  if (r == 0.0) return 0.0;
  return std::pow(-double(n) * std::log1p(arg), 1.0 / n);
}

}  // namespace

RadialSolution solve_profile(const RadialProblem& prob, double g1,
                             int r_samples, const QuadratureSpec& spec) {
  prob.validate();
  if (!(g1 > 0.0) || !finite(g1))
    throw InvalidInput("solve_profile: g1 must be finite and > 0");
  if (r_samples < 2) throw InvalidInput("solve_profile: need at least 2 samples");

  const double inv_npsi = 1.0 / (prob.n * prob.psi);
  if (std::fabs(compat_residual(prob, g1, spec)) >
      1e-6 * std::max(1.0, inv_npsi))
    throw InvalidInput(
        "solve_profile: g1 does not satisfy the compatibility equation");

  const int n_samp = r_samples;
  const double h = 1.0 / (n_samp - 1);
  const double fp = double(prob.f_sign) / prob.p;
  const double g1p = std::pow(g1, prob.p);
  const bool closed = prob.p == double(prob.n);

  std::vector<double> rs(n_samp), g(n_samp);
  for (int i = 0; i < n_samp; ++i) rs[i] = i * h;
  rs[n_samp - 1] = 1.0;
  g[0] = 0.0;
  g[n_samp - 1] = g1;

  if (closed) {
    for (int i = 1; i + 1 < n_samp; ++i)
      g[i] = invert_closed_form(prob, g1, rs[i]);
  } else {
    ProfileKernel ker{prob, g1, prob.f_sign * g1p / prob.p, spec};
    const double tol_g = 1e-13;
    double g_prev = 0.0;
    double big_g = 0.0;  // running G at g_prev
    for (int i = 1; i + 1 < n_samp; ++i) {
      const double target = std::pow(rs[i], prob.n) * inv_npsi;
      double gi;
      if (g_prev == 0.0) {
        // leading-order inverse: G ~ e^{-(f/p) g1^p} g^n / n
        gi = rs[i] * std::exp((fp * g1p - std::log(prob.psi)) / prob.n);
      } else {
        gi = g_prev + (target - big_g) / std::max(ker.deriv(g_prev), 1e-300);
      }
      const double hi_cap = g1 + 1.0;
      gi = std::clamp(gi, g_prev, hi_cap);
      bool ok = false;
      for (int it = 0; it < 40; ++it) {
        const double val = big_g + ker.panel(g_prev, gi);
        const double step = (val - target) / std::max(ker.deriv(gi), 1e-300);
        const double gn = std::clamp(gi - step, g_prev, hi_cap);
        const double moved = std::fabs(gn - gi);
        gi = gn;
        if (moved <= tol_g * std::max(1.0, gi)) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        auto fn = [&](double t) { return big_g + ker.panel(g_prev, t); };
        gi = invert_monotone(fn, target, {g_prev, hi_cap}, 1e-13);
      }
      big_g += ker.panel(g_prev, gi);
      g_prev = gi;
      g[i] = gi;
      if (i % 128 == 0) big_g = ker.full(g_prev);  // drop accumulated drift
    }
  }

  RadialSolution sol;
  sol.problem = prob;
  sol.g1 = g1;
  sol.samples.resize(n_samp);
  for (int i = 0; i < n_samp; ++i) {
    RadialSample& s = sol.samples[i];
    s.r = rs[i];
    s.slope = g[i];
    s.w = (i == n_samp - 1)
              ? prob.psi
              : prob.psi * std::exp(fp * (std::pow(g[i], prob.p) - g1p));
    s.det = 1.0 / s.w;
  }

  // v(r) = phi - int_r^1 g: cumulative Simpson (parabolic segments), then a
  // constant shift pinning v(1) = phi.
  std::vector<double> v(n_samp, 0.0);
  if (n_samp == 2) {
    v[1] = v[0] + h * (g[0] + g[1]) / 2.0;
  } else {
    v[1] = v[0] + h * (5.0 * g[0] + 8.0 * g[1] - g[2]) / 12.0;
    for (int i = 1; i + 1 < n_samp; ++i)
      v[i + 1] = v[i] + h * (-g[i - 1] + 8.0 * g[i] + 5.0 * g[i + 1]) / 12.0;
  }
  const double off = prob.phi - v[n_samp - 1];
  for (int i = 0; i < n_samp; ++i) sol.samples[i].v = v[i] + off;
  sol.samples[n_samp - 1].v = prob.phi;
  return sol;
}

double residual_ode(const RadialSolution& sol) {
  const RadialProblem& prob = sol.problem;
  prob.validate();
  if (sol.samples.size() < 3)
    throw InvalidInput("residual_ode: need at least 3 samples");
  const double fp = double(prob.f_sign) / prob.p;
  const double rhs_scale =
      std::exp(fp * std::pow(sol.g1, prob.p)) / prob.psi;
  double worst = 0.0;
  for (size_t i = 1; i + 1 < sol.samples.size(); ++i) {
    const RadialSample& a = sol.samples[i - 1];
    const RadialSample& b = sol.samples[i];
    const RadialSample& c = sol.samples[i + 1];
    const double gp = (c.slope - a.slope) / (c.r - a.r);
    const double lhs = std::exp(fp * std::pow(b.slope, prob.p)) *
                       std::pow(b.slope, prob.n - 1) * gp;
    const double rhs = rhs_scale * std::pow(b.r, prob.n - 1);
    worst = std::max(worst, std::fabs(lhs - rhs));
  }
  return worst;
}

std::pair<double, double> check_linear_growth(const RadialSolution& sol) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const RadialSample& s : sol.samples) {
    if (s.r <= 0.0) continue;
    const double ratio = s.slope / s.r;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (!std::isfinite(lo)) lo = 0.0;  // no usable samples
  return {lo, hi};
}

}  // namespace abreu
