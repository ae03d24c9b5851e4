#include "abreu/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace abreu {

namespace {

/*---------------- Gauss-Kronrod 7/15 panel rule ----------------*/

// Kronrod abscissae on [-1,1] (positive half; even rows are the embedded
// 7-point Gauss nodes) and the matching weights.
constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
constexpr double kWgk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.10479001032225018,
    0.14065325971552592, 0.16900472663926790, 0.19035057806478542,
    0.20443294007529889, 0.20948214108472783};
constexpr double kWg[4] = {0.12948496616886969, 0.27970539148927666,
                           0.38183005050511894, 0.41795918367346939};

struct PanelResult {
  double k15;  // Kronrod value
  double err;  // |K15 - G7|
};

PanelResult eval_panel(const std::function<double(double)>& f, double a,
                       double b) {
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double k15 = 0.0, g7 = 0.0;
  for (int i = 0; i < 8; ++i) {
    double fv;
    if (i == 7) {
      fv = f(c);
      k15 += kWgk[7] * fv;
      g7 += kWg[3] * fv;
    } else {
      const double dx = hw * kXgk[i];
      const double f1 = f(c - dx);
      const double f2 = f(c + dx);
      fv = f1 + f2;
      k15 += kWgk[i] * fv;
      if (i % 2 == 1) g7 += kWg[i / 2] * fv;
    }
    if (!std::isfinite(fv))
      throw QuadratureFailure("integrand returned a non-finite value");
  }
  k15 *= hw;
  g7 *= hw;
  return {k15, std::fabs(k15 - g7)};
}

void validate_spec(const QuadratureSpec& spec) {
  if (!(spec.abs_tol > 0.0) || !(spec.rel_tol > 0.0))
    throw InvalidInput("quadrature tolerances must be positive");
  if (spec.max_depth < 1) throw InvalidInput("quadrature max_depth must be >= 1");
}

struct Panel {
  double lo, hi;
  double k15, err;
  int depth;
};

// Worst-first ordering with a positional tie-break so runs are deterministic.
bool panel_before(const Panel& a, const Panel& b) {
  if (a.err != b.err) return a.err < b.err;
  return a.lo > b.lo;
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, const QuadratureSpec& spec) {
  validate_spec(spec);
  if (!std::isfinite(a) || !std::isfinite(b))
    throw InvalidInput("integration limits must be finite");
  if (a > b) throw InvalidInput("integration limits must satisfy a <= b");
  if (a == b) return 0.0;

  // Globally adaptive: keep splitting the panel with the largest error
  // estimate until the total estimate meets the requested tolerance.  The
  // budget is shared across panels, so an endpoint where derivatives blow up
  // soaks up subdivisions without tightening the bar for everyone else.
  const double eps = std::numeric_limits<double>::epsilon();
  std::vector<Panel> heap;
  auto push = [&](double lo, double hi, int depth) {
    const PanelResult r = eval_panel(f, lo, hi);
    heap.push_back({lo, hi, r.k15, r.err, depth});
    std::push_heap(heap.begin(), heap.end(), panel_before);
  };
  push(a, b, 0);

  const size_t panel_cap = 200000;
  while (true) {
    double sum = 0.0, err = 0.0, scale = 0.0;
    for (const Panel& p : heap) {
      sum += p.k15;
      scale += std::fabs(p.k15);
      // A panel resolved to the round-off level of its own value cannot be
      // improved by splitting; count it as converged.
      err += std::max(0.0, p.err - 64.0 * eps * std::fabs(p.k15));
    }
    const double target = std::max(spec.abs_tol, spec.rel_tol * scale);
    if (err <= target) return sum;

    std::pop_heap(heap.begin(), heap.end(), panel_before);
    const Panel worst = heap.back();
    heap.pop_back();
    if (worst.depth >= spec.max_depth)
      throw QuadratureFailure("adaptive quadrature hit max_depth at tolerance " +
                              std::to_string(target));
    if (heap.size() + 2 > panel_cap)
      throw QuadratureFailure("adaptive quadrature exceeded its panel budget");
    const double mid = 0.5 * (worst.lo + worst.hi);
    push(worst.lo, mid, worst.depth + 1);
    push(mid, worst.hi, worst.depth + 1);
  }
}

namespace {

void validate_kernel_args(int f_sign, double p, double m, double a, double b) {
  if (f_sign != 1 && f_sign != -1) throw InvalidInput("f_sign must be +1 or -1");
  if (!(p > 1.0)) throw InvalidInput("kernel exponent p must be > 1");
  if (!(m >= 1.0)) throw InvalidInput("kernel power m must be >= 1");
  if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < a)
    throw InvalidInput("kernel integral requires 0 <= a <= b, finite");
}

}  // namespace

double integrate_kernel(int f_sign, double p, double m, double a, double b,
                        const QuadratureSpec& spec) {
  return integrate_kernel_shifted(f_sign, p, m, a, b, 0.0, spec);
}

double integrate_kernel_shifted(int f_sign, double p, double m, double a,
                                double b, double shift,
                                const QuadratureSpec& spec) {
  validate_kernel_args(f_sign, p, m, a, b);
  if (!std::isfinite(shift)) throw InvalidInput("exponent shift must be finite");
  if (a == b) return 0.0;
  const double fp = static_cast<double>(f_sign) / p;
  auto integrand = [fp, p, m, shift](double s) {
    return std::exp(fp * std::pow(s, p) - shift) * std::pow(s, m - 1.0);
  };
  const double value = integrate_adaptive(integrand, a, b, spec);
  if (!std::isfinite(value))
    throw QuadratureFailure("kernel integral overflowed to a non-finite value");
  return value;
}

double find_root_bracketed(const std::function<double(double)>& fn, Bracket b,
                           double tol) {
  if (!(b.lo < b.hi)) throw InvalidInput("bracket requires lo < hi");
  if (!(tol > 0.0)) throw InvalidInput("root tolerance must be positive");
  double lo = b.lo, hi = b.hi;
  double flo = fn(lo), fhi = fn(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi))
    throw Error("root function returned a non-finite value at the bracket");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NoBracket("no sign change over [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
  // Alternate secant and bisection steps: the secant step supplies fast local
  // convergence, the bisection step guarantees the bracket halves at least
  // every other iteration.
  for (int iter = 0; iter < 400 && (hi - lo) > tol; ++iter) {
    double t;
    if (iter % 2 == 0 && fhi != flo) {
      t = (lo * fhi - hi * flo) / (fhi - flo);
      const double guard = 1e-3 * (hi - lo);
      if (!std::isfinite(t) || t <= lo + guard || t >= hi - guard)
        t = 0.5 * (lo + hi);
    } else {
      t = 0.5 * (lo + hi);
    }
    const double ft = fn(t);
    if (!std::isfinite(ft))
      throw Error("root function returned a non-finite value inside bracket");
    if (ft == 0.0) return t;
    if ((ft > 0.0) == (flo > 0.0)) {
      lo = t;
      flo = ft;
    } else {
      hi = t;
      fhi = ft;
    }
  }
  return 0.5 * (lo + hi);
}

double invert_monotone(const std::function<double(double)>& fn, double target,
                       Bracket b, double tol) {
  if (!(b.lo < b.hi)) throw InvalidInput("bracket requires lo < hi");
  const double flo = fn(b.lo), fhi = fn(b.hi);
  if (!(flo <= fhi))
    throw InvalidInput("invert_monotone requires an increasing function");
  if (target < flo || target > fhi)
    throw InvalidInput("invert_monotone target outside the function range");
  if (target == flo) return b.lo;
  if (target == fhi) return b.hi;
  return find_root_bracketed([&fn, target](double t) { return fn(t) - target; },
                             b, tol);
}

}  // namespace abreu
