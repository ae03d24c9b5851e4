// End-to-end acceptance run: thirteen numbered criteria, one verdict line
// each, exit code = number of failures.  Slow pieces (the refinement sweep)
// run their spacings concurrently.  Diagnostics quote measured values so a
// red line explains itself.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "abreu/errors.hpp"
#include "abreu/grid.hpp"
#include "abreu/operators.hpp"
#include "abreu/radial.hpp"
#include "abreu/verify.hpp"

using namespace abreu;

namespace {

constexpr double kPi = 3.14159265358979323846;

int g_failures = 0;

std::string fmt(const char* f, ...) {
  char buf[640];
  va_list ap;
  va_start(ap, f);
  vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void verdict(int id, bool pass, const std::string& detail) {
  printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", id,
         detail.c_str());
  fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

BoundaryFn constant_bc(double v) {
  return [v](double, double) { return v; };
}

RadialProblem problem(int n, double p, int f, double psi) {
  RadialProblem prob;
  prob.n = n;
  prob.p = p;
  prob.f_sign = f;
  prob.psi = psi;
  return prob;
}

struct NamedSolution {
  std::string name;
  GridSolution sol;
  RhsModel model;
};

std::vector<NamedSolution> g_grid_set;  // audited wholesale by criterion 10

GridSolution keep(const std::string& name, const RhsModel& model,
                  double psi, double h) {
  GridSolution sol = solve_coupled(model, constant_bc(0.0), constant_bc(psi),
                                   build_disk_grid(h), SolverConfig{});
  g_grid_set.push_back({name, sol, model});
  return sol;
}

double sup_w_error(const GridSolution& sol,
                   const std::function<double(double, double)>& exact) {
  double e = 0.0;
  for (size_t i = 0; i < sol.grid.size(); ++i)
    e = std::max(e, std::fabs(sol.w.values[i] -
                              exact(sol.grid.nodes[i].x,
                                    sol.grid.nodes[i].y)));
  return e;
}

double sup_u_error(const GridSolution& sol,
                   const std::function<double(double, double)>& exact) {
  double e = 0.0;
  for (size_t i = 0; i < sol.grid.size(); ++i)
    e = std::max(e, std::fabs(sol.u.values[i] -
                              exact(sol.grid.nodes[i].x,
                                    sol.grid.nodes[i].y)));
  return e;
}

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const RadialProblem prob = problem(2, 2.0, +1, 1.0);
  const CompatibilityAnalysis an = solve_compatibility(prob);
  if (an.roots.size() != 1) {
    verdict(1, false, fmt("expected one boundary slope, scan found %zu",
                          an.roots.size()));
    return;
  }
  const RadialSolution sol = solve_profile(prob, an.roots[0], 256);
  const double g1_err = std::fabs(sol.g1 - std::sqrt(2.0 * std::log(2.0)));
  const double w0_err = std::fabs(sol.samples.front().w - 0.5);
  double slope_err = 0.0;
  for (const RadialSample& s : sol.samples)
    slope_err = std::max(
        slope_err,
        std::fabs(s.slope - std::sqrt(2.0 * std::log(1.0 + s.r * s.r))));
  const double dt = seconds_since(t0);
  const bool pass =
      g1_err < 1e-10 && w0_err < 1e-8 && slope_err < 1e-8 && dt < 1.0;
  verdict(1, pass,
          fmt("positive-sign plane profile: g(1) err %.2e (<1e-10), "
              "w(0) err %.2e (<1e-8), slope sup err %.2e over 256 samples "
              "(<1e-8), %.3f s (<1 s)",
              g1_err, w0_err, slope_err, dt));
}

void criterion_2() {
  const RadialProblem prob = problem(2, 2.0, -1, 1.0);
  const CompatibilityAnalysis an = solve_compatibility(prob);
  const RadialSolution sol = solve_profile(prob, an.roots.at(0), 512);
  const double g1_err = std::fabs(sol.g1 - std::sqrt(2.0 * std::log(1.5)));
  double w_err = 0.0;
  for (const RadialSample& s : sol.samples)
    w_err = std::max(w_err, std::fabs(s.w - 0.5 * (3.0 - s.r * s.r)));
  const bool pass = g1_err < 1e-10 && w_err < 1e-8;
  verdict(2, pass,
          fmt("negative-sign plane profile: g(1) err %.2e (<1e-10), "
              "w vs (3-r^2)/2 sup err %.2e (<1e-8)",
              g1_err, w_err));
}

void criterion_3() {
  std::string note;
  bool pass = true;
  for (double psi : {0.3, 0.5}) {
    const CompatibilityAnalysis an =
        solve_compatibility(problem(2, 2.0, +1, psi), 10.0);
    pass = pass && an.roots.empty();
    note += fmt("psi=%.1f: %zu roots on [0, %.0f]; ", psi, an.roots.size(),
                an.scan_max);
  }
  verdict(3, pass, "small boundary data admit no profile: " + note +
                       "(both must be zero)");
}

void criterion_4() {
  const CompatibilityAnalysis an =
      solve_compatibility(problem(2, 4.0, +1, 1.0));
  bool pass = an.roots.size() == 2;
  std::string note = fmt("%zu roots", an.roots.size());
  if (pass) {
    const double t1 = an.roots[0], t2 = an.roots[1];
    pass = t1 > 1.0 && t1 < 1.2 && t2 > 1.5 && t2 < 2.0;
    note = fmt("two roots t1=%.6f in (1,1.2), t2=%.6f in (1.5,2)", t1, t2);
  }
  verdict(4, pass, "quartic-exponent multiplicity: " + note);
}

void criterion_5() {
  std::string note;
  bool pass = true;
  for (double p : {3.0, 4.0}) {
    const double M = threshold_M(2, p);
    const CompatibilityAnalysis at_M =
        solve_compatibility(problem(2, p, +1, M));
    bool small_root = false;
    for (double r : at_M.roots) small_root = small_root || (r < 1.0);
    pass = pass && small_root;
    const CompatibilityAnalysis below =
        solve_compatibility(problem(2, p, +1, 0.9 * M));
    note += fmt("p=%.0f: M=%.6f gives %zu roots (min %.4f, need one in "
                "(0,1)); 0.9M gives %zu [reported only]; ",
                p, M, at_M.roots.size(),
                at_M.roots.empty() ? 0.0 : at_M.roots.front(),
                below.roots.size());
  }
  verdict(5, pass, "large-data threshold: " + note);
}

void criterion_6() {
  struct Case {
    const char* name;
    RadialProblem prob;
    int root;
  };
  std::vector<Case> cases = {
      {"plane f=+1", problem(2, 2.0, +1, 1.0), 0},
      {"plane f=-1", problem(2, 2.0, -1, 1.0), 0},
      {"p=4 lower", problem(2, 4.0, +1, 1.0), 0},
      {"p=4 upper", problem(2, 4.0, +1, 1.0), 1},
  };
  for (double p : {3.0, 4.0})
    cases.push_back({p == 3.0 ? "p=3 at threshold" : "p=4 at threshold",
                     problem(2, p, +1, threshold_M(2, p)), 0});
  bool pass = true;
  std::string worst;
  double worst_res = 0.0, worst_ratio = 1e300;
  for (const Case& c : cases) {
    const CompatibilityAnalysis an = solve_compatibility(c.prob);
    if (c.root >= static_cast<int>(an.roots.size())) {
      pass = false;
      worst = fmt("%s: root %d missing", c.name, c.root);
      continue;
    }
    const double res512 =
        residual_ode(solve_profile(c.prob, an.roots[c.root], 512));
    const double res2048 =
        residual_ode(solve_profile(c.prob, an.roots[c.root], 2048));
    const double ratio = res512 / res2048;
    if (res512 > worst_res) {
      worst_res = res512;
      worst = c.name;
    }
    worst_ratio = std::min(worst_ratio, ratio);
    pass = pass && res512 <= 1e-4 && ratio >= 10.0;
  }
  verdict(6, pass,
          fmt("slope-equation residuals over %zu profiles: max %.2e at 512 "
              "samples (%s, <=1e-4); weakest 512->2048 reduction %.1fx "
              "(>=10x)",
              cases.size(), worst_res, worst.c_str(), worst_ratio));
}

void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  const RhsModel model = RhsModel::laplacian_scaled(1.0);
  const double hs[3] = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::future<GridSolution> jobs[3];
  for (int i = 0; i < 3; ++i)
    jobs[i] = std::async(std::launch::async, [&, i] {
      return solve_coupled(model, constant_bc(0.0), constant_bc(1.0),
                           build_disk_grid(hs[i]), SolverConfig{});
    });
  double err[3];
  bool converged = true;
  for (int i = 0; i < 3; ++i) {
    GridSolution sol = jobs[i].get();
    converged = converged && sol.report.converged;
    err[i] = sup_w_error(sol, [](double x, double y) {
      return 0.5 * (1.0 + x * x + y * y);
    });
    g_grid_set.push_back({fmt("trace model h=1/%d", 16 << i), sol, model});
  }
  const double dt = seconds_since(t0);
  const double order1 = std::log2(err[0] / err[1]);
  const double order2 = std::log2(err[1] / err[2]);
  const bool monotone = err[0] > err[1] && err[1] > err[2];
  const bool orders_ok = order1 >= 1.5 && order2 >= 1.5;
  const bool pass = converged && monotone && orders_ok && err[2] <= 2e-3 &&
                    dt <= 120.0;
  verdict(7, pass,
          fmt("trace-model sweep: w sup errors {%.2e, %.2e, %.2e} at "
              "h=1/16,1/32,1/64, observed orders {%.2f, %.2f} (need "
              "monotone, >=1.5); h=1/64 err <=2e-3 %s; %.0f s (<=120). "
              "The errors sit at round-off: the one-sided stencil "
              "reproduces this w without discretization error at every "
              "spacing, so no h^2 trend exists to observe",
              err[0], err[1], err[2], order1, order2,
              err[2] <= 2e-3 ? "holds" : "violated", dt));
}

void criterion_8() {
  bool pass = true;
  std::string note;
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const GridSolution sol =
        keep(fmt("flat pair h=%.4f", h), RhsModel::zero(), 1.0, h);
    const double we = sup_w_error(sol, [](double, double) { return 1.0; });
    const double ue = sup_u_error(sol, [](double x, double y) {
      return 0.5 * (x * x + y * y - 1.0);
    });
    pass = pass && sol.report.converged && we <= 1e-8 && ue <= h * h;
    note += fmt("h=%.4f: |w-1| %.1e (<=1e-8), u err %.1e (<= h^2 = %.1e); ",
                h, we, ue, h * h);
  }
  verdict(8, pass, "zero right-hand side: " + note);
}

void criterion_9() {
  const GridSolution sol = keep("divergence model h=1/32",
                                RhsModel::p_laplacian(2.0, -1), 1.0,
                                1.0 / 32);
  const double we = sup_w_error(
      sol, [](double x, double y) { return 0.5 * (3.0 - x * x - y * y); });
  verdict(9, sol.report.converged && we <= 5e-3,
          fmt("negative-sign divergence model at h=1/32: w vs (3-|x|^2)/2 "
              "sup err %.2e (<=5e-3)",
              we));
}

void criterion_10() {
  bool pass = !g_grid_set.empty();
  double min_slack = 1e300;
  int audited = 0, applicable = 0;
  std::string offender;
  for (const NamedSolution& ns : g_grid_set) {
    if (!ns.sol.report.converged) continue;
    ++audited;
    const VerificationReport rep = check_max_principles(ns.sol, ns.model);
    if (!rep.all_passed() && offender.empty())
      offender = " [first failure: " + ns.name + "]";
    pass = pass && rep.all_passed();
    for (const CheckResult& c : rep.checks)
      if (c.applicable) {
        ++applicable;
        min_slack = std::min(min_slack, c.measured);
      }
  }
  verdict(10, pass,
          fmt("boundary extremum audits on %d converged solutions: %d "
              "applicable audits%s, worst slack %.2e (>= -10x outer "
              "tolerance)%s",
              audited, applicable, pass ? ", all passed" : " with failures",
              min_slack, offender.c_str()));
}

void criterion_11() {
  std::mt19937 rng(20260816);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  long checked = 0;
  bool pass = true;
  std::string first_bad;
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 10000 && pass; ++trial) {
      Matrix b(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = u(rng);
      const Matrix h =
          b.transpose() * b + 0.05 * Matrix::Identity(n, n);
      for (int k = 1; k < n; ++k) {
        const auto [a, c] = check_trace_inequalities(h, k, 1e-12);
        ++checked;
        if (!(a && c)) {
          pass = false;
          first_bad = fmt("random n=%d k=%d trial=%d", n, k, trial);
          break;
        }
      }
    }
    Matrix near = Matrix::Identity(n, n) * 1e-6;
    near(0, 0) = 1.0;
    for (int k = 1; k < n; ++k) {
      const auto [a, c] = check_trace_inequalities(near, k, 1e-12);
      ++checked;
      if (!(a && c)) {
        pass = false;
        first_bad = fmt("near-degenerate n=%d k=%d", n, k);
      }
    }
  }
  const std::string tail =
      pass ? ", none violated" : ", first violation " + first_bad;
  verdict(11, pass,
          fmt("symmetric-function inequalities: %ld (matrix, k) checks over "
              "n=2..6 incl. diag(1,1e-6,...), relative slack floor -1e-12%s",
              checked, tail.c_str()));
}

// Solves run before criterion 10 so the audits cover them; the verdict line
// is held back to keep the output in numeric order.
struct Crit12 {
  bool pass = true;
  std::string note;
};

Crit12 run_clamp_solves() {
  Crit12 out;
  int previous = -1;
  for (double gamma : {0.05, 0.025, 0.0125}) {
    const RhsModel model =
        RhsModel::clamped(RhsModel::p_laplacian(2.0, -1), gamma);
    const GridSolution sol = keep(fmt("clamped gamma=%.4f", gamma), model,
                                  1.0, 1.0 / 16);
    out.pass = out.pass && sol.report.converged;
    if (gamma == 0.05) out.pass = out.pass && sol.report.clamp_active == 0;
    if (previous >= 0)
      out.pass = out.pass && sol.report.clamp_active <= previous;
    previous = sol.report.clamp_active;
    out.note += fmt("gamma=%.4f: %d active nodes; ", gamma,
                    sol.report.clamp_active);
  }
  return out;
}

void criterion_13() {
  // Both quadratures on the paraboloid.
  RadialSolution para;
  para.problem = problem(2, 2.0, -1, 1.0);
  for (int k = 0; k < 513; ++k) {
    RadialSample s;
    s.r = k / 512.0;
    s.slope = s.r;
    s.w = 1.0;
    s.det = 1.0;
    para.samples.push_back(s);
  }
  para.g1 = 1.0;
  const double radial_gap = std::fabs(energy_Jp(para, 2.0) - kPi / 4.0);

  GridSolution gsol;
  gsol.grid = build_disk_grid(1.0 / 16);
  gsol.u = GridField::sample(
      gsol.grid, [](double x, double y) { return 0.5 * (x * x + y * y); });
  gsol.w = GridField::constant(gsol.grid, 1.0, constant_bc(1.0));
  gsol.model = RhsModel::zero();
  const double grid_gap = std::fabs(energy_Jp(gsol, 2.0) - kPi / 4.0);

  // Stationarity probe on the positive-sign plane profile.
  const RadialProblem prob = problem(2, 2.0, +1, 1.0);
  const CompatibilityAnalysis an = solve_compatibility(prob);
  const RadialSolution sol = solve_profile(prob, an.roots.at(0), 513);
  const VerificationReport rep = check_euler_lagrange(sol);
  if (rep.checks.size() != 12) {
    verdict(13, false, fmt("stationarity probe returned %zu checks, "
                           "expected 12", rep.checks.size()));
    return;
  }
  int failed = 0, applicable = 0;
  for (const CheckResult& c : rep.checks) {
    applicable += c.applicable;
    failed += c.applicable && !c.passed;
  }
  // First-order slope of the energy along each bump, from the small-step
  // probes (index 4b+2 is eps = +1e-3 for bump b).
  const double s0 = rep.checks[2].measured / 1e-3;
  const double s1 = rep.checks[6].measured / 1e-3;
  const double s2 = rep.checks[10].measured / 1e-3;

  const bool pass =
      radial_gap <= 1e-6 && grid_gap <= 1e-6 && rep.all_passed();
  verdict(13, pass,
          fmt("paraboloid energy pi/4: radial gap %.1e, grid gap %.1e "
              "(both <=1e-6); stationarity probe on the positive-sign "
              "profile: %d of %d directions decrease the energy at first "
              "order (per-bump energy slopes %+.2f, %+.2f, %+.2f; the two "
              "bumps with nonzero endpoint slope also carry a boundary "
              "flux term). This profile solves the positive-sign equation, "
              "which is not the stationarity equation of the energy, so "
              "first-order decreases are structural, not quadrature noise",
              radial_gap, grid_gap, failed, applicable, s0, s1, s2));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  const Crit12 clamp = run_clamp_solves();
  criterion_10();  // audits every solution kept by 7, 8, 9, and 12
  criterion_11();
  verdict(12, clamp.pass,
          "clamped divergence model: " + clamp.note +
              "(0.05 must be fully inactive, counts nonincreasing)");
  criterion_13();
  printf("%d of 13 criteria passed\n", 13 - g_failures);
  return g_failures;
}
