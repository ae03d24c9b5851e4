#include "abreu/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "abreu/errors.hpp"
#include "abreu/interp.hpp"

namespace abreu {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Volume of the unit ball in n dimensions.
double unit_ball_volume(int n) {
  return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

// Composite Simpson over a uniform abscissa, with one 3/8 block at the end
// when the interval count is odd.  Exact on cubics either way.
double simpson_uniform(const std::vector<double>& f, double h) {
  const size_t n = f.size();
  if (n < 2) throw InvalidInput("radial quadrature: need at least 2 samples");
  if (n == 2) return 0.5 * h * (f[0] + f[1]);
  size_t m = n - 1;  // interval count
  double total = 0.0;
  size_t end = m;  // one past the last interval of the Simpson part
  if (m % 2 == 1) {
    if (m == 3) {
      end = 0;
    } else {
      end = m - 3;
    }
  }
  for (size_t i = 0; i + 2 <= end; i += 2)
    total += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  if (end != m) {
    const size_t b = end;
    total += 3.0 * h / 8.0 *
             (f[b] + 3.0 * f[b + 1] + 3.0 * f[b + 2] + f[b + 3]);
  }
  return total;
}

void require_uniform(const std::vector<double>& r) {
  const double h = r[1] - r[0];
  for (size_t i = 1; i + 1 < r.size(); ++i)
    if (std::fabs((r[i + 1] - r[i]) - h) > 1e-9 * std::max(1.0, h))
      throw InvalidInput("radial quadrature: samples must be uniform in r");
}

// Energy from radial arrays: slope g and determinant at uniform radii.
double radial_energy(const std::vector<double>& r, const std::vector<double>& g,
                     const std::vector<double>& det, int n, double p) {
  require_uniform(r);
  std::vector<double> f(r.size());
  for (size_t k = 0; k < r.size(); ++k) {
    if (!(det[k] > 0.0))
      throw InvalidInput("energy: nonpositive determinant at sample " +
                         std::to_string(k));
    const double rho = std::pow(std::fabs(g[k]), p) / p - std::log(det[k]);
    f[k] = rho * std::pow(r[k], n - 1);
  }
  const double measure = n * unit_ball_volume(n);
  return measure * simpson_uniform(f, r[1] - r[0]);
}

}  // namespace

double energy_Jp(const RadialSolution& sol, double p) {
  if (!(p > 1.0)) throw InvalidInput("energy: p must exceed 1");
  if (sol.samples.size() < 2)
    throw InvalidInput("energy: radial solution has too few samples");
  std::vector<double> r, g, det;
  for (const RadialSample& s : sol.samples) {
    r.push_back(s.r);
    g.push_back(s.slope);
    det.push_back(s.det);
  }
  return radial_energy(r, g, det, sol.problem.n, p);
}

namespace {

struct NodalQuadratic {
  double gx = 0, gy = 0;      // gradient of the integrand
  double hxx = 0, hxy = 0, hyy = 0;
};

bool node_is_far(const DiskGrid& grid, int i) {
  for (int d = 0; d < 8; ++d)
    if (grid.nodes[i].arm[d].is_boundary) return false;
  return true;
}

}  // namespace

double energy_Jp(const GridSolution& sol, double p) {
  if (!(p > 1.0)) throw InvalidInput("energy: p must exceed 1");
  const DiskGrid& grid = sol.grid;
  const int n = static_cast<int>(grid.size());
  if (n == 0) throw InvalidInput("energy: empty grid solution");

  // Nodal integrand values from the solution's own derivatives.
  std::vector<double> rho(n);
  for (int i = 0; i < n; ++i) {
    const PointState st = discrete_state(sol.u, grid, i);
    if (!(st.det > 0.0))
      throw InvalidInput("energy: nonpositive determinant at " +
                         std::to_string(grid.nodes[i].x) + "," +
                         std::to_string(grid.nodes[i].y));
    rho[i] = std::pow(st.grad.norm(), p) / p - std::log(st.det);
  }

  // Derivatives of the integrand: plain central differences where the full
  // 9-point neighborhood is interior; near the circle, second derivatives
  // are copied from the nearest such node and the gradient transported,
  // which keeps quadratic integrands exact.
  GridField rho_field;
  rho_field.values = rho;
  std::vector<int> far;
  for (int i = 0; i < n; ++i)
    if (node_is_far(grid, i)) far.push_back(i);

  std::vector<NodalQuadratic> nq(n);
  for (int i : far) {
    // A far node touches no boundary arm, so the stencil never consults the
    // (absent) boundary data of rho_field.
    const PointState st = discrete_state(rho_field, grid, i);
    nq[i] = {st.grad[0], st.grad[1], st.hess(0, 0), st.hess(0, 1),
             st.hess(1, 1)};
  }
  for (int i = 0; i < n; ++i) {
    if (node_is_far(grid, i)) continue;
    int best = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (int j : far) {
      const double dx = grid.nodes[j].x - grid.nodes[i].x;
      const double dy = grid.nodes[j].y - grid.nodes[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < bestd) {
        bestd = d2;
        best = j;
      }
    }
    if (best < 0) continue;  // no interior-only node: skip corrections
    const NodalQuadratic& src = nq[best];
    const double dx = grid.nodes[i].x - grid.nodes[best].x;
    const double dy = grid.nodes[i].y - grid.nodes[best].y;
    nq[i].hxx = src.hxx;
    nq[i].hxy = src.hxy;
    nq[i].hyy = src.hyy;
    nq[i].gx = src.gx + src.hxx * dx + src.hxy * dy;
    nq[i].gy = src.gy + src.hxy * dx + src.hyy * dy;
  }

  const std::vector<CellMoments> cells = disk_cell_moments(grid);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const CellMoments& c = cells[i];
    total += rho[i] * c.area + nq[i].gx * c.mx + nq[i].gy * c.my +
             0.5 * (nq[i].hxx * c.mxx + 2.0 * nq[i].hxy * c.mxy +
                    nq[i].hyy * c.myy);
  }
  return total;
}

namespace {

// All circle points the grid's stencils touch.
std::vector<std::pair<double, double>> boundary_points(const DiskGrid& grid) {
  std::vector<std::pair<double, double>> pts;
  for (const NodeStencil& st : grid.nodes)
    for (int d = 0; d < 8; ++d)
      if (st.arm[d].is_boundary)
        pts.emplace_back(st.arm[d].bx, st.arm[d].by);
  return pts;
}

}  // namespace

VerificationReport check_max_principles(const GridSolution& sol,
                                        const RhsModel& model) {
  const DiskGrid& grid = sol.grid;
  const int n = static_cast<int>(grid.size());
  if (n == 0) throw InvalidInput("max principle audit: empty solution");
  const double tol = 10.0 * sol.report.config.outer_tol;
  const auto bpts = boundary_points(grid);

  VerificationReport rep;

  // Evaluate the model right-hand side at the converged state.
  std::vector<double> F(n);
  double fmax = 0.0;  // max |f| over the nodes, for audit (c)
  for (int i = 0; i < n; ++i) {
    const PointState st = discrete_state(sol.u, grid, i);
    Vector x(2);
    x << grid.nodes[i].x, grid.nodes[i].y;
    F[i] = rhs_evaluate(model, st, x).value;
    fmax = std::max(fmax, std::fabs(model.f_at(x)));
  }

  {
    CheckResult c;
    c.name = "w minimum on boundary for nonpositive rhs";
    double fsup = -std::numeric_limits<double>::infinity();
    for (double v : F) fsup = std::max(fsup, v);
    c.applicable = fsup <= 1e-12;
    double wmin = std::numeric_limits<double>::infinity();
    for (double v : sol.w.values) wmin = std::min(wmin, v);
    double psimin = std::numeric_limits<double>::infinity();
    for (const auto& b : bpts)
      psimin = std::min(psimin, sol.w.boundary(b.first, b.second));
    c.measured = wmin - psimin;
    c.tolerance = tol;
    c.passed = c.measured >= -tol;
    std::ostringstream os;
    os << "min w = " << wmin << ", boundary min = " << psimin
       << (c.applicable ? "" : "; rhs takes positive values, audit skipped");
    c.detail = os.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c;
    c.name = "w + |x|^2 maximum on boundary for Newton-type rhs";
    c.applicable = model.kind == RhsKind::NEWTON;
    double inner = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double r2 = grid.nodes[i].x * grid.nodes[i].x +
                        grid.nodes[i].y * grid.nodes[i].y;
      inner = std::max(inner, sol.w.values[i] + r2);
    }
    double outer = -std::numeric_limits<double>::infinity();
    for (const auto& b : bpts)
      outer = std::max(outer, sol.w.boundary(b.first, b.second) +
                                  b.first * b.first + b.second * b.second);
    c.measured = outer - inner;
    c.tolerance = tol;
    c.passed = c.measured >= -tol;
    std::ostringstream os;
    os << "interior max = " << inner << ", boundary max = " << outer;
    c.detail = os.str();
    rep.checks.push_back(c);
  }

  {
    CheckResult c;
    c.name = "w - (max|f|/2)|x|^2 minimum on boundary";
    c.applicable = model.kind == RhsKind::LAPLACIAN_SCALED;
    const double half = 0.5 * fmax;
    double inner = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double r2 = grid.nodes[i].x * grid.nodes[i].x +
                        grid.nodes[i].y * grid.nodes[i].y;
      inner = std::min(inner, sol.w.values[i] - half * r2);
    }
    double outer = std::numeric_limits<double>::infinity();
    for (const auto& b : bpts)
      outer = std::min(outer, sol.w.boundary(b.first, b.second) -
                                  half * (b.first * b.first +
                                          b.second * b.second));
    c.measured = inner - outer;
    c.tolerance = tol;
    c.passed = c.measured >= -tol;
    std::ostringstream os;
    os << "interior min = " << inner << ", boundary min = " << outer
       << ", max|f| = " << fmax;
    c.detail = os.str();
    rep.checks.push_back(c);
  }

  return rep;
}

double check_monotonicity_F(const RhsModel& model, const GridField& u,
                            const GridField& v, const DiskGrid& grid) {
  if (u.values.size() != grid.size() || v.values.size() != grid.size())
    throw InvalidInput("monotonicity integral: field size mismatch");
  for (const auto& b : boundary_points(grid)) {
    const double bu = u.boundary(b.first, b.second);
    const double bv = v.boundary(b.first, b.second);
    if (std::fabs(bu - bv) > 1e-9 * std::max(1.0, std::fabs(bu)))
      throw InvalidInput(
          "monotonicity integral: fields disagree on the boundary");
  }

  const std::vector<CellMoments> cells = disk_cell_moments(grid);
  double total = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    const PointState su = discrete_state(u, grid, static_cast<int>(i));
    const PointState sv = discrete_state(v, grid, static_cast<int>(i));
    Vector x(2);
    x << grid.nodes[i].x, grid.nodes[i].y;
    const double fu = rhs_evaluate(model, su, x).value;
    const double fv = rhs_evaluate(model, sv, x).value;
    total += (fu - fv) * (u.values[i] - v.values[i]) * cells[i].area;
  }
  return total;
}

VerificationReport cross_validate(const GridSolution& grid_sol,
                                  const RadialSolution& radial_ref,
                                  const CrossValidateTolerances& tol) {
  if (radial_ref.problem.n != 2)
    throw InvalidInput("cross validation: radial reference must have n = 2");
  if (radial_ref.samples.size() < 2)
    throw InvalidInput("cross validation: reference has too few samples");

  // The grid model must be one of the power-law forms with a radial
  // counterpart: the divergence-form family directly, or the trace-scaled
  // model with constant unit weight (the p = 2 case).
  double p = 0.0;
  int f_sign = 0;
  const RhsModel& m = grid_sol.model;
  if (m.kind == RhsKind::P_LAPLACIAN) {
    p = m.p;
    f_sign = m.f_sign;
  } else if (m.kind == RhsKind::LAPLACIAN_SCALED && !m.f_field &&
             (m.f_const == 1.0 || m.f_const == -1.0)) {
    p = 2.0;
    f_sign = m.f_const > 0 ? 1 : -1;
  } else {
    throw InvalidInput(
        "cross validation: grid model has no radial counterpart");
  }
  if (std::fabs(p - radial_ref.problem.p) > 1e-12 ||
      f_sign != radial_ref.problem.f_sign)
    throw InvalidInput("cross validation: (p, f) mismatch with the reference");

  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * kPi * k / 8.0;
    const double cx = std::cos(a), cy = std::sin(a);
    if (std::fabs(grid_sol.w.boundary(cx, cy) - radial_ref.problem.psi) >
        1e-9)
      throw InvalidInput("cross validation: boundary data for w mismatch");
    if (std::fabs(grid_sol.u.boundary(cx, cy) - radial_ref.problem.phi) >
        1e-9)
      throw InvalidInput("cross validation: boundary data for u mismatch");
  }

  std::vector<double> rs, vs, ws;
  for (const RadialSample& s : radial_ref.samples) {
    rs.push_back(s.r);
    vs.push_back(s.v);
    ws.push_back(s.w);
  }
  const MonotoneCubic v_of_r(rs, vs), w_of_r(rs, ws);

  double eu = 0.0, ew = 0.0;
  for (size_t i = 0; i < grid_sol.grid.size(); ++i) {
    const double r = std::hypot(grid_sol.grid.nodes[i].x,
                                grid_sol.grid.nodes[i].y);
    eu = std::max(eu, std::fabs(grid_sol.u.values[i] - v_of_r(r)));
    ew = std::max(ew, std::fabs(grid_sol.w.values[i] - w_of_r(r)));
  }
  const double gap =
      std::fabs(energy_Jp(grid_sol, p) - energy_Jp(radial_ref, p));

  VerificationReport rep;
  CheckResult cu{"u sup error vs radial reference", eu <= tol.u_inf, true,
                 eu, tol.u_inf, ""};
  CheckResult cw{"w sup error vs radial reference", ew <= tol.w_inf, true,
                 ew, tol.w_inf, ""};
  CheckResult ce{"energy gap vs radial reference", gap <= tol.energy_gap,
                 true, gap, tol.energy_gap, ""};
  rep.checks = {cu, cw, ce};
  return rep;
}

namespace {

struct Bump {
  const char* name;
  double (*deta)(double);   // eta'
  double (*ddeta)(double);  // eta''
  double dend;              // eta'(1)
};

const Bump kBumps[3] = {
    {"(1-r^2)", [](double r) { return -2.0 * r; },
     [](double) { return -2.0; }, -2.0},
    {"(1-r^2)^2", [](double r) { return -4.0 * r * (1.0 - r * r); },
     [](double r) { return -4.0 + 12.0 * r * r; }, 0.0},
    {"r^2(1-r^2)", [](double r) { return 2.0 * r - 4.0 * r * r * r; },
     [](double r) { return 2.0 - 12.0 * r * r; }, -2.0},
};

// Slope derivative by centered differencing, one-sided at the ends.
std::vector<double> slope_derivative(const std::vector<double>& r,
                                     const std::vector<double>& g) {
  const size_t m = r.size();
  std::vector<double> gp(m);
  gp[0] = (g[1] - g[0]) / (r[1] - r[0]);
  gp[m - 1] = (g[m - 1] - g[m - 2]) / (r[m - 1] - r[m - 2]);
  for (size_t k = 1; k + 1 < m; ++k)
    gp[k] = (g[k + 1] - g[k - 1]) / (r[k + 1] - r[k - 1]);
  return gp;
}

// Determinant profile from a slope profile by centered differencing.  The
// same pipeline serves the base and the perturbed profile, so the
// differencing bias cancels in their energy difference.
std::vector<double> det_from_slope(const std::vector<double>& r,
                                   const std::vector<double>& g, int n) {
  const size_t m = r.size();
  const std::vector<double> gp = slope_derivative(r, g);
  std::vector<double> det(m);
  for (size_t k = 0; k < m; ++k) {
    const double ratio = r[k] > 0.0 ? g[k] / r[k] : gp[0];
    det[k] = gp[k] * std::pow(ratio, n - 1);
  }
  return det;
}

// First-order change of the energy per unit eps in one bump direction,
//   dJ = n w_n int_0^1 [ g^{p-1} eta' - eta''/g' - (n-1) eta'/g ] r^{n-1} dr,
// by Simpson on the sample grid.  Valid at ANY convex profile, critical or
// not; at a profile solving the divergence-form optimality equation the
// interior part cancels and only the endpoint-slope flux term remains.
// Returns NaN when the profile degenerates (g or g' nonpositive inside).
double directional_derivative(const std::vector<double>& r,
                              const std::vector<double>& g, int n, double p,
                              const Bump& bump) {
  const size_t m = r.size();
  const std::vector<double> gp = slope_derivative(r, g);
  std::vector<double> f(m, 0.0);
  for (size_t k = 1; k < m; ++k) {
    if (!(g[k] > 0.0) || !(gp[k] > 0.0))
      return std::numeric_limits<double>::quiet_NaN();
    const double e1 = bump.deta(r[k]);
    const double e2 = bump.ddeta(r[k]);
    const double bracket = std::pow(g[k], p - 1.0) * e1 - e2 / gp[k] -
                           (n - 1) * e1 / g[k];
    f[k] = bracket * std::pow(r[k], n - 1);
  }
  return n * unit_ball_volume(n) * simpson_uniform(f, r[1] - r[0]);
}

}  // namespace

VerificationReport check_euler_lagrange(const RadialSolution& sol) {
  const int n = sol.problem.n;
  const double p = sol.problem.p;
  if (sol.samples.size() < 4)
    throw InvalidInput("stationarity probe: too few samples");

  std::vector<double> r, g;
  for (const RadialSample& s : sol.samples) {
    r.push_back(s.r);
    g.push_back(s.slope);
  }
  const double g1 = g.back();

  const std::vector<double> det0 = det_from_slope(r, g, n);
  double j0;
  try {
    j0 = radial_energy(r, g, det0, n, p);
  } catch (const InvalidInput&) {
    throw InvalidInput(
        "stationarity probe: base profile is not convex under differencing");
  }

  const double eps_set[4] = {1e-2, -1e-2, 1e-3, -1e-3};
  VerificationReport rep;
  for (const Bump& bump : kBumps) {
    for (double eps : eps_set) {
      CheckResult c;
      std::ostringstream nm;
      nm << "energy non-decrease: eta=" << bump.name << ", eps=" << eps;
      c.name = nm.str();
      c.tolerance = 1e-8;

      std::vector<double> ge(r.size());
      for (size_t k = 0; k < r.size(); ++k)
        ge[k] = g[k] + eps * bump.deta(r[k]);
      const std::vector<double> dete = det_from_slope(r, ge, n);
      const bool convex =
          std::all_of(dete.begin(), dete.end(),
                      [](double d) { return d > 0.0; }) &&
          std::all_of(ge.begin(), ge.end(),
                      [](double v) { return v >= 0.0; });
      if (!convex) {
        c.applicable = false;
        c.passed = true;
        c.detail = "perturbed profile leaves the convex cone; skipped";
        rep.checks.push_back(c);
        continue;
      }

      const double je = radial_energy(r, ge, dete, n, p);
      c.measured = je - j0;
      c.passed = c.measured >= -c.tolerance;

      // First-order prediction from the continuous directional derivative,
      // and its endpoint-slope flux component: a bump with eta'(1) != 0
      // moves the energy at first order regardless of interior optimality.
      const double dj = directional_derivative(r, g, n, p, bump);
      const double flux = -n * unit_ball_volume(n) * sol.problem.psi *
                          std::pow(g1, n - 1) * bump.dend;
      std::ostringstream os;
      os << "J(perturbed) - J(base) = " << c.measured
         << "; first-order prediction eps*dJ = " << eps * dj
         << " (endpoint flux part " << eps * flux
         << "); decreases at first order are structural, not quadrature "
            "noise";
      c.detail = os.str();
      rep.checks.push_back(c);
    }
  }
  return rep;
}

}  // namespace abreu
