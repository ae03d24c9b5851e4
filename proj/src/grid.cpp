#include "abreu/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "abreu/errors.hpp"
#include "abreu/interp.hpp"

namespace abreu {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kPi = 3.14159265358979323846;

// First t in (0, 1] where the segment p + t*s leaves the unit disk.
// Requires |p| < 1 and |p + s| >= 1, so the crossing exists.
double circle_hit(double px, double py, double sx, double sy) {
  const double a = sx * sx + sy * sy;
  const double b = px * sx + py * sy;
  const double c = px * px + py * py - 1.0;
  const double t = (-b + std::sqrt(b * b - a * c)) / a;
  return std::min(std::max(t, std::numeric_limits<double>::min()), 1.0);
}

std::string node_tag(const NodeStencil& st) {
  std::ostringstream os;
  os << "node (" << st.i << "," << st.j << ") at (" << st.x << "," << st.y
     << ")";
  return os.str();
}

// Value of the field at the far end of one arm, plus the arm's length.
struct ArmEnd {
  double value;
  double dist;
};

ArmEnd arm_end(const GridField& u, const NodeStencil& st, int dir,
               double full) {
  const BoundaryArm& a = st.arm[dir];
  if (a.is_boundary) return {u.boundary_fn(a.bx, a.by), a.theta * full};
  return {u.values[a.neighbor], full};
}

// Three-point second derivative along a line through the node, with
// backward arm length a and forward arm length b.
double second_along(double ub, double u0, double uf, double a, double b) {
  return 2.0 * (ub / (a * (a + b)) - u0 / (a * b) + uf / (b * (a + b)));
}

// Matching three-point first derivative, exact on quadratics.
double first_along(double ub, double u0, double uf, double a, double b) {
  return (a * a * uf - b * b * ub + (b * b - a * a) * u0) / (a * b * (a + b));
}

struct NodeDerivs {
  double ux, uy, uxx, uyy, uxy;
};

NodeDerivs node_derivs(const GridField& u, const DiskGrid& grid, int node) {
  const NodeStencil& st = grid.nodes[node];
  const double u0 = u.values[node];
  const double h = grid.h, hd = grid.h * kSqrt2;

  const ArmEnd e = arm_end(u, st, Dir::E, h), w = arm_end(u, st, Dir::W, h);
  const ArmEnd n = arm_end(u, st, Dir::N, h), s = arm_end(u, st, Dir::S, h);
  const ArmEnd ne = arm_end(u, st, Dir::NE, hd),
               sw = arm_end(u, st, Dir::SW, hd);
  const ArmEnd nw = arm_end(u, st, Dir::NW, hd),
               se = arm_end(u, st, Dir::SE, hd);

  NodeDerivs d;
  d.ux = first_along(w.value, u0, e.value, w.dist, e.dist);
  d.uy = first_along(s.value, u0, n.value, s.dist, n.dist);
  d.uxx = second_along(w.value, u0, e.value, w.dist, e.dist);
  d.uyy = second_along(s.value, u0, n.value, s.dist, n.dist);
  // Second derivatives along the two diagonals recover the mixed term:
  // D_ee - D_e'e' = 2 u_xy for e = (1,1)/sqrt2, e' = (-1,1)/sqrt2.
  const double dpp = second_along(sw.value, u0, ne.value, sw.dist, ne.dist);
  const double dmm = second_along(se.value, u0, nw.value, se.dist, nw.dist);
  d.uxy = 0.5 * (dpp - dmm);
  return d;
}

// Eigenvalue floor for a symmetric 2x2 matrix, with the cofactor of the
// safeguarded matrix (the exact derivative of its determinant).
struct Clipped {
  Eigen::Matrix2d cof;
  double det;
  bool active;
  double lmin;  // smaller raw eigenvalue
  Eigen::Matrix2d H;
};

Clipped clip2(double hxx, double hyy, double hxy, double floor) {
  const double m = 0.5 * (hxx + hyy);
  const double q = 0.5 * (hxx - hyy);
  const double rho = std::hypot(q, hxy);
  const double l1 = m + rho, l2 = m - rho;
  Clipped out;
  out.lmin = l2;
  if (l2 >= floor) {
    out.active = false;
    out.det = hxx * hyy - hxy * hxy;
    out.cof << hyy, -hxy, -hxy, hxx;
    out.H << hxx, hxy, hxy, hyy;
    return out;
  }
  out.active = true;
  const double c1 = std::max(l1, floor), c2 = floor;
  const double phi = 0.5 * std::atan2(2.0 * hxy, hxx - hyy);
  const double co = std::cos(phi), si = std::sin(phi);
  // H' = c1 v1 v1^T + c2 v2 v2^T with v1 = (co, si), v2 = (-si, co); the
  // 2x2 cofactor swaps the eigenvalues on the same frame.
  out.H << c1 * co * co + c2 * si * si, (c1 - c2) * co * si,
      (c1 - c2) * co * si, c1 * si * si + c2 * co * co;
  out.cof << c2 * co * co + c1 * si * si, -(c1 - c2) * co * si,
      -(c1 - c2) * co * si, c2 * si * si + c1 * co * co;
  out.det = c1 * c2;
  return out;
}

// How the mixed derivative is folded into an assembled operator.
// SignSplit picks the diagonal matching the sign of the cross coefficient,
// which keeps the stencil monotone whenever |c12| <= min(c11, c22);
// Symmetric uses both diagonals and is the exact derivative of node_derivs.
enum class Mixed { SignSplit, Symmetric };

struct PairCoef {
  Dir fwd, bwd;
  double full;
  double weight;
};

// One assembled Dirichlet problem: A x = b over interior nodes.
struct LinearProblem {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
};

// coef[i] = (c11, c22, c12) of the operator c11 Dxx + c22 Dyy + 2 c12 Dxy
// at node i.  Boundary values come from bc; pass nullptr for homogeneous
// data (used for Newton corrections, which vanish on the circle).
LinearProblem assemble(const DiskGrid& grid,
                       const std::vector<Eigen::Vector3d>& coef,
                       const Eigen::VectorXd& rhs, const BoundaryFn* bc,
                       Mixed mixed) {
  const int n = static_cast<int>(grid.size());
  const double h = grid.h, hd = grid.h * kSqrt2;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n) * 9);
  Eigen::VectorXd b = rhs;

  for (int idx = 0; idx < n; ++idx) {
    const NodeStencil& st = grid.nodes[idx];
    const double c11 = coef[idx][0], c22 = coef[idx][1], c12 = coef[idx][2];

    PairCoef pairs[4];
    int npairs = 0;
    if (mixed == Mixed::SignSplit) {
      const double s = std::fabs(c12);
      pairs[npairs++] = {Dir::E, Dir::W, h, c11 - s};
      pairs[npairs++] = {Dir::N, Dir::S, h, c22 - s};
      if (c12 >= 0.0)
        pairs[npairs++] = {Dir::NE, Dir::SW, hd, 2.0 * s};
      else
        pairs[npairs++] = {Dir::NW, Dir::SE, hd, 2.0 * s};
    } else {
      pairs[npairs++] = {Dir::E, Dir::W, h, c11};
      pairs[npairs++] = {Dir::N, Dir::S, h, c22};
      pairs[npairs++] = {Dir::NE, Dir::SW, hd, c12};
      pairs[npairs++] = {Dir::NW, Dir::SE, hd, -c12};
    }

    for (int kp = 0; kp < npairs; ++kp) {
      const PairCoef& pc = pairs[kp];
      const BoundaryArm& af = st.arm[pc.fwd];
      const BoundaryArm& ab = st.arm[pc.bwd];
      const double bdist = (ab.is_boundary ? ab.theta : 1.0) * pc.full;
      const double fdist = (af.is_boundary ? af.theta : 1.0) * pc.full;
      const double cself = -2.0 / (bdist * fdist);
      const double cfwd = 2.0 / (fdist * (bdist + fdist));
      const double cbwd = 2.0 / (bdist * (bdist + fdist));

      trip.emplace_back(idx, idx, pc.weight * cself);
      if (af.is_boundary) {
        if (bc) b[idx] -= pc.weight * cfwd * (*bc)(af.bx, af.by);
      } else {
        trip.emplace_back(idx, af.neighbor, pc.weight * cfwd);
      }
      if (ab.is_boundary) {
        if (bc) b[idx] -= pc.weight * cbwd * (*bc)(ab.bx, ab.by);
      } else {
        trip.emplace_back(idx, ab.neighbor, pc.weight * cbwd);
      }
    }
  }

  LinearProblem out;
  out.A.resize(n, n);
  out.A.setFromTriplets(trip.begin(), trip.end());
  out.b = std::move(b);
  return out;
}

void check_field(const GridField& f, const DiskGrid& grid, const char* what) {
  if (f.values.size() != grid.size())
    throw InvalidInput(std::string(what) + ": field size does not match grid");
  for (double v : f.values)
    if (!std::isfinite(v))
      throw InvalidInput(std::string(what) + ": non-finite field value");
}

Eigen::VectorXd solve_direct(const Eigen::SparseMatrix<double>& A,
                             const Eigen::VectorXd& b, const char* what) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw SolveFailure(std::string(what) + ": sparse factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw SolveFailure(std::string(what) + ": direct solve failed");
  return x;
}

}  // namespace

DiskGrid build_disk_grid(double h) {
  if (!(h > 0.0) || !(h < 0.25) || !std::isfinite(h))
    throw InvalidInput("grid spacing must satisfy 0 < h < 1/4");
  DiskGrid g;
  g.h = h;
  g.half = static_cast<int>(std::floor((1.0 - 1e-14) / h));
  const int span = g.span();
  g.index.assign(static_cast<size_t>(span) * span, -1);

  for (int j = -g.half; j <= g.half; ++j)
    for (int i = -g.half; i <= g.half; ++i) {
      const double x = i * h, y = j * h;
      if (x * x + y * y >= 1.0) continue;
      const size_t cell =
          static_cast<size_t>(j + g.half) * span + (i + g.half);
      g.index[cell] = static_cast<int>(g.nodes.size());
      NodeStencil st;
      st.i = i;
      st.j = j;
      st.x = x;
      st.y = y;
      g.nodes.push_back(st);
    }

  if (g.nodes.size() < 9)
    throw InvalidInput(
        "grid too coarse: fewer than 9 interior nodes inside the disk");

  for (NodeStencil& st : g.nodes)
    for (int d = 0; d < 8; ++d) {
      const int ni = st.i + kDirStep[d][0], nj = st.j + kDirStep[d][1];
      const int nbr = g.interior_at(ni, nj);
      BoundaryArm& arm = st.arm[d];
      if (nbr >= 0) {
        arm.is_boundary = false;
        arm.neighbor = nbr;
        arm.theta = 1.0;
      } else {
        const double sx = kDirStep[d][0] * h, sy = kDirStep[d][1] * h;
        arm.is_boundary = true;
        arm.theta = circle_hit(st.x, st.y, sx, sy);
        arm.bx = st.x + arm.theta * sx;
        arm.by = st.y + arm.theta * sy;
      }
    }

  return g;
}

GridField GridField::constant(const DiskGrid& grid, double value,
                              BoundaryFn bc) {
  GridField f;
  f.values.assign(grid.size(), value);
  f.boundary_fn = std::move(bc);
  return f;
}

GridField GridField::sample(const DiskGrid& grid,
                            const std::function<double(double, double)>& f) {
  GridField out;
  out.values.resize(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    out.values[i] = f(grid.nodes[i].x, grid.nodes[i].y);
  out.boundary_fn = f;
  return out;
}

PointState discrete_state(const GridField& u, const DiskGrid& grid, int node) {
  if (node < 0 || static_cast<size_t>(node) >= grid.size())
    throw InvalidInput("discrete_state: node index out of range");
  check_field(u, grid, "discrete_state");
  const NodeDerivs d = node_derivs(u, grid, node);
  Vector grad(2);
  grad << d.ux, d.uy;
  Matrix hess(2, 2);
  hess << d.uxx, d.uxy, d.uxy, d.uyy;
  return PointState::make(std::move(grad), std::move(hess));
}

void SolverConfig::validate() const {
  if (!(damping > 0.0) || !(damping <= 1.0))
    throw InvalidInput("solver config: damping must be in (0, 1]");
  if (!(outer_tol > 0.0) || !(newton_tol > 0.0))
    throw InvalidInput("solver config: tolerances must be positive");
  if (max_outer < 1 || max_newton < 1)
    throw InvalidInput("solver config: iteration limits must be positive");
  if (!(convexity_floor > 0.0))
    throw InvalidInput("solver config: convexity floor must be positive");
}

GridField solve_linearized_ma(const GridField& u, const GridField& rhs,
                              const BoundaryFn& psi_bc, const DiskGrid& grid,
                              const SolverConfig& config) {
  config.validate();
  check_field(u, grid, "linearized solve");
  check_field(rhs, grid, "linearized solve rhs");
  if (!psi_bc) throw InvalidInput("linearized solve: missing boundary data");

  const int n = static_cast<int>(grid.size());
  std::vector<Eigen::Vector3d> coef(n);
  for (int i = 0; i < n; ++i) {
    const NodeDerivs d = node_derivs(u, grid, i);
    const Clipped c = clip2(d.uxx, d.uyy, d.uxy, config.convexity_floor);
    coef[i] = {c.cof(0, 0), c.cof(1, 1), c.cof(0, 1)};
  }

  Eigen::VectorXd rv(n);
  for (int i = 0; i < n; ++i) rv[i] = rhs.values[i];
  LinearProblem lp = assemble(grid, coef, rv, &psi_bc, Mixed::SignSplit);
  Eigen::VectorXd x = solve_direct(lp.A, lp.b, "linearized solve");

  const Eigen::VectorXd res = lp.A * x - lp.b;
  int worst = 0;
  res.cwiseAbs().maxCoeff(&worst);
  const double scale = std::max(1.0, lp.b.cwiseAbs().maxCoeff());
  if (std::fabs(res[worst]) > config.newton_tol * scale)
    throw SolveFailure("linearized solve: residual " +
                       std::to_string(std::fabs(res[worst])) + " at " +
                       node_tag(grid.nodes[worst]) + " exceeds tolerance");

  GridField out;
  out.values.assign(x.data(), x.data() + n);
  out.boundary_fn = psi_bc;
  return out;
}

namespace {

struct MaResidual {
  Eigen::VectorXd R;
  std::vector<Clipped> clip;
  int active = 0;
};

MaResidual ma_residual(const std::vector<double>& uvals, const GridField& w,
                       const BoundaryFn& phi_bc, const DiskGrid& grid,
                       double floor) {
  const int n = static_cast<int>(grid.size());
  GridField u;
  u.values = uvals;
  u.boundary_fn = phi_bc;
  MaResidual out;
  out.R.resize(n);
  out.clip.resize(n);
  for (int i = 0; i < n; ++i) {
    const NodeDerivs d = node_derivs(u, grid, i);
    out.clip[i] = clip2(d.uxx, d.uyy, d.uxy, floor);
    out.R[i] = out.clip[i].det - 1.0 / w.values[i];
    if (out.clip[i].active) ++out.active;
  }
  return out;
}

}  // namespace

GridField solve_monge_ampere(const GridField& w, const BoundaryFn& phi_bc,
                             const DiskGrid& grid, const SolverConfig& config,
                             const std::optional<GridField>& init,
                             SolveReport* report) {
  config.validate();
  check_field(w, grid, "determinant solve");
  if (!phi_bc) throw InvalidInput("determinant solve: missing boundary data");
  const int n = static_cast<int>(grid.size());
  for (int i = 0; i < n; ++i)
    if (!(w.values[i] > 0.0))
      throw InvalidInput("determinant solve: w must be positive, got " +
                         std::to_string(w.values[i]) + " at " +
                         node_tag(grid.nodes[i]));

  std::vector<double> uvals;
  if (init) {
    check_field(*init, grid, "determinant solve initial guess");
    uvals = init->values;
  } else {
    // Poisson seed: the paraboloid with det = c^2 has Laplacian 2c, so the
    // linear problem with the mean determinant scale lands near the target
    // convexity right away (and is exact for constant w).
    double cbar = 0.0;
    for (int i = 0; i < n; ++i) cbar += std::sqrt(1.0 / w.values[i]);
    cbar /= n;
    std::vector<Eigen::Vector3d> coef(n, Eigen::Vector3d{1.0, 1.0, 0.0});
    LinearProblem lp = assemble(grid, coef,
                                Eigen::VectorXd::Constant(n, 2.0 * cbar),
                                &phi_bc, Mixed::SignSplit);
    Eigen::VectorXd x = solve_direct(lp.A, lp.b, "determinant solve seed");
    uvals.assign(x.data(), x.data() + n);
  }

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  std::vector<double> history;

  MaResidual cur = ma_residual(uvals, w, phi_bc, grid, config.convexity_floor);
  double rnorm = cur.R.cwiseAbs().maxCoeff();
  history.push_back(rnorm);

  int it = 0;
  for (; it < config.max_newton && rnorm > config.newton_tol; ++it) {
    std::vector<Eigen::Vector3d> coef(n);
    for (int i = 0; i < n; ++i)
      coef[i] = {cur.clip[i].cof(0, 0), cur.clip[i].cof(1, 1),
                 cur.clip[i].cof(0, 1)};
    // Newton correction vanishes on the circle, so no boundary data here.
    LinearProblem lp = assemble(grid, coef, -cur.R, nullptr, Mixed::Symmetric);
    if (!analyzed) {
      lu.analyzePattern(lp.A);
      analyzed = true;
    }
    lu.factorize(lp.A);
    if (lu.info() != Eigen::Success)
      throw SolveFailure("determinant solve: Jacobian factorization failed");
    const Eigen::VectorXd delta = lu.solve(lp.b);
    if (!delta.allFinite())
      throw SolveFailure("determinant solve: Newton step is non-finite");

    double alpha = 1.0;
    bool accepted = false;
    std::vector<double> trial(uvals.size());
    while (alpha >= 1e-12) {
      for (int i = 0; i < n; ++i) trial[i] = uvals[i] + alpha * delta[i];
      MaResidual next =
          ma_residual(trial, w, phi_bc, grid, config.convexity_floor);
      const double nnorm = next.R.cwiseAbs().maxCoeff();
      if (nnorm <= (1.0 - 1e-4 * alpha) * rnorm) {
        uvals.swap(trial);
        cur = std::move(next);
        rnorm = nnorm;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    history.push_back(rnorm);
    if (!accepted) {
      std::ostringstream os;
      os << "determinant solve: line search stagnated at iteration " << it
         << "; residual history:";
      for (double r : history) os << " " << r;
      throw SolveFailure(os.str());
    }
  }

  if (rnorm > config.newton_tol) {
    std::ostringstream os;
    os << "determinant solve: no convergence in " << config.max_newton
       << " iterations; residual history:";
    for (double r : history) os << " " << r;
    throw SolveFailure(os.str());
  }

  if (report) {
    report->config = config;
    report->newton_iterations += it;
    report->newton_residuals.push_back(rnorm);
    report->safeguard_active = cur.active;
  }

  GridField out;
  out.values = std::move(uvals);
  out.boundary_fn = phi_bc;
  return out;
}

GridSolution solve_coupled(const RhsModel& model, const BoundaryFn& phi_bc,
                           const BoundaryFn& psi_bc, const DiskGrid& grid,
                           const SolverConfig& config) {
  config.validate();
  if (!phi_bc || !psi_bc)
    throw InvalidInput("coupled solve: missing boundary data");
  const int n = static_cast<int>(grid.size());

  // Initial state: w extended radially from the circle, then one
  // determinant solve to get an admissible u.
  GridField w = GridField::constant(grid, 0.0, psi_bc);
  for (int i = 0; i < n; ++i) {
    const double x = grid.nodes[i].x, y = grid.nodes[i].y;
    const double r = std::hypot(x, y);
    const double val = r > 1e-12 ? psi_bc(x / r, y / r) : psi_bc(1.0, 0.0);
    if (!(val > 0.0))
      throw InvalidInput("coupled solve: boundary data for w must be positive");
    w.values[i] = val;
  }

  SolveReport rep;
  rep.config = config;
  GridField u = solve_monge_ampere(w, phi_bc, grid, config, {}, &rep);
  GridField ustar = u;

  bool converged = false;
  for (int k = 0; k < config.max_outer; ++k) {
    // Right-hand side of the linearized problem at the current iterate,
    // evaluated on the safeguarded Hessian so power laws stay defined.
    GridField rhs = GridField::constant(grid, 0.0, nullptr);
    for (int i = 0; i < n; ++i) {
      const NodeDerivs d = node_derivs(u, grid, i);
      const Clipped c = clip2(d.uxx, d.uyy, d.uxy, config.convexity_floor);
      Vector grad(2);
      grad << d.ux, d.uy;
      PointState st = PointState::make(grad, c.H);
      Vector x(2);
      x << grid.nodes[i].x, grid.nodes[i].y;
      rhs.values[i] = rhs_evaluate(model, st, x).value;
    }

    w = solve_linearized_ma(u, rhs, psi_bc, grid, config);
    for (int i = 0; i < n; ++i)
      if (!(w.values[i] > 0.0))
        throw SolveFailure(
            "coupled solve: iterate " + std::to_string(k) +
            " produced nonpositive w at " + node_tag(grid.nodes[i]) +
            "; the fixed point left the admissible cone");

    ustar = solve_monge_ampere(w, phi_bc, grid, config, u, &rep);

    double delta = 0.0;
    for (int i = 0; i < n; ++i)
      delta = std::max(delta, std::fabs(ustar.values[i] - u.values[i]));
    const double applied = config.damping * delta;
    rep.outer_deltas.push_back(applied);
    ++rep.outer_iterations;

    for (int i = 0; i < n; ++i)
      u.values[i] += config.damping * (ustar.values[i] - u.values[i]);

    if (applied <= config.outer_tol) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    std::ostringstream os;
    os << "coupled solve: no convergence in " << config.max_outer
       << " outer iterations; last update "
       << (rep.outer_deltas.empty() ? 0.0 : rep.outer_deltas.back());
    throw SolveFailure(os.str());
  }

  // Report the undamped iterate: it satisfies the determinant equation
  // against the final w to newton_tol, which the mixed state would not.
  GridSolution sol;
  sol.u = ustar;
  sol.w = w;
  sol.grid = grid;
  sol.model = model;
  rep.converged = true;

  rep.clamp_map.assign(grid.size(), 0);
  rep.safeguard_active = 0;
  for (int i = 0; i < n; ++i) {
    const NodeDerivs d = node_derivs(sol.u, grid, i);
    const Clipped c = clip2(d.uxx, d.uyy, d.uxy, config.convexity_floor);
    if (c.active) ++rep.safeguard_active;
    if (!(c.lmin > 0.0))
      throw SolveFailure("coupled solve: converged iterate is not convex at " +
                         node_tag(grid.nodes[i]));
    if (model.kind == RhsKind::CLAMPED) {
      Vector grad(2);
      grad << d.ux, d.uy;
      PointState st = PointState::make(grad, c.H);
      Vector x(2);
      x << grid.nodes[i].x, grid.nodes[i].y;
      const ClampEval ce = rhs_clamped(*model.wrapped, st, x, model.gamma);
      if (ce.active) {
        rep.clamp_map[i] = 1;
        ++rep.clamp_active;
      }
    }
  }

  sol.report = std::move(rep);
  return sol;
}

std::vector<StudyRow> convergence_study(const RhsModel& model,
                                        const BoundaryFn& phi_bc,
                                        const BoundaryFn& psi_bc,
                                        const std::vector<double>& h_list,
                                        const SolverConfig& config,
                                        const RadialSolution& reference) {
  if (h_list.empty()) throw InvalidInput("convergence study: empty h list");
  if (reference.problem.n != 2)
    throw InvalidInput("convergence study: reference must be planar (n = 2)");
  if (reference.samples.size() < 2)
    throw InvalidInput("convergence study: reference has too few samples");
  for (int k = 0; k < 8; ++k) {
    const double a = 2.0 * kPi * k / 8.0;
    const double cx = std::cos(a), cy = std::sin(a);
    if (std::fabs(psi_bc(cx, cy) - reference.problem.psi) > 1e-9)
      throw InvalidInput(
          "convergence study: boundary data for w does not match the "
          "reference problem");
    if (std::fabs(phi_bc(cx, cy) - reference.problem.phi) > 1e-9)
      throw InvalidInput(
          "convergence study: boundary data for u does not match the "
          "reference problem");
  }

  std::vector<double> rs, vs, ws;
  for (const RadialSample& s : reference.samples) {
    rs.push_back(s.r);
    vs.push_back(s.v);
    ws.push_back(s.w);
  }
  const MonotoneCubic v_of_r(rs, vs), w_of_r(rs, ws);

  // The solves are independent; fan them out and assemble rows in h order,
  // so the result is identical to a serial run.
  std::vector<std::future<GridSolution>> pending;
  pending.reserve(h_list.size());
  for (double h : h_list)
    pending.push_back(std::async(std::launch::async, [&, h] {
      return solve_coupled(model, phi_bc, psi_bc, build_disk_grid(h), config);
    }));

  std::vector<StudyRow> rows;
  for (size_t k = 0; k < h_list.size(); ++k) {
    const GridSolution sol = pending[k].get();
    StudyRow row;
    row.h = h_list[k];
    for (size_t i = 0; i < sol.grid.size(); ++i) {
      const double r = std::hypot(sol.grid.nodes[i].x, sol.grid.nodes[i].y);
      row.error_u_inf =
          std::max(row.error_u_inf, std::fabs(sol.u.values[i] - v_of_r(r)));
      row.error_w_inf =
          std::max(row.error_w_inf, std::fabs(sol.w.values[i] - w_of_r(r)));
    }
    if (!rows.empty() && rows.back().error_w_inf > 0.0 &&
        row.error_w_inf > 0.0 && rows.back().h != row.h)
      row.observed_order = std::log(rows.back().error_w_inf / row.error_w_inf) /
                           std::log(rows.back().h / row.h);
    rows.push_back(row);
  }
  return rows;
}

namespace {

// Six moments about a reference point, via the boundary integral
// M_ab = contour integral of x^(a+1)/(a+1) * y^b dy, counterclockwise.
struct RawMoments {
  double a = 0, mx = 0, my = 0, mxx = 0, mxy = 0, myy = 0;

  RawMoments& operator+=(const RawMoments& o) {
    a += o.a;
    mx += o.mx;
    my += o.my;
    mxx += o.mxx;
    mxy += o.mxy;
    myy += o.myy;
    return *this;
  }
};

// 3-point Gauss-Legendre on [0,1]: exact through degree 5, enough for the
// cubic-in-t integrands of straight segments.
constexpr double kGl3T[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr double kGl3W[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// 20-point Gauss-Legendre on [0,1] for circular arcs (trigonometric
// integrands over short arcs; error far below round-off at these sizes).
constexpr double kGl20T[20] = {
    0.0034357004074525577, 0.018014036361043095, 0.043882785874337047,
    0.080441514088890588,  0.12683404676992460,  0.18197315963674248,
    0.24456649902458644,   0.31314695564229022,  0.38610707442917747,
    0.46173673943325133,   0.53826326056674867,  0.61389292557082253,
    0.68685304435770978,   0.75543350097541356,  0.81802684036325752,
    0.87316595323007540,   0.91955848591110941,  0.95611721412566295,
    0.98198596363895691,   0.99656429959254744};
constexpr double kGl20W[20] = {
    0.0088070035695753026, 0.020300714900193556, 0.031336024167054569,
    0.041638370788352433,  0.050965059908620018, 0.059097265980759248,
    0.065844319224588346,  0.071048054659191187, 0.074586493236301996,
    0.076376693565363113,  0.076376693565363113, 0.074586493236301996,
    0.071048054659191187,  0.065844319224588346, 0.059097265980759248,
    0.050965059908620018,  0.041638370788352433, 0.031336024167054569,
    0.020300714900193556,  0.0088070035695753026};

void accumulate_point(RawMoments& m, double xr, double yr, double dy) {
  m.a += xr * dy;
  m.mx += 0.5 * xr * xr * dy;
  m.my += xr * yr * dy;
  m.mxx += xr * xr * xr / 3.0 * dy;
  m.mxy += 0.5 * xr * xr * yr * dy;
  m.myy += xr * yr * yr * dy;
}

void add_segment(RawMoments& m, double x0, double y0, double x1, double y1,
                 double refx, double refy) {
  const double dy = y1 - y0;
  if (dy == 0.0) return;
  for (int q = 0; q < 3; ++q) {
    const double t = kGl3T[q];
    const double xr = x0 + t * (x1 - x0) - refx;
    const double yr = y0 + t * (y1 - y0) - refy;
    accumulate_point(m, xr, yr, kGl3W[q] * dy);
  }
}

void add_arc(RawMoments& m, double phi0, double phi1, double refx,
             double refy) {
  const double dphi = phi1 - phi0;
  if (dphi == 0.0) return;
  for (int q = 0; q < 20; ++q) {
    const double phi = phi0 + kGl20T[q] * dphi;
    const double xr = std::cos(phi) - refx;
    const double yr = std::sin(phi) - refy;
    accumulate_point(m, xr, yr, kGl20W[q] * dphi * std::cos(phi));
  }
}

struct EdgePiece {
  double x0, y0, x1, y1;
  bool start_clipped, end_clipped;
};

// Moments of (square centered at (cx,cy) with side h) intersect (unit disk),
// about the point (refx, refy).  Zero if the overlap is empty.
RawMoments clipped_square_moments(double cx, double cy, double h, double refx,
                                  double refy) {
  RawMoments m;
  const double hx = 0.5 * h;
  const double corners[4][2] = {{cx - hx, cy - hx},
                                {cx + hx, cy - hx},
                                {cx + hx, cy + hx},
                                {cx - hx, cy + hx}};

  // Entirely inside: every corner is, by convexity.
  double worst = 0.0;
  for (const auto& c : corners)
    worst = std::max(worst, c[0] * c[0] + c[1] * c[1]);
  if (worst < 1.0) {
    const double dx = cx - refx, dy = cy - refy;
    m.a = h * h;
    m.mx = dx * m.a;
    m.my = dy * m.a;
    const double q = h * h * h * h / 12.0;
    m.mxx = q + dx * dx * m.a;
    m.myy = q + dy * dy * m.a;
    m.mxy = dx * dy * m.a;
    return m;
  }

  std::vector<EdgePiece> pieces;
  for (int e = 0; e < 4; ++e) {
    const double px = corners[e][0], py = corners[e][1];
    const double qx = corners[(e + 1) % 4][0], qy = corners[(e + 1) % 4][1];
    const double dx = qx - px, dy = qy - py;
    const double A = dx * dx + dy * dy;
    const double B = px * dx + py * dy;
    const double C = px * px + py * py - 1.0;
    const double disc = B * B - A * C;
    if (disc <= 0.0) continue;  // edge misses the disk
    const double sq = std::sqrt(disc);
    const double t0 = std::max(0.0, (-B - sq) / A);
    const double t1 = std::min(1.0, (-B + sq) / A);
    if (t1 - t0 <= 1e-14) continue;
    EdgePiece ep;
    ep.x0 = px + t0 * dx;
    ep.y0 = py + t0 * dy;
    ep.x1 = px + t1 * dx;
    ep.y1 = py + t1 * dy;
    ep.start_clipped = t0 > 0.0;
    ep.end_clipped = t1 < 1.0;
    pieces.push_back(ep);
  }

  if (pieces.empty()) return m;  // no overlap of positive area

  for (size_t k = 0; k < pieces.size(); ++k) {
    const EdgePiece& ep = pieces[k];
    add_segment(m, ep.x0, ep.y0, ep.x1, ep.y1, refx, refy);
    const EdgePiece& nx = pieces[(k + 1) % pieces.size()];
    if (ep.end_clipped && nx.start_clipped) {
      // The region boundary leaves the square here and follows the circle
      // counterclockwise to the next entry point.  A mismatched flag pair
      // is a corner graze whose arc has measure zero; skip it.
      double a0 = std::atan2(ep.y1, ep.x1);
      double a1 = std::atan2(nx.y0, nx.x0);
      if (a1 <= a0) a1 += 2.0 * kPi;
      add_arc(m, a0, a1, refx, refy);
    }
  }
  return m;
}

}  // namespace

std::vector<CellMoments> disk_cell_moments(const DiskGrid& grid) {
  std::vector<CellMoments> out(grid.size());
  const double h = grid.h;

  for (int j = -grid.half - 1; j <= grid.half + 1; ++j)
    for (int i = -grid.half - 1; i <= grid.half + 1; ++i) {
      const double cx = i * h, cy = j * h;
      // Quick reject: square entirely outside the disk.
      const double ex = std::max(std::fabs(cx) - 0.5 * h, 0.0);
      const double ey = std::max(std::fabs(cy) - 0.5 * h, 0.0);
      if (ex * ex + ey * ey >= 1.0) continue;

      const int own = grid.interior_at(i, j);
      if (own >= 0) {
        const NodeStencil& st = grid.nodes[own];
        const RawMoments m = clipped_square_moments(cx, cy, h, st.x, st.y);
        CellMoments& cm = out[own];
        cm.area += m.a;
        cm.mx += m.mx;
        cm.my += m.my;
        cm.mxx += m.mxx;
        cm.mxy += m.mxy;
        cm.myy += m.myy;
        continue;
      }

      // Sliver owned by an exterior lattice point: hand it to the interior
      // node nearest its centroid, with moments shifted to that node.
      const RawMoments m = clipped_square_moments(cx, cy, h, cx, cy);
      if (m.a <= 0.0) continue;
      const double gx = cx + m.mx / m.a, gy = cy + m.my / m.a;

      int best = -1;
      double bestd = std::numeric_limits<double>::infinity();
      for (int dj = -4; dj <= 4; ++dj)
        for (int di = -4; di <= 4; ++di) {
          const int cand = grid.interior_at(i + di, j + dj);
          if (cand < 0) continue;
          const double ddx = grid.nodes[cand].x - gx;
          const double ddy = grid.nodes[cand].y - gy;
          const double d2 = ddx * ddx + ddy * ddy;
          if (d2 < bestd) {
            bestd = d2;
            best = cand;
          }
        }
      if (best < 0) {
        for (size_t cand = 0; cand < grid.size(); ++cand) {
          const double ddx = grid.nodes[cand].x - gx;
          const double ddy = grid.nodes[cand].y - gy;
          const double d2 = ddx * ddx + ddy * ddy;
          if (d2 < bestd) {
            bestd = d2;
            best = static_cast<int>(cand);
          }
        }
      }

      const double dx = grid.nodes[best].x - cx, dy = grid.nodes[best].y - cy;
      CellMoments& cm = out[best];
      cm.area += m.a;
      cm.mx += m.mx - dx * m.a;
      cm.my += m.my - dy * m.a;
      cm.mxx += m.mxx - 2.0 * dx * m.mx + dx * dx * m.a;
      cm.mxy += m.mxy - dx * m.my - dy * m.mx + dx * dy * m.a;
      cm.myy += m.myy - 2.0 * dy * m.my + dy * dy * m.a;
    }

  return out;
}

}  // namespace abreu
