#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "abreu/errors.hpp"
#include "abreu/grid.hpp"
#include "abreu/radial.hpp"
#include "doctest.h"

using namespace abreu;

namespace {

constexpr double kPi = 3.14159265358979323846;

double sup_error(const GridField& field, const DiskGrid& grid,
                 const std::function<double(double, double)>& exact) {
  double err = 0.0;
  for (size_t i = 0; i < grid.size(); ++i)
    err = std::max(err, std::fabs(field.values[i] -
                                  exact(grid.nodes[i].x, grid.nodes[i].y)));
  return err;
}

bool node_is_far(const DiskGrid& grid, size_t i) {
  for (int d = 0; d < 8; ++d)
    if (grid.nodes[i].arm[d].is_boundary) return false;
  return true;
}

BoundaryFn constant_bc(double v) {
  return [v](double, double) { return v; };
}

// Max Hessian entry error of sin(x)cos(y), split by distance to the rim.
std::pair<double, double> hessian_error_split(double h) {
  const DiskGrid grid = build_disk_grid(h);
  const GridField u = GridField::sample(
      grid, [](double x, double y) { return std::sin(x) * std::cos(y); });
  double far = 0.0, near = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.nodes[i].x, y = grid.nodes[i].y;
    const PointState st = discrete_state(u, grid, static_cast<int>(i));
    const double exx = std::fabs(st.hess(0, 0) + std::sin(x) * std::cos(y));
    const double exy = std::fabs(st.hess(0, 1) + std::cos(x) * std::sin(y));
    const double eyy = std::fabs(st.hess(1, 1) + std::sin(x) * std::cos(y));
    double& bucket = node_is_far(grid, i) ? far : near;
    bucket = std::max(bucket, std::max({exx, exy, eyy}));
  }
  return {far, near};
}

}  // namespace

TEST_CASE("grid construction refuses spacings without a working stencil") {
  CHECK_THROWS_AS(build_disk_grid(0.5), InvalidInput);
  CHECK_THROWS_AS(build_disk_grid(0.25), InvalidInput);
  CHECK_THROWS_AS(build_disk_grid(0.0), InvalidInput);
  CHECK_THROWS_AS(build_disk_grid(-0.1), InvalidInput);
}

TEST_CASE("node count tracks the disk area") {
  for (double h : {1.0 / 16, 1.0 / 20, 0.07}) {
    const DiskGrid grid = build_disk_grid(h);
    const double expected = kPi / (h * h);
    CHECK(std::fabs(static_cast<double>(grid.size()) - expected) <=
          0.1 * expected);
  }
}

TEST_CASE("every node carries eight consistent arms") {
  const DiskGrid grid = build_disk_grid(1.0 / 12);
  const double h = grid.h;
  size_t boundary_arms = 0;
  for (size_t idx = 0; idx < grid.size(); ++idx) {
    const NodeStencil& node = grid.nodes[idx];
    CHECK(node.x * node.x + node.y * node.y < 1.0);
    for (int d = 0; d < 8; ++d) {
      const BoundaryArm& arm = node.arm[d];
      const double dx = kDirStep[d][0] * h;
      const double dy = kDirStep[d][1] * h;
      if (arm.is_boundary) {
        ++boundary_arms;
        CHECK(arm.theta > 0.0);
        CHECK(arm.theta <= 1.0);
        // The hit point sits on the circle, along the arm's ray.
        CHECK(std::fabs(arm.bx * arm.bx + arm.by * arm.by - 1.0) < 1e-12);
        CHECK(std::fabs(arm.bx - (node.x + arm.theta * dx)) < 1e-12);
        CHECK(std::fabs(arm.by - (node.y + arm.theta * dy)) < 1e-12);
      } else {
        REQUIRE(arm.neighbor >= 0);
        REQUIRE(arm.neighbor < static_cast<int>(grid.size()));
        const NodeStencil& nb = grid.nodes[arm.neighbor];
        CHECK(nb.i == node.i + kDirStep[d][0]);
        CHECK(nb.j == node.j + kDirStep[d][1]);
      }
    }
  }
  CHECK(boundary_arms > 0);
}

TEST_CASE("quadratics differentiate exactly, rim arms included") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const GridField q = GridField::sample(
      grid, [](double x, double y) { return x * x + y * y; });
  const GridField mixed =
      GridField::sample(grid, [](double x, double y) { return x * y; });
  for (size_t i = 0; i < grid.size(); ++i) {
    const PointState sq = discrete_state(q, grid, static_cast<int>(i));
    CHECK(std::fabs(sq.hess(0, 0) - 2.0) < 1e-10);
    CHECK(std::fabs(sq.hess(1, 1) - 2.0) < 1e-10);
    CHECK(std::fabs(sq.hess(0, 1)) < 1e-10);
    CHECK(std::fabs(sq.grad[0] - 2.0 * grid.nodes[i].x) < 1e-10);
    CHECK(std::fabs(sq.grad[1] - 2.0 * grid.nodes[i].y) < 1e-10);

    const PointState sm = discrete_state(mixed, grid, static_cast<int>(i));
    CHECK(std::fabs(sm.hess(0, 1) - 1.0) < 1e-10);
    CHECK(std::fabs(sm.hess(0, 0)) < 1e-10);
  }
}

TEST_CASE("smooth fields differentiate at second order away from the rim") {
  const auto [far32, near32] = hessian_error_split(1.0 / 32);
  const auto [far64, near64] = hessian_error_split(1.0 / 64);
  CHECK(far32 < 1e-2);
  CHECK(far32 / far64 > 3.0);   // halving h quarters the far error
  CHECK(near32 / near64 > 1.4); // rim arms are one-sided: first order
}

TEST_CASE("linearized step passes constants through") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const GridField u = GridField::sample(
      grid, [](double x, double y) { return 0.5 * (x * x + y * y); });
  const GridField rhs = GridField::constant(grid, 0.0, constant_bc(0.0));
  const SolverConfig config;
  const GridField w =
      solve_linearized_ma(u, rhs, constant_bc(1.0), grid, config);
  CHECK(sup_error(w, grid, [](double, double) { return 1.0; }) <=
        config.newton_tol);
}

TEST_CASE("linearized step reproduces a quadratic pair to round-off") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const GridField u = GridField::sample(
      grid, [](double x, double y) { return 0.5 * (x * x + y * y); });
  const GridField rhs = GridField::constant(grid, 4.0, constant_bc(4.0));
  const auto psi = [](double x, double y) { return 1.0 + x * x + y * y; };
  const GridField w = solve_linearized_ma(u, rhs, psi, grid, SolverConfig{});
  CHECK(sup_error(w, grid, psi) < 1e-11);
}

TEST_CASE("linearized step keeps the minimum on the rim for nonpositive data") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  // A smooth, non-radial, uniformly convex base.
  const GridField u = GridField::sample(grid, [](double x, double y) {
    return 0.5 * (x * x + y * y) + 0.05 * std::exp(x) * std::cos(y);
  });
  const SolverConfig config;
  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> mag(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    GridField rhs = GridField::constant(grid, 0.0, constant_bc(0.0));
    for (double& v : rhs.values) v = -mag(rng);
    const GridField w =
        solve_linearized_ma(u, rhs, constant_bc(1.0), grid, config);
    double wmin = w.values[0];
    for (double v : w.values) wmin = std::min(wmin, v);
    CHECK(wmin >= 1.0 - 10.0 * config.newton_tol);
  }
}

TEST_CASE("curvature solve settles on the quadratic fixed point") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const GridField w = GridField::constant(grid, 1.0, constant_bc(1.0));
  const SolverConfig config;
  SolveReport report;
  const GridField u = solve_monge_ampere(w, constant_bc(0.5), grid, config,
                                         {}, &report);
  CHECK(report.newton_iterations <= 3);
  CHECK(sup_error(u, grid, [](double x, double y) {
          return 0.5 * (x * x + y * y);
        }) < 1e-10);
  for (size_t i = 0; i < grid.size(); ++i)
    CHECK(std::fabs(discrete_state(u, grid, static_cast<int>(i)).det - 1.0) <
          1e-10);
}

TEST_CASE("curvature solve recovers the constant-determinant closed form") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const double psi = 2.25;  // so the exact pair has det = 1/psi, scale 1.5
  const GridField w = GridField::constant(grid, psi, constant_bc(psi));
  const GridField u =
      solve_monge_ampere(w, constant_bc(0.0), grid, SolverConfig{});
  CHECK(sup_error(u, grid, [](double x, double y) {
          return (x * x + y * y - 1.0) / 3.0;
        }) < 1e-9);
}

TEST_CASE("curvature solve rejects nonpositive curvature data") {
  const DiskGrid grid = build_disk_grid(1.0 / 12);
  GridField w = GridField::constant(grid, 1.0, constant_bc(1.0));
  w.values[w.values.size() / 2] = -0.25;
  CHECK_THROWS_AS(
      solve_monge_ampere(w, constant_bc(0.0), grid, SolverConfig{}),
      InvalidInput);
}

TEST_CASE("coupled solve with a zero model returns the flat pair") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const GridSolution sol = solve_coupled(RhsModel::zero(), constant_bc(0.0),
                                         constant_bc(1.0), grid,
                                         SolverConfig{});
  CHECK(sol.report.converged);
  CHECK(sup_error(sol.w, grid, [](double, double) { return 1.0; }) < 1e-8);
  CHECK(sup_error(sol.u, grid, [](double x, double y) {
          return 0.5 * (x * x + y * y - 1.0);
        }) < 1e-8);
}

TEST_CASE("coupled solve, unit trace-scaled model: shifted quadratic") {
  const DiskGrid grid = build_disk_grid(1.0 / 32);
  const SolverConfig config;
  const GridSolution sol =
      solve_coupled(RhsModel::laplacian_scaled(1.0), constant_bc(0.0),
                    constant_bc(1.0), grid, config);
  CHECK(sol.report.converged);
  CHECK(sup_error(sol.w, grid, [](double x, double y) {
          return 0.5 * (1.0 + x * x + y * y);
        }) < 1e-8);
  // Consistency of the pair at convergence.
  for (size_t i = 0; i < grid.size(); ++i) {
    const double det = discrete_state(sol.u, grid, static_cast<int>(i)).det;
    CHECK(std::fabs(det * sol.w.values[i] - 1.0) <= 10.0 * config.newton_tol);
    CHECK(sol.w.values[i] > 0.0);
  }
}

TEST_CASE("coupled solve, divergence-form negative sign: radial profile") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const GridSolution sol =
      solve_coupled(RhsModel::p_laplacian(2.0, -1), constant_bc(0.0),
                    constant_bc(1.0), grid, SolverConfig{});
  CHECK(sup_error(sol.w, grid, [](double x, double y) {
          return 0.5 * (3.0 - x * x - y * y);
        }) < 1e-7);
}

TEST_CASE("coupled solve surfaces non-convergence instead of hiding it") {
  const DiskGrid grid = build_disk_grid(1.0 / 12);
  SolverConfig config;
  config.max_outer = 2;
  CHECK_THROWS_AS(solve_coupled(RhsModel::p_laplacian(2.0, -1),
                                constant_bc(0.0), constant_bc(1.0), grid,
                                config),
                  SolveFailure);
}

TEST_CASE("clamped model: activity count never grows as the scale halves") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  int previous = -1;
  for (double gamma : {0.05, 0.025, 0.0125}) {
    const RhsModel model =
        RhsModel::clamped(RhsModel::p_laplacian(2.0, -1), gamma);
    const GridSolution sol = solve_coupled(model, constant_bc(0.0),
                                           constant_bc(1.0), grid,
                                           SolverConfig{});
    CHECK(sol.report.converged);
    CHECK(sol.report.clamp_map.size() == grid.size());
    if (previous >= 0) CHECK(sol.report.clamp_active <= previous);
    previous = sol.report.clamp_active;
  }
}

TEST_CASE("refinement study: one spacing yields one row without an order") {
  // The f=+1 planar problem has the radial reduction as its reference.
  RadialProblem prob;
  prob.f_sign = +1;
  const CompatibilityAnalysis an = solve_compatibility(prob);
  REQUIRE(an.roots.size() == 1);
  const RadialSolution reference = solve_profile(prob, an.roots[0], 257);

  const std::vector<StudyRow> rows =
      convergence_study(RhsModel::laplacian_scaled(1.0), constant_bc(0.0),
                        constant_bc(1.0), {1.0 / 8}, SolverConfig{},
                        reference);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].h == 1.0 / 8);
  CHECK(!rows[0].observed_order.has_value());
  CHECK(rows[0].error_w_inf < 1e-6);

  // Boundary data that disagrees with the reference is a precondition error.
  CHECK_THROWS_AS(
      convergence_study(RhsModel::laplacian_scaled(1.0), constant_bc(0.0),
                        constant_bc(2.0), {1.0 / 8}, SolverConfig{},
                        reference),
      InvalidInput);
}

TEST_CASE("quadrature cells tile the disk") {
  const DiskGrid grid = build_disk_grid(1.0 / 16);
  const std::vector<CellMoments> cells = disk_cell_moments(grid);
  REQUIRE(cells.size() == grid.size());
  double area = 0.0, second = 0.0;
  for (size_t i = 0; i < grid.size(); ++i) {
    const CellMoments& c = cells[i];
    CHECK(c.area >= 0.0);
    CHECK(c.area <= 4.0 * grid.h * grid.h);  // own square plus slivers
    area += c.area;
    const double x = grid.nodes[i].x, y = grid.nodes[i].y;
    second += c.mxx + c.myy + 2.0 * (x * c.mx + y * c.my) +
              (x * x + y * y) * c.area;
  }
  CHECK(std::fabs(area - kPi) < 1e-12);
  CHECK(std::fabs(second - kPi / 2.0) < 1e-12);
}
