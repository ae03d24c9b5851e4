#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "abreu/operators.hpp"
#include "abreu/radial.hpp"
#include "abreu/report.hpp"

namespace abreu {

// Dirichlet data sampled on the unit circle.
using BoundaryFn = std::function<double(double, double)>;

// Arm directions of the 9-point stencil, unit lattice steps.
enum Dir { E = 0, W, N, S, NE, NW, SE, SW };
inline constexpr int kDirStep[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                       {1, 1},  {-1, 1}, {1, -1}, {-1, -1}};

// One arm of a stencil: either an interior neighbor at the full arm length,
// or the point where the grid line meets the circle, at fraction theta of
// the full arm.  theta is in (0, 1] by construction.
struct BoundaryArm {
  bool is_boundary = false;
  int neighbor = -1;  // interior node index when !is_boundary
  double theta = 1.0;
  double bx = 0.0, by = 0.0;  // circle point when is_boundary
};

struct NodeStencil {
  int i = 0, j = 0;  // lattice coordinates, node at (i*h, j*h)
  double x = 0.0, y = 0.0;
  BoundaryArm arm[8];
};

// Uniform lattice restricted to the open unit disk, with the circle
// intersection data every near-boundary node needs for one-sided
// differences.
struct DiskGrid {
  double h = 0.0;
  int half = 0;  // lattice indices run in [-half, half] per axis
  std::vector<NodeStencil> nodes;
  std::vector<int> index;  // lattice (i,j) -> interior node index, or -1

  size_t size() const { return nodes.size(); }
  int span() const { return 2 * half + 1; }
  int interior_at(int i, int j) const {
    if (i < -half || i > half || j < -half || j > half) return -1;
    return index[static_cast<size_t>(j + half) * span() + (i + half)];
  }
};

// Lays out the lattice and computes all circle intersections.
// Requires 0 < h < 1/4 and refuses grids with fewer than 9 interior nodes.
DiskGrid build_disk_grid(double h);

// Nodal values plus the Dirichlet closure for the circle.
struct GridField {
  std::vector<double> values;
  BoundaryFn boundary_fn;

  static GridField constant(const DiskGrid& grid, double value, BoundaryFn bc);
  // Samples one closure at the nodes and reuses it as boundary data.
  static GridField sample(const DiskGrid& grid,
                          const std::function<double(double, double)>& f);
  double boundary(double x, double y) const { return boundary_fn(x, y); }
};

// Gradient and Hessian of a grid field at one interior node, by central
// differences with one-sided corrections at circle arms.  Second order on
// smooth fields away from the boundary, first order next to it.
PointState discrete_state(const GridField& u, const DiskGrid& grid, int node);

struct SolverConfig {
  double damping = 0.5;  // outer-loop mixing, in (0, 1]
  double outer_tol = 1e-8;
  int max_outer = 200;
  // Inner Newton bar.  The residual at the thinnest boundary arms carries
  // round-off of order 1/(theta h^2) * eps, about 1e-10 at h = 1/64, so the
  // default keeps a margin above that floor.
  double newton_tol = 1e-9;
  int max_newton = 50;
  double convexity_floor = 1e-8;  // Hessian eigenvalue safeguard

  void validate() const;
};

struct SolveReport {
  SolverConfig config;  // the settings the solve ran with
  bool converged = false;
  int outer_iterations = 0;
  int newton_iterations = 0;           // total across all inner solves
  std::vector<double> outer_deltas;    // max |u_next - u| per outer step
  std::vector<double> newton_residuals;  // final inner residual per outer step
  int safeguard_active = 0;   // nodes with a clipped Hessian eigenvalue, final
  int clamp_active = 0;       // clamp-saturated nodes at the final iterate
  std::vector<unsigned char> clamp_map;  // per node, clamp saturated
  VerificationReport max_principle;      // filled by the verify layer
};

struct GridSolution {
  GridField u;
  GridField w;
  DiskGrid grid;
  RhsModel model;
  SolveReport report;
};

// Solves sum_ij U^ij w_ij = rhs with w = psi_bc on the circle, where U is
// the cofactor matrix of the (safeguarded) discrete Hessian of u.
GridField solve_linearized_ma(const GridField& u, const GridField& rhs,
                              const BoundaryFn& psi_bc, const DiskGrid& grid,
                              const SolverConfig& config);

// Damped Newton iteration on det D^2 u = 1/w with u = phi_bc on the circle.
// Without an initial guess, seeds from the Poisson problem matching the
// determinant's mean scale.  Throws SolveFailure on stagnation.  When a
// report is supplied, inner iteration counts and the safeguard-activity
// count are accumulated into it.
GridField solve_monge_ampere(const GridField& w, const BoundaryFn& phi_bc,
                             const DiskGrid& grid, const SolverConfig& config,
                             const std::optional<GridField>& init = {},
                             SolveReport* report = nullptr);

// Outer fixed-point loop for the coupled pair (u, w): evaluate the model's
// right-hand side at the current u, solve the linearized problem for w, then
// the determinant equation for u, and mix with the damping factor.
GridSolution solve_coupled(const RhsModel& model, const BoundaryFn& phi_bc,
                           const BoundaryFn& psi_bc, const DiskGrid& grid,
                           const SolverConfig& config);

struct StudyRow {
  double h = 0.0;
  double error_u_inf = 0.0;
  double error_w_inf = 0.0;
  std::optional<double> observed_order;  // from the previous row's w error
};

// Runs solve_coupled over each h and measures sup errors against the radial
// reference, interpolated monotonically in r.
std::vector<StudyRow> convergence_study(const RhsModel& model,
                                        const BoundaryFn& phi_bc,
                                        const BoundaryFn& psi_bc,
                                        const std::vector<double>& h_list,
                                        const SolverConfig& config,
                                        const RadialSolution& reference);

// Exact moments of the quadrature cell owned by each interior node, taken
// about that node: the lattice squares clipped to the disk, with slivers of
// exterior-node squares reassigned to the nearest interior node.  The areas
// sum to pi exactly (up to round-off).
struct CellMoments {
  double area = 0.0;
  double mx = 0.0, my = 0.0;    // first moments about the node
  double mxx = 0.0, mxy = 0.0, myy = 0.0;
};
std::vector<CellMoments> disk_cell_moments(const DiskGrid& grid);

}  // namespace abreu
