#pragma once

#include <limits>

#include "abreu/grid.hpp"
#include "abreu/radial.hpp"
#include "abreu/report.hpp"

namespace abreu {

// Energy functional: integral over the disk of |Du|^p / p - log det D^2 u.
// Radial data are integrated against the rotationally symmetric measure by
// composite Simpson (with one 3/8 block when the interval count is odd);
// grid data use the exact per-node cell moments plus second-order nodal
// corrections, which makes quadratic integrands exact.  Throws InvalidInput
// when any sample has a nonpositive determinant.
double energy_Jp(const RadialSolution& sol, double p);
double energy_Jp(const GridSolution& sol, double p);

// Three maximum-principle audits on a converged coupled solution, each with
// tolerance 10x the outer tolerance the solve ran with:
//  (a) when the evaluated right-hand side is nonpositive everywhere, w
//      attains its minimum on the boundary;
//  (b) for Newton-type models, w + |x|^2 attains its maximum on the
//      boundary;
//  (c) for trace-scaled models in the plane, w - (max|f|/2)|x|^2 attains
//      its minimum on the boundary.
// Audits that do not apply to the model are reported with applicable=false.
VerificationReport check_max_principles(const GridSolution& sol,
                                        const RhsModel& model);

// Discrete integral of [F(u) - F(v)] (u - v) over the disk, cell-weighted.
// Requires u = v on the circle (sampled at the grid's boundary points).
// For the divergence-form power-law family with exponent >= 2 and negative
// sign this is nonnegative up to quadrature error.
double check_monotonicity_F(const RhsModel& model, const GridField& u,
                            const GridField& v, const DiskGrid& grid);

struct CrossValidateTolerances {
  double u_inf = std::numeric_limits<double>::infinity();
  double w_inf = std::numeric_limits<double>::infinity();
  double energy_gap = std::numeric_limits<double>::infinity();
};

// Sup-norm comparison of a planar grid solution against a radial reference
// (monotone cubic interpolation in r), plus the energy gap.  Requires the
// same (n=2, p, f, psi, phi); throws InvalidInput on any mismatch.
VerificationReport cross_validate(
    const GridSolution& grid_sol, const RadialSolution& radial_ref,
    const CrossValidateTolerances& tol = {});

// Directional probe of local minimality of the energy at a radial solution:
// perturbs the profile by eps * eta for cubic and quartic bumps eta with
// eta(1) = 0, recomputes slope and determinant for BOTH the base and the
// perturbed profile through one differencing pipeline, and checks
// J_p(perturbed) >= J_p(base) - 1e-8.  Directions that leave the convex
// cone are reported with applicable=false.  Perturbations whose endpoint
// slope eta'(1) is nonzero change the energy at first order through a
// boundary flux term; the detail string carries that predicted term.
VerificationReport check_euler_lagrange(const RadialSolution& sol);

}  // namespace abreu
