#pragma once

#include <string>
#include <utility>
#include <vector>

#include "abreu/grid.hpp"
#include "abreu/radial.hpp"

namespace abreu {

// One double with 17 significant digits: parses back to the same bits.
std::string format_g17(double v);

// Radial CSV, header `r,g,v,w,det`, one row per sample in r order.
void write_radial_csv(const std::string& path, const RadialSolution& sol);
std::vector<RadialSample> read_radial_csv(const std::string& path);

// Planar CSV, header `x,y,u,w,det`, one row per interior node in grid
// order; det is the pointwise discrete determinant of u at the node.
void write_grid_csv(const std::string& path, const GridSolution& sol);

struct GridCsvData {
  std::vector<double> x, y, u, w, det;
};
GridCsvData read_grid_csv(const std::string& path);

// Rebinds CSV rows to a freshly built grid.  Row order and coordinates must
// reproduce the grid's nodes exactly (they do when the same h is used,
// because writing used 17 significant digits); otherwise InvalidInput.
std::pair<GridField, GridField> grid_fields_from_csv(const GridCsvData& data,
                                                     const DiskGrid& grid,
                                                     BoundaryFn phi_bc,
                                                     BoundaryFn psi_bc);

}  // namespace abreu
