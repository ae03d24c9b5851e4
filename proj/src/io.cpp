#include "abreu/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "abreu/errors.hpp"

namespace abreu {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "' for reading");
  return in;
}

void check_written(const std::ofstream& out, const std::string& path) {
  if (!out) throw InvalidInput("write to '" + path + "' failed");
}

// Splits one CSV line into exactly `want` doubles.
std::vector<double> parse_row(const std::string& line, size_t want,
                              const std::string& path, size_t lineno) {
  std::vector<double> row;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    const std::string tok = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const char* s = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
      throw InvalidInput(path + ":" + std::to_string(lineno) +
                         ": malformed number '" + tok + "'");
    row.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (row.size() != want)
    throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(want) + " columns, found " +
                       std::to_string(row.size()));
  return row;
}

// Reads the header line, tolerating a trailing carriage return.
void expect_header(std::ifstream& in, const std::string& header,
                   const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    throw InvalidInput(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    throw InvalidInput(path + ": expected header '" + header + "', found '" +
                       line + "'");
}

}  // namespace

void write_radial_csv(const std::string& path, const RadialSolution& sol) {
  std::ofstream out = open_for_write(path);
  out << "r,g,v,w,det\n";
  for (const RadialSample& s : sol.samples)
    out << format_g17(s.r) << ',' << format_g17(s.slope) << ','
        << format_g17(s.v) << ',' << format_g17(s.w) << ','
        << format_g17(s.det) << '\n';
  out.flush();
  check_written(out, path);
}

std::vector<RadialSample> read_radial_csv(const std::string& path) {
  std::ifstream in = open_for_read(path);
  expect_header(in, "r,g,v,w,det", path);
  std::vector<RadialSample> samples;
  std::string line;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<double> row = parse_row(line, 5, path, lineno);
    samples.push_back({row[0], row[1], row[2], row[3], row[4]});
  }
  if (samples.size() < 2)
    throw InvalidInput(path + ": fewer than 2 sample rows");
  return samples;
}

void write_grid_csv(const std::string& path, const GridSolution& sol) {
  std::ofstream out = open_for_write(path);
  out << "x,y,u,w,det\n";
  for (size_t i = 0; i < sol.grid.size(); ++i) {
    const PointState st = discrete_state(sol.u, sol.grid, static_cast<int>(i));
    out << format_g17(sol.grid.nodes[i].x) << ','
        << format_g17(sol.grid.nodes[i].y) << ','
        << format_g17(sol.u.values[i]) << ',' << format_g17(sol.w.values[i])
        << ',' << format_g17(st.det) << '\n';
  }
  out.flush();
  check_written(out, path);
}

GridCsvData read_grid_csv(const std::string& path) {
  std::ifstream in = open_for_read(path);
  expect_header(in, "x,y,u,w,det", path);
  GridCsvData data;
  std::string line;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<double> row = parse_row(line, 5, path, lineno);
    data.x.push_back(row[0]);
    data.y.push_back(row[1]);
    data.u.push_back(row[2]);
    data.w.push_back(row[3]);
    data.det.push_back(row[4]);
  }
  if (data.x.empty()) throw InvalidInput(path + ": no data rows");
  return data;
}

std::pair<GridField, GridField> grid_fields_from_csv(const GridCsvData& data,
                                                     const DiskGrid& grid,
                                                     BoundaryFn phi_bc,
                                                     BoundaryFn psi_bc) {
  if (data.x.size() != grid.size())
    throw InvalidInput("grid reconstruction: file has " +
                       std::to_string(data.x.size()) + " rows but the grid " +
                       std::to_string(grid.size()) +
                       " nodes (spacing mismatch?)");
  for (size_t i = 0; i < grid.size(); ++i)
    if (data.x[i] != grid.nodes[i].x || data.y[i] != grid.nodes[i].y)
      throw InvalidInput("grid reconstruction: row " + std::to_string(i + 2) +
                         " does not sit on the reconstructed grid node");
  GridField u, w;
  u.values = data.u;
  u.boundary_fn = std::move(phi_bc);
  w.values = data.w;
  w.boundary_fn = std::move(psi_bc);
  return {std::move(u), std::move(w)};
}

}  // namespace abreu
