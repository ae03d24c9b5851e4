#pragma once

#include <string>

#include "abreu/grid.hpp"

namespace abreu {

// One command per invocation.  Defaults here are the CLI defaults.
enum class Command { RADIAL, ROOTS, GRID, VERIFY, ENERGY, STUDY };

struct RunConfig {
  Command command = Command::RADIAL;

  // Shared problem parameters.
  int n = 2;
  double p = 2.0;
  double f = -1.0;   // sign for radial / divergence-form models, plain
                     // coefficient for trace-scaled and Newton-type models
  double psi = 1.0;  // boundary value of w, constant
  double phi = 0.0;  // boundary value of u, constant

  // Radial commands.
  int samples = 512;
  double tmax = 10.0;
  double tstep = 1e-3;
  int root_index = 0;  // which admissible boundary slope to reconstruct

  // Planar model selection: laplacian | p_laplacian | newton | clamped.
  std::string model = "p_laplacian";
  double gamma = 0.05;  // clamped
  double g = 1.0;       // newton zero-order coefficient
  int k = 1;            // newton trace index

  // Grid spacing, "1/32" or a decimal; study takes a comma-separated list.
  std::string h = "1/32";
  std::string h_list;

  SolverConfig solver;

  // Input/output.  Relative output paths resolve against ABREULAB_OUT_DIR
  // when that variable is set.
  std::string out;              // data file (CSV); empty = stdout record only
  std::string in;               // verify/energy input CSV
  std::string kind = "radial";  // verify/energy input flavor: radial | grid
};

// "1/32" or "0.03125" -> double.  InvalidInput on anything else.
double parse_spacing(const std::string& text);

// Executes one command: prints a JSON record to stdout and returns the
// process exit status.  0: success, with any requested artifacts written
// and a provenance record beside them.  1: a solver reported failure; the
// record carries {"error": {...}}.  2: invalid input.  An empty root list
// from a radial scan is a result, not an error: exit 0.
int run(const RunConfig& config);

// Parses argv (subcommands radial|roots|grid|verify|energy|study), applies
// the JSON file named by --config on top of the flags, and calls run().
int run_cli(int argc, const char* const* argv);

}  // namespace abreu
