#include "abreu/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "abreu/errors.hpp"
#include "abreu/io.hpp"
#include "abreu/verify.hpp"
#include "abreu/version.hpp"

namespace abreu {

using nlohmann::json;

namespace {

double parse_number(const std::string& text, const std::string& what) {
  const char* s = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw InvalidInput("cannot parse " + what + " '" + text + "'");
  return v;
}

}  // namespace

double parse_spacing(const std::string& text) {
  const size_t slash = text.find('/');
  double value;
  if (slash == std::string::npos) {
    value = parse_number(text, "spacing");
  } else {
    const double num = parse_number(text.substr(0, slash), "spacing numerator");
    const double den =
        parse_number(text.substr(slash + 1), "spacing denominator");
    if (den == 0.0) throw InvalidInput("spacing denominator is zero");
    value = num / den;
  }
  if (!(value > 0.0) || !std::isfinite(value))
    throw InvalidInput("spacing must be a positive finite number, got '" +
                       text + "'");
  return value;
}

namespace {

const char* command_name(Command c) {
  switch (c) {
    case Command::RADIAL: return "radial";
    case Command::ROOTS: return "roots";
    case Command::GRID: return "grid";
    case Command::VERIFY: return "verify";
    case Command::ENERGY: return "energy";
    case Command::STUDY: return "study";
  }
  return "?";
}

int sign_flag(double f, const std::string& context) {
  if (f == 1.0) return 1;
  if (f == -1.0) return -1;
  throw InvalidInput("--f must be +1 or -1 for " + context);
}

RadialProblem radial_problem(const RunConfig& c) {
  RadialProblem prob;
  prob.n = c.n;
  prob.p = c.p;
  prob.f_sign = sign_flag(c.f, "radial problems");
  prob.psi = c.psi;
  prob.phi = c.phi;
  prob.validate();
  return prob;
}

RhsModel model_from(const RunConfig& c) {
  if (c.model == "laplacian") return RhsModel::laplacian_scaled(c.f);
  if (c.model == "p_laplacian")
    return RhsModel::p_laplacian(c.p, sign_flag(c.f, "the p_laplacian model"));
  if (c.model == "newton") return RhsModel::newton(c.f, c.g, c.k);
  if (c.model == "clamped")
    return RhsModel::clamped(
        RhsModel::p_laplacian(c.p, sign_flag(c.f, "the clamped model")),
        c.gamma);
  throw InvalidInput("unknown model '" + c.model +
                     "' (expected laplacian, p_laplacian, newton or clamped)");
}

// Relative output paths land in ABREULAB_OUT_DIR when it is set.
std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  const char* env = std::getenv("ABREULAB_OUT_DIR");
  if (env && *env) return (std::filesystem::path(env) / p).string();
  return path;
}

json config_json(const RunConfig& c) {
  return json{{"command", command_name(c.command)},
              {"n", c.n},
              {"p", c.p},
              {"f", c.f},
              {"psi", c.psi},
              {"phi", c.phi},
              {"samples", c.samples},
              {"tmax", c.tmax},
              {"tstep", c.tstep},
              {"root_index", c.root_index},
              {"model", c.model},
              {"gamma", c.gamma},
              {"g", c.g},
              {"k", c.k},
              {"h", c.h},
              {"h_list", c.h_list},
              {"damping", c.solver.damping},
              {"outer_tol", c.solver.outer_tol},
              {"max_outer", c.solver.max_outer},
              {"newton_tol", c.solver.newton_tol},
              {"max_newton", c.solver.max_newton},
              {"convexity_floor", c.solver.convexity_floor},
              {"out", c.out},
              {"in", c.in},
              {"kind", c.kind}};
}

json analysis_json(const CompatibilityAnalysis& an) {
  json j{{"regime", regime_name(an.regime)},
         {"roots", an.roots},
         {"scan_max", an.scan_max},
         {"scan_step", an.scan_step},
         {"closed_form_used", an.closed_form_used},
         {"tangency_suspected", an.tangency_suspected},
         {"note", an.note}};
  if (an.threshold_M)
    j["threshold_M"] = *an.threshold_M;
  else
    j["threshold_M"] = nullptr;
  return j;
}

json report_json(const VerificationReport& rep) {
  json checks = json::array();
  for (const CheckResult& c : rep.checks)
    checks.push_back(json{{"name", c.name},
                          {"passed", c.passed},
                          {"applicable", c.applicable},
                          {"measured", c.measured},
                          {"tolerance", c.tolerance},
                          {"detail", c.detail}});
  return json{{"checks", checks}, {"all_passed", rep.all_passed()}};
}

json solve_report_json(const SolveReport& rep) {
  return json{{"converged", rep.converged},
              {"outer_iterations", rep.outer_iterations},
              {"newton_iterations", rep.newton_iterations},
              {"outer_deltas", rep.outer_deltas},
              {"newton_residuals", rep.newton_residuals},
              {"safeguard_active", rep.safeguard_active},
              {"clamp_active", rep.clamp_active}};
}

// Every run leaves a provenance record: the full effective configuration,
// the tool version, and the command's own record (residuals included).
void write_provenance(const RunConfig& c, const json& record,
                      const std::string& data_path) {
  std::filesystem::path path;
  if (!data_path.empty()) {
    path = std::filesystem::path(data_path);
    path.replace_filename(path.stem().string() + ".provenance.json");
  } else {
    path = resolve_out(std::string(command_name(c.command)) +
                       ".provenance.json");
  }
  std::ofstream out(path);
  if (!out)
    throw InvalidInput("cannot open '" + path.string() + "' for writing");
  const json prov{{"tool", {{"name", "abreulab"}, {"version", kVersion}}},
                  {"config", config_json(c)},
                  {"record", record}};
  out << prov.dump(2) << '\n';
  out.flush();
  if (!out) throw InvalidInput("write to '" + path.string() + "' failed");
}

BoundaryFn constant_bc(double v) {
  return [v](double, double) { return v; };
}

json run_radial(const RunConfig& c, std::string* data_path) {
  const RadialProblem prob = radial_problem(c);
  const CompatibilityAnalysis an =
      solve_compatibility(prob, c.tmax, c.tstep);
  json record = analysis_json(an);
  if (an.roots.empty()) return record;  // nonexistence is a result

  if (c.root_index < 0 || c.root_index >= static_cast<int>(an.roots.size()))
    throw InvalidInput("root index " + std::to_string(c.root_index) +
                       " out of range; the scan found " +
                       std::to_string(an.roots.size()) + " root(s)");
  const RadialSolution sol =
      solve_profile(prob, an.roots[c.root_index], c.samples);
  record["g1"] = sol.g1;
  record["residual_ode"] = residual_ode(sol);
  record["w_at_0"] = sol.samples.front().w;
  const auto growth = check_linear_growth(sol);
  record["growth"] = {{"c_lo", growth.first}, {"c_hi", growth.second}};

  if (!c.out.empty()) {
    *data_path = resolve_out(c.out);
    write_radial_csv(*data_path, sol);
    record["files"] = {{"data", *data_path}};
  }
  return record;
}

json run_roots(const RunConfig& c) {
  const RadialProblem prob = radial_problem(c);
  return analysis_json(solve_compatibility(prob, c.tmax, c.tstep));
}

json run_grid(const RunConfig& c, std::string* data_path) {
  if (c.n != 2)
    throw InvalidInput("the grid solver works on the planar disk (n = 2)");
  const RhsModel model = model_from(c);
  const DiskGrid grid = build_disk_grid(parse_spacing(c.h));
  const GridSolution sol = solve_coupled(model, constant_bc(c.phi),
                                         constant_bc(c.psi), grid, c.solver);
  json record = solve_report_json(sol.report);
  record["nodes"] = grid.size();
  record["max_principles"] = report_json(check_max_principles(sol, model));

  if (!c.out.empty()) {
    *data_path = resolve_out(c.out);
    write_grid_csv(*data_path, sol);
    record["files"] = {{"data", *data_path}};
  }
  return record;
}

json run_verify(const RunConfig& c) {
  if (c.in.empty()) throw InvalidInput("verify needs --in <csv>");
  json record;
  if (c.kind == "radial") {
    RadialSolution sol;
    sol.problem = radial_problem(c);
    sol.samples = read_radial_csv(c.in);
    sol.g1 = sol.samples.back().slope;
    record["residual_ode"] = residual_ode(sol);
    const auto growth = check_linear_growth(sol);
    record["growth"] = {{"c_lo", growth.first}, {"c_hi", growth.second}};
    record["stationarity"] = report_json(check_euler_lagrange(sol));
  } else if (c.kind == "grid") {
    const RhsModel model = model_from(c);
    GridSolution sol;
    sol.grid = build_disk_grid(parse_spacing(c.h));
    const GridCsvData data = read_grid_csv(c.in);
    auto fields = grid_fields_from_csv(data, sol.grid, constant_bc(c.phi),
                                       constant_bc(c.psi));
    sol.u = std::move(fields.first);
    sol.w = std::move(fields.second);
    sol.model = model;
    sol.report.config = c.solver;
    record["max_principles"] = report_json(check_max_principles(sol, model));
  } else {
    throw InvalidInput("--kind must be radial or grid");
  }
  return record;
}

json run_energy(const RunConfig& c) {
  if (c.in.empty()) throw InvalidInput("energy needs --in <csv>");
  double j;
  if (c.kind == "radial") {
    RadialSolution sol;
    sol.problem = radial_problem(c);
    sol.samples = read_radial_csv(c.in);
    sol.g1 = sol.samples.back().slope;
    j = energy_Jp(sol, c.p);
  } else if (c.kind == "grid") {
    GridSolution sol;
    sol.grid = build_disk_grid(parse_spacing(c.h));
    const GridCsvData data = read_grid_csv(c.in);
    auto fields = grid_fields_from_csv(data, sol.grid, constant_bc(c.phi),
                                       constant_bc(c.psi));
    sol.u = std::move(fields.first);
    sol.w = std::move(fields.second);
    sol.model = RhsModel::zero();
    j = energy_Jp(sol, c.p);
  } else {
    throw InvalidInput("--kind must be radial or grid");
  }
  return json{{"energy", j}, {"p", c.p}};
}

json run_study(const RunConfig& c, std::string* data_path) {
  if (c.h_list.empty())
    throw InvalidInput("study needs --h-list (comma-separated spacings)");
  std::vector<double> hs;
  size_t start = 0;
  while (true) {
    const size_t comma = c.h_list.find(',', start);
    hs.push_back(parse_spacing(c.h_list.substr(
        start, comma == std::string::npos ? std::string::npos
                                          : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }

  // The radial counterpart supplies the reference profile.
  RunConfig rc = c;
  rc.n = 2;
  if (c.model == "laplacian") {
    sign_flag(c.f, "a study with the laplacian model");
    rc.p = 2.0;
  } else if (c.model != "p_laplacian") {
    throw InvalidInput("study needs a model with a radial counterpart "
                       "(laplacian with f = +/-1, or p_laplacian)");
  }
  const RadialProblem prob = radial_problem(rc);
  const CompatibilityAnalysis an = solve_compatibility(prob, c.tmax, c.tstep);
  if (an.roots.empty())
    throw SolveFailure(
        "study: the radial reference problem has no admissible boundary "
        "slope, so there is nothing to compare against");
  if (c.root_index < 0 || c.root_index >= static_cast<int>(an.roots.size()))
    throw InvalidInput("root index " + std::to_string(c.root_index) +
                       " out of range; the scan found " +
                       std::to_string(an.roots.size()) + " root(s)");
  const RadialSolution reference =
      solve_profile(prob, an.roots[c.root_index], c.samples);

  const RhsModel model = model_from(c);
  const std::vector<StudyRow> rows = convergence_study(
      model, constant_bc(c.phi), constant_bc(c.psi), hs, c.solver, reference);

  json jrows = json::array();
  for (const StudyRow& row : rows) {
    json jr{{"h", row.h},
            {"error_u_inf", row.error_u_inf},
            {"error_w_inf", row.error_w_inf}};
    if (row.observed_order)
      jr["observed_order"] = *row.observed_order;
    else
      jr["observed_order"] = nullptr;
    jrows.push_back(jr);
  }
  json record{{"rows", jrows},
              {"reference",
               {{"g1", reference.g1},
                {"residual_ode", residual_ode(reference)}}}};

  if (!c.out.empty()) {
    *data_path = resolve_out(c.out);
    std::ofstream out(*data_path);
    if (!out)
      throw InvalidInput("cannot open '" + *data_path + "' for writing");
    out << "h,error_u,error_w,order\n";
    for (const StudyRow& row : rows) {
      out << format_g17(row.h) << ',' << format_g17(row.error_u_inf) << ','
          << format_g17(row.error_w_inf) << ',';
      if (row.observed_order) out << format_g17(*row.observed_order);
      out << '\n';
    }
    out.flush();
    if (!out) throw InvalidInput("write to '" + *data_path + "' failed");
    record["files"] = {{"data", *data_path}};
  }
  return record;
}

int emit_error(const char* type, const std::exception& e, int code) {
  const json record{
      {"error", {{"type", type}, {"message", e.what()}, {"exit", code}}}};
  std::fputs((record.dump(2) + "\n").c_str(), stdout);
  std::fputs((std::string("error: ") + e.what() + "\n").c_str(), stderr);
  return code;
}

}  // namespace

int run(const RunConfig& config) {
  try {
    std::string data_path;
    json record;
    switch (config.command) {
      case Command::RADIAL: record = run_radial(config, &data_path); break;
      case Command::ROOTS: record = run_roots(config); break;
      case Command::GRID: record = run_grid(config, &data_path); break;
      case Command::VERIFY: record = run_verify(config); break;
      case Command::ENERGY: record = run_energy(config); break;
      case Command::STUDY: record = run_study(config, &data_path); break;
    }
    write_provenance(config, record, data_path);
    std::fputs((record.dump(2) + "\n").c_str(), stdout);
    return 0;
  } catch (const InvalidInput& e) {
    return emit_error("invalid_input", e, 2);
  } catch (const SolveFailure& e) {
    return emit_error("solver_failure", e, 1);
  } catch (const Error& e) {
    return emit_error("numerical_failure", e, 1);
  } catch (const std::exception& e) {
    return emit_error("internal_error", e, 1);
  }
}

namespace {

// Applies the JSON file named by --config on top of the parsed flags; file
// entries win.  Unknown keys are rejected so typos surface as exit 2.
void apply_config_file(const std::string& path, RunConfig* c) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput("config file '" + path + "': " + e.what());
  }
  if (!doc.is_object())
    throw InvalidInput("config file '" + path + "' must hold a JSON object");

  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "n") c->n = value.get<int>();
      else if (key == "p") c->p = value.get<double>();
      else if (key == "f") c->f = value.get<double>();
      else if (key == "psi") c->psi = value.get<double>();
      else if (key == "phi") c->phi = value.get<double>();
      else if (key == "samples") c->samples = value.get<int>();
      else if (key == "tmax") c->tmax = value.get<double>();
      else if (key == "tstep") c->tstep = value.get<double>();
      else if (key == "root_index") c->root_index = value.get<int>();
      else if (key == "model") c->model = value.get<std::string>();
      else if (key == "gamma") c->gamma = value.get<double>();
      else if (key == "g") c->g = value.get<double>();
      else if (key == "k") c->k = value.get<int>();
      else if (key == "h") c->h = value.is_string()
                                      ? value.get<std::string>()
                                      : format_g17(value.get<double>());
      else if (key == "h_list") c->h_list = value.get<std::string>();
      else if (key == "damping") c->solver.damping = value.get<double>();
      else if (key == "outer_tol") c->solver.outer_tol = value.get<double>();
      else if (key == "max_outer") c->solver.max_outer = value.get<int>();
      else if (key == "newton_tol") c->solver.newton_tol = value.get<double>();
      else if (key == "max_newton") c->solver.max_newton = value.get<int>();
      else if (key == "convexity_floor")
        c->solver.convexity_floor = value.get<double>();
      else if (key == "out") c->out = value.get<std::string>();
      else if (key == "in") c->in = value.get<std::string>();
      else if (key == "kind") c->kind = value.get<std::string>();
      else
        throw InvalidInput("config file '" + path + "': unknown key '" + key +
                           "'");
    }
  } catch (const json::exception& e) {
    throw InvalidInput("config file '" + path + "': " + e.what());
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  std::string config_path;

  CLI::App app{"numerical laboratory for a coupled Monge-Ampere system on "
               "the unit disk"};
  app.require_subcommand(1);
  app.fallthrough(false);
  // --h is a documented option, so help gets no single-letter alias.
  app.set_help_flag("--help", "print help and exit");

  auto add_shared = [&](CLI::App* s) {
    s->set_help_flag("--help", "print help and exit");
    s->add_option("--config", config_path,
                  "JSON file whose entries override the flags");
  };
  auto add_problem = [&](CLI::App* s) {
    s->add_option("--n", cfg.n, "dimension");
    s->add_option("--p", cfg.p, "gradient exponent");
    s->add_option("--f", cfg.f, "lower-order coefficient or sign");
    s->add_option("--psi", cfg.psi, "boundary value of w");
    s->add_option("--phi", cfg.phi, "boundary value of u");
  };
  auto add_scan = [&](CLI::App* s) {
    s->add_option("--tmax", cfg.tmax, "scan upper end");
    s->add_option("--tstep", cfg.tstep, "scan step");
    s->add_option("--root-index", cfg.root_index, "which root to use");
  };
  auto add_solver = [&](CLI::App* s) {
    s->add_option("--damping", cfg.solver.damping, "outer mixing weight");
    s->add_option("--outer-tol", cfg.solver.outer_tol, "outer stop tolerance");
    s->add_option("--max-outer", cfg.solver.max_outer, "outer iteration cap");
    s->add_option("--newton-tol", cfg.solver.newton_tol,
                  "inner Newton tolerance");
    s->add_option("--max-newton", cfg.solver.max_newton,
                  "inner Newton iteration cap");
    s->add_option("--convexity-floor", cfg.solver.convexity_floor,
                  "Hessian eigenvalue floor");
  };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--model", cfg.model,
                  "laplacian | p_laplacian | newton | clamped");
    s->add_option("--gamma", cfg.gamma, "clamp scale");
    s->add_option("--g", cfg.g, "zero-order coefficient (newton)");
    s->add_option("--k", cfg.k, "trace index (newton)");
  };

  CLI::App* radial = app.add_subcommand("radial", "solve the radial profile");
  add_shared(radial);
  add_problem(radial);
  add_scan(radial);
  radial->add_option("--samples", cfg.samples, "profile sample count");
  radial->add_option("--out", cfg.out, "CSV output path");
  radial->callback([&] { cfg.command = Command::RADIAL; });

  CLI::App* roots =
      app.add_subcommand("roots", "enumerate admissible boundary slopes");
  add_shared(roots);
  add_problem(roots);
  add_scan(roots);
  roots->callback([&] { cfg.command = Command::ROOTS; });

  CLI::App* grid = app.add_subcommand("grid", "coupled solve on the disk");
  add_shared(grid);
  add_problem(grid);
  add_model(grid);
  add_solver(grid);
  grid->add_option("--h", cfg.h, "grid spacing, e.g. 1/32");
  grid->add_option("--out", cfg.out, "CSV output path");
  grid->callback([&] { cfg.command = Command::GRID; });

  CLI::App* verify =
      app.add_subcommand("verify", "re-run checks on a written solution");
  add_shared(verify);
  add_problem(verify);
  add_model(verify);
  add_solver(verify);
  verify->add_option("--in", cfg.in, "CSV input path")->required();
  verify->add_option("--kind", cfg.kind, "radial | grid");
  verify->add_option("--h", cfg.h, "grid spacing used to write the file");
  verify->callback([&] { cfg.command = Command::VERIFY; });

  CLI::App* energy =
      app.add_subcommand("energy", "energy functional of a written solution");
  add_shared(energy);
  add_problem(energy);
  energy->add_option("--in", cfg.in, "CSV input path")->required();
  energy->add_option("--kind", cfg.kind, "radial | grid");
  energy->add_option("--h", cfg.h, "grid spacing used to write the file");
  energy->callback([&] { cfg.command = Command::ENERGY; });

  CLI::App* study =
      app.add_subcommand("study", "refinement study against the radial profile");
  add_shared(study);
  add_problem(study);
  add_model(study);
  add_solver(study);
  add_scan(study);
  study->add_option("--h-list", cfg.h_list,
                    "comma-separated spacings, e.g. 1/16,1/32,1/64");
  study->add_option("--samples", cfg.samples, "reference sample count");
  study->add_option("--out", cfg.out, "CSV output path");
  study->callback([&] { cfg.command = Command::STUDY; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  if (!config_path.empty()) {
    try {
      apply_config_file(config_path, &cfg);
    } catch (const InvalidInput& e) {
      return emit_error("invalid_input", e, 2);
    }
  }
  return run(cfg);
}

}  // namespace abreu
