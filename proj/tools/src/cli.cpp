#include "feedopt_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "feedopt/case_io.hpp"
#include "feedopt/error.hpp"
#include "feedopt/oracle.hpp"
#include "feedopt/powergrid.hpp"

namespace feedopt::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::string case_path;
  std::string scenario_path;
  std::string out_path;
  std::string summary_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> ell;
  std::optional<double> epsilon_multiplier;
  bool allow_unstable = false;
  bool allow_divergence = false;
  int probes = 2000;
  std::vector<double> multipliers;
  std::vector<double> log_range;
  double perturbation = 0.05;
  double tolerance = 1e-8;
  long max_iterations = 100000;
};

json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

json certificate_json(const GridSetup& setup) {
  const StabilityCertificate& c = setup.certificate;
  const LtiPlant& plant = setup.model.plant;
  return json{{"n", plant.states()},
              {"p", plant.inputs()},
              {"q", plant.disturbances()},
              {"m", plant.outputs()},
              {"min_eig_p", c.min_eig_p},
              {"beta", c.beta},
              {"ell", c.ell},
              {"epsilon_star", c.epsilon_star},
              {"delta_star", c.delta_star},
              {"p_checksum", matrix_checksum(c.p_matrix)}};
}

void write_document(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::kParseError, "cannot write " + path);
  file << doc.dump(2) << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::kParseError, "cannot write " + path);
  return file;
}

GridSetup load_setup(const Options& opt) {
  return make_grid_setup(load_grid_case(opt.case_path), opt.ell);
}

int cmd_certify(const Options& opt, std::ostream& out) {
  const grid::GridCase grid = load_grid_case(opt.case_path);
  const GridSetup setup = make_grid_setup(grid, opt.ell);
  const PenaltyObjective objective = grid::make_objective(grid, setup.plant);
  const double ell_analytic = lipschitz_bound_analytic(objective, setup.model.ssm);
  const double ell_sampled = lipschitz_bound_sampled(objective, setup.model.ssm, opt.probes,
                                                     grid_sample_region(setup), opt.seed.value_or(0));

  json doc = certificate_json(setup);
  doc["format_version"] = kFormatVersion;
  doc["ell_analytic"] = ell_analytic;
  doc["ell_sampled"] = ell_sampled;
  doc["ell_overridden"] = opt.ell.has_value();
  doc["p_matrix"] = to_json(setup.certificate.p_matrix);
  write_document(doc, opt.out_path, out);
  return kExitOk;
}

int cmd_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
  const GridSetup setup = load_setup(opt);
  Scenario scenario = load_scenario(opt.scenario_path, setup.grid);
  if (opt.seed) scenario.seed = *opt.seed;
  if (opt.epsilon_multiplier) {
    if (!(*opt.epsilon_multiplier > 0.0)) {
      err << "error: --epsilon-multiplier must be positive\n";
      return kExitUsage;
    }
    scenario.epsilon = EpsilonPolicy::fraction_of_star(*opt.epsilon_multiplier);
  }
  const double eps = scenario.epsilon.resolve(setup.certificate.epsilon_star);
  if (eps >= setup.certificate.epsilon_star && !opt.allow_unstable) {
    err << "error: epsilon = " << eps << " is not below the certified bound epsilon* = "
        << setup.certificate.epsilon_star
        << "; convergence is not guaranteed. Pass --allow-unstable-epsilon to run anyway.\n";
    return kExitUsage;
  }

  const RunResult result = run_grid(setup, scenario);
  {
    std::ofstream csv = open_output(opt.out_path);
    write_trajectory_csv(result.record, csv);
  }

  json events = json::array();
  for (std::size_t k = 0; k < result.record.size(); ++k) {
    if (!result.record.event[k].empty()) {
      events.push_back({{"t", result.record.t[k]}, {"event", result.record.event[k]}});
    }
  }
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const Vector& y_last = result.record.y.back();
  json summary{
      {"format_version", kFormatVersion},
      {"certificate", certificate_json(setup)},
      {"epsilon", result.epsilon},
      {"epsilon_fraction", result.epsilon / setup.certificate.epsilon_star},
      {"seed", scenario.seed},
      {"classification", to_string(result.classification)},
      {"final_residual", finite_or_null(result.final_residual)},
      {"final_true_residual", finite_or_null(result.final_true_residual)},
      {"final_phi_norm", finite_or_null(result.final_phi_norm)},
      {"final_frequency", y_last(0)},
      {"final_u", to_json(result.record.u.back())},
      {"max_z_relative_increment", result.max_z_relative_increment},
      {"max_lambda_form", result.max_lambda_form},
      {"stale_model", result.stale_model},
      {"reference_ok", result.reference_ok},
      {"steps", result.steps},
      {"diverged", result.record.diverged},
      {"divergence_time", finite_or_null(result.record.divergence_time)},
      {"events", events}};
  std::string summary_path = opt.summary_path;
  if (summary_path.empty()) {
    summary_path = fs::path(opt.out_path).replace_extension(".summary.json").string();
  }
  write_document(summary, summary_path, out);

  if (result.classification == Classification::kDiverged) {
    err << "run diverged at t = " << result.record.divergence_time << " s\n";
    if (!opt.allow_divergence) return kExitDivergence;
  }
  return kExitOk;
}

int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err) {
  const GridSetup setup = load_setup(opt);
  Scenario base;
  if (!opt.scenario_path.empty()) {
    base = load_scenario(opt.scenario_path, setup.grid);
  } else {
    base.duration_s = 1e4;
    base.step_s = 0.1;
  }
  if (opt.seed) base.seed = *opt.seed;

  std::vector<double> multipliers = opt.multipliers;
  if (!opt.log_range.empty()) {
    if (opt.log_range.size() != 3 || !(opt.log_range[0] > 0.0) ||
        !(opt.log_range[1] >= opt.log_range[0]) || opt.log_range[2] < 1.0) {
      err << "error: --log-range expects lo,hi,count with 0 < lo <= hi and count >= 1\n";
      return kExitUsage;
    }
    const auto count = static_cast<int>(opt.log_range[2]);
    const double lo = std::log(opt.log_range[0]);
    const double hi = std::log(opt.log_range[1]);
    for (int i = 0; i < count; ++i) {
      multipliers.push_back(count == 1 ? opt.log_range[0]
                                       : std::exp(lo + (hi - lo) * i / (count - 1)));
    }
    std::sort(multipliers.begin(), multipliers.end());
  }

  const SweepResult sweep = sweep_grid(setup, base, multipliers, opt.perturbation);

  std::ostringstream table;
  table.precision(17);
  table << "multiplier,epsilon,classification,final_residual,final_phi_norm,divergence_time\n";
  for (const SweepRow& row : sweep.rows) {
    table << row.multiplier << ',' << row.epsilon << ',' << to_string(row.classification) << ','
          << row.final_residual << ',' << row.final_phi_norm << ',';
    if (std::isfinite(row.divergence_time)) table << row.divergence_time;
    table << '\n';
  }
  std::ostream& report = opt.out_path.empty() ? err : out;
  if (opt.out_path.empty()) {
    out << table.str();
  } else {
    std::ofstream csv = open_output(opt.out_path);
    csv << table.str();
  }
  report << "epsilon_star: " << setup.certificate.epsilon_star << '\n';
  if (sweep.first_unstable) {
    report << "first_unstable_multiplier: " << *sweep.first_unstable << '\n';
  } else {
    report << "first_unstable_multiplier: none\n";
  }
  return kExitOk;
}

int cmd_oracle(const Options& opt, std::ostream& out) {
  const GridSetup setup = load_setup(opt);
  OracleOptions oo;
  oo.tolerance = opt.tolerance;
  oo.max_iterations = opt.max_iterations;
  const Objective& objective = *setup.model.objective;
  const SteadyStateMap& ssm = setup.model.ssm;

  const Vector w = setup.grid.loads();
  const OracleResult r = solve_instantaneous(objective, ssm, w, setup.default_u0, oo);
  json doc{{"format_version", kFormatVersion},
           {"u_star", to_json(r.u)},
           {"cost", r.cost},
           {"residual", r.residual},
           {"iterations", r.iterations},
           {"steady_state_frequency", grid::steady_state_frequency(setup.grid, r.u, w)}};

  if (!opt.scenario_path.empty()) {
    Scenario scenario = load_scenario(opt.scenario_path, setup.grid);
    const LoadProfile loads =
        scenario.loads.empty() ? LoadProfile::constant(w) : scenario.loads;
    json series = json::array();
    for (const ReferencePoint& p :
         reference_series(objective, ssm, loads, scenario.duration_s, setup.default_u0, oo)) {
      series.push_back({{"t", p.t}, {"cost", p.cost}, {"u", to_json(p.u)}});
    }
    doc["series"] = series;
  }
  write_document(doc, opt.out_path, out);
  return kExitOk;
}

}  // namespace

std::string matrix_checksum(const Matrix& m) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double v = m(i, j);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 1099511628211ULL;
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

SampleRegion grid_sample_region(const GridSetup& setup) {
  const Vector x0 = setup.model.ssm.state(setup.default_u0, setup.grid.loads());
  SampleRegion region;
  region.x_lo = x0.array() - 1.0;
  region.x_hi = x0.array() + 1.0;
  const auto r = static_cast<Eigen::Index>(setup.grid.bus_count());
  region.u_lo.resize(r);
  region.u_hi.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    region.u_lo(i) = setup.grid.buses[i].gen_min_pu;
    region.u_hi(i) = setup.grid.buses[i].gen_max_pu;
  }
  return region;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified feedback optimization for LTI plants and DC power grids", "feedopt"};
  app.require_subcommand(1);
  Options opt;

  auto add_case = [&](CLI::App* cmd) {
    cmd->add_option("--case", opt.case_path, "Grid case file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", opt.seed, "Seed for every random draw");
    cmd->add_option("--ell", opt.ell, "Override the Lipschitz constant used for the certificate")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* certify = app.add_subcommand("certify", "Compute the stability certificate of a case");
  add_case(certify);
  certify->add_option("--out", opt.out_path, "Write the report here instead of stdout");
  certify->add_option("--probes", opt.probes, "Samples for the empirical Lipschitz estimate")
      ->check(CLI::PositiveNumber);

  CLI::App* simulate = app.add_subcommand("simulate", "Run a closed-loop scenario");
  add_case(simulate);
  simulate->add_option("--scenario", opt.scenario_path, "Scenario file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", opt.out_path, "Trajectory CSV")->required();
  simulate->add_option("--summary", opt.summary_path,
                       "Summary JSON (default: next to the CSV with extension .summary.json)");
  simulate->add_option("--epsilon-multiplier", opt.epsilon_multiplier,
                       "Use epsilon = k * epsilon* instead of the scenario value");
  simulate->add_flag("--allow-unstable-epsilon", opt.allow_unstable,
                     "Permit epsilon >= epsilon*");
  simulate->add_flag("--allow-divergence", opt.allow_divergence,
                     "Exit 0 even if the run diverges");

  CLI::App* sweep = app.add_subcommand("sweep", "Classify runs over a range of gain multipliers");
  add_case(sweep);
  sweep->add_option("--scenario", opt.scenario_path, "Base scenario (horizon, step, loads)")
      ->check(CLI::ExistingFile);
  sweep->add_option("--out", opt.out_path, "Stability table CSV (default stdout)");
  sweep->add_option("--multipliers", opt.multipliers, "Comma-separated multipliers of epsilon*")
      ->delimiter(',');
  sweep->add_option("--log-range", opt.log_range, "lo,hi,count log-spaced multipliers")
      ->delimiter(',');
  sweep->add_option("--perturbation", opt.perturbation,
                    "Standard deviation of the initial state offset")
      ->check(CLI::NonNegativeNumber);

  CLI::App* oracle = app.add_subcommand("oracle", "Solve the steady-state optimization problem");
  add_case(oracle);
  oracle->add_option("--scenario", opt.scenario_path, "Also solve at every load segment")
      ->check(CLI::ExistingFile);
  oracle->add_option("--out", opt.out_path, "Write the result here instead of stdout");
  oracle->add_option("--tolerance", opt.tolerance, "Gradient-norm tolerance")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--max-iterations", opt.max_iterations, "Iteration cap")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (certify->parsed()) return cmd_certify(opt, out);
    if (simulate->parsed()) return cmd_simulate(opt, out, err);
    if (sweep->parsed()) return cmd_sweep(opt, out, err);
    return cmd_oracle(opt, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.is_numerical() ? kExitNumerical : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("feedopt");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(storage.size()), argv.data(), out, err);
}

}  // namespace feedopt::cli
