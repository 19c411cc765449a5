// Command-line driver: simulate, adjoint, optimize, oracle and verify.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "mosquito/adjoint.hpp"
#include "mosquito/config.hpp"
#include "mosquito/control.hpp"
#include "mosquito/forward.hpp"
#include "mosquito/io.hpp"
#include "mosquito/verify.hpp"

#ifndef MOSQUITO_VERSION
#define MOSQUITO_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mosquito;

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kNonConvergence = 2, kPropertyFailure = 3 };

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

struct Run {
  std::string command;
  fs::path out;
  RunConfig cfg;
};

// Loads and validates the config, then writes the manifest before any output.
Run prepare(const std::string& command, const fs::path& config, const fs::path& out,
            std::optional<std::uint64_t> seed) {
  Run run{command, out, load_config(config)};
  const ValidationReport report = validate_params(run.cfg.data);
  for (const auto& note : report.notes) std::cerr << "note: " << note << '\n';
  if (!report.ok()) throw ValidationFailure(report.summary());

  fs::create_directories(out);
  json manifest = {{"config_hash", hex64(config_digest(run.cfg.source))},
                   {"command", command},
                   {"tool_version", MOSQUITO_VERSION},
                   {"timestamps", {{"started", utc_now()}}},
                   {"seed", seed ? json(*seed) : json(nullptr)}};
  write_json(out / "manifest.json", manifest);
  return run;
}

Field<double> parse_control(const std::string& choice, const ProblemData<double>& data) {
  const auto& g = data.grid;
  if (choice == "zero") return Field<double>(g);
  if (choice == "lower") return data.bounds.sigma1;
  if (choice == "upper") return data.bounds.sigma2;
  if (choice.rfind("csv:", 0) == 0) {
    try {
      return io::read_field_csv(choice.substr(4), g);
    } catch (const std::runtime_error& e) {
      throw ValidationFailure(std::string("--control: ") + e.what());
    }
  }
  throw ValidationFailure("--control: expected zero, lower, upper or csv:<path>, got '" + choice + "'");
}

json to_json(const PropertyReport& r) {
  json j = {{"name", r.name},
            {"passed", r.passed},
            {"worst_violation", r.worst_violation},
            {"tolerance", r.tolerance},
            {"details", r.details}};
  j["location"] = r.location ? json{{"i", r.location->i}, {"n", r.location->n}, {"k", r.location->k}} : json(nullptr);
  j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
  return j;
}

int cmd_simulate(const Run& run, const std::string& control, const std::string& mode) {
  const auto& data = run.cfg.data;
  const auto& g = data.grid;
  const Field<double> u = parse_control(control, data);
  Field<double> p;
  int fp_iterations = 0;
  if (mode == "renewal") {
    p = forward_solve(data, u);
  } else {
    const auto fp = forward_solve_fixed_point(data, u, run.cfg.forward);
    p = fp.p;
    fp_iterations = fp.iterations;
  }
  io::write_field_csv(run.out / "state.csv", p);
  io::write_boundary_csv(run.out / "boundary.csv", g, boundary_of(p));

  json mass = json::array();
  for (int n = 0; n <= g.n_t; ++n) mass.push_back(p.slice(n).topRows(g.n_a).sum() * g.da * g.dx);
  write_json(run.out / "summary.json",
             {{"mass_by_time", mass}, {"min_value", p.values().minCoeff()}, {"fp_iterations", fp_iterations}});
  return kOk;
}

int cmd_adjoint(const Run& run, const std::string& control) {
  const Field<double> u = parse_control(control, run.cfg.data);
  const Field<double> q = adjoint_solve(run.cfg.data, u);
  io::write_field_csv(run.out / "adjoint.csv", q);
  io::write_switching_csv(run.out / "switching.csv", q);
  return kOk;
}

int cmd_optimize(const Run& run, const SweepConfig<double>& sc) {
  const auto res = sweep(run.cfg.data, sc);
  io::write_field_csv(run.out / "u_star.csv", res.u_star);
  io::write_field_csv(run.out / "p_star.csv", res.p_star);
  io::write_field_csv(run.out / "q.csv", res.q);
  {
    std::ofstream os(run.out / "history.csv", std::ios::binary);
    os << "iter,psi,residual\n";
    for (std::size_t k = 0; k < res.residual_history.size(); ++k) {
      os << k + 1 << ',' << io::format_double(res.objective_history[k]) << ','
         << io::format_double(res.residual_history[k]) << '\n';
    }
  }
  const double psi = res.objective_history.back();
  write_json(run.out / "summary.json", {{"converged", res.converged},
                                        {"iterations", res.iterations},
                                        {"psi_star", psi},
                                        {"harvest", -psi}});
  if (!res.converged) {
    std::cerr << "optimize: sweep did not converge within " << sc.max_iter << " iterations\n";
    return kNonConvergence;
  }
  return kOk;
}

int cmd_oracle(const Run& run, int max_nodes) {
  const auto& data = run.cfg.data;
  const auto best = brute_force_optimum(data, max_nodes);
  const auto res = sweep(data, run.cfg.sweep);
  const double psi_sweep = res.objective_history.back();
  const double gap = std::abs(psi_sweep - best.psi_best) / std::max(1.0, std::abs(best.psi_best));
  write_json(run.out / "oracle.json", {{"psi_best", best.psi_best},
                                       {"psi_sweep", psi_sweep},
                                       {"agreement_gap", gap},
                                       {"candidates", best.candidates},
                                       {"best_index", best.best_index},
                                       {"near_ties", best.near_ties},
                                       {"sweep_converged", res.converged}});
  return res.converged ? kOk : kNonConvergence;
}

// Randomized suites draw their data from latin-hypercube rows on the config
// grid; the config supplies the grid and the trial ranges only.
std::vector<PropertyReport> run_suites(const Run& run, const std::string& suite, std::uint64_t seed) {
  const auto& g = run.cfg.data.grid;
  const auto& ranges = run.cfg.trials;
  std::vector<PropertyReport> reports;
  const bool all = suite == "all";

  if (all || suite == "comparison") {
    std::mt19937_64 rng(seed);
    const auto design = latin_hypercube(25, 9, rng);
    std::vector<std::pair<ProblemData<double>, ProblemData<double>>> pairs;
    for (int s = 0; s < design.rows(); ++s) pairs.push_back(random_ordered_pair<double>(g, design.row(s), rng, ranges));
    const Field<double> u(g);
    reports.push_back(comparison_suite(pairs, u));
  }
  if (all || suite == "energy") {
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto design = latin_hypercube(20, 10, rng);
    PropertyReport agg{"energy", true, 0.0, 0.0, std::nullopt, "", seed};
    for (int s = 0; s < design.rows(); ++s) {
      const auto pair = random_ordered_pair<double>(g, design.row(s).head(9), rng, ranges);
      Boundary<double> b(g.n_t + 1, g.n_x);
      for (Eigen::Index j = 0; j < b.size(); ++j) b.data()[j] = design(s, 9) * ranges.b_max * unit(rng);
      b.row(0) = pair.second.p0.row(0);
      const auto r = energy_bound_suite(pair.second, b);
      if (r.worst_violation > agg.worst_violation) {
        agg.worst_violation = r.worst_violation;
        agg.location = NodeIndex{s, 0, 0};
      }
      agg.passed = agg.passed && r.passed;
    }
    agg.details = "20 prescribed-boundary runs against twice the e^T energy bound";
    reports.push_back(agg);
  }
  if (all || suite == "gronwall") {
    std::mt19937_64 rng(seed + 2);
    const auto design = latin_hypercube(10, 9, rng);
    PropertyReport agg{"gronwall", true, 0.0, 0.0, std::nullopt, "", seed};
    for (int s = 0; s < design.rows(); ++s) {
      const auto data = random_ordered_pair<double>(g, design.row(s), rng, ranges).second;
      const Field<double> p = forward_solve(data, Field<double>(g));
      std::vector<double> x(g.n_t + 1), psi(g.n_t + 1, 0.0);
      for (int n = 0; n <= g.n_t; ++n) x[n] = p.slice(n).topRows(g.n_a).square().sum() * g.da * g.dx;
      for (int n = 0; n < g.n_t; ++n) {
        if (x[n] > 0.0) psi[n] = std::max(0.0, (x[n + 1] - x[n]) / (g.dt * x[n]));
      }
      const auto r = gronwall_check(x, psi, x[0], g.dt);
      if (r.worst_violation > agg.worst_violation) {
        agg.worst_violation = r.worst_violation;
        agg.location = r.location;
      }
      agg.passed = agg.passed && r.passed;
    }
    agg.details = "10 state-energy series with their realized growth rates";
    reports.push_back(agg);
  }
  if (all || suite == "eigen") {
    const Grid<double> eg = g.n_x >= 8 ? g : make_grid<double>(g.a_max, g.t_max, g.n_a, 64);
    reports.push_back(eigen_oracle(eg, run.cfg.data.rates.delta > 0 ? run.cfg.data.rates.delta : 1.0));
  }
  for (auto& r : reports) r.seed = seed;
  return reports;
}

int cmd_verify(const Run& run, const std::string& suite, std::uint64_t seed) {
  const auto reports = run_suites(run, suite, seed);
  json list = json::array();
  bool ok = true;
  for (const auto& r : reports) {
    list.push_back(to_json(r));
    ok = ok && r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.details << '\n';
  }
  write_json(run.out / "report.json", list);
  return ok ? kOk : kPropertyFailure;
}

std::string joined(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) s += (i > 1 ? " " : "") + std::string(argv[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-structured mosquito population model with optimal biting-time control"};
  app.set_version_flag("--version", MOSQUITO_VERSION);
  bool print_schema = false;
  app.add_flag("--print-config-schema", print_schema, "Print the JSON schema of the config and exit");
  app.require_subcommand(0, 1);

  std::string config, out, control = "zero", mode = "renewal", suite = "all";
  std::uint64_t seed = 1;
  int max_nodes = 20;
  SweepConfig<double> sc;
  bool have_omega = false, have_tol = false, have_iter = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Path to the JSON config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory")->required();
  };
  auto* simulate = app.add_subcommand("simulate", "Forward solve for a given control");
  add_common(simulate);
  simulate->add_option("--control", control, "zero | lower | upper | csv:<path>");
  simulate->add_option("--mode", mode, "renewal | fixed-point")->check(CLI::IsMember({"renewal", "fixed-point"}));

  auto* adjoint = app.add_subcommand("adjoint", "Backward costate solve for a given control");
  add_common(adjoint);
  adjoint->add_option("--control", control, "csv:<path> (also zero | lower | upper)")->required();

  auto* optimize = app.add_subcommand("optimize", "Forward-backward sweep");
  add_common(optimize);
  optimize->add_option("--omega", sc.relaxation, "Relaxation in (0, 1]")->each([&](const std::string&) { have_omega = true; });
  optimize->add_option("--tol", sc.u_tol, "Control-change tolerance")->each([&](const std::string&) { have_tol = true; });
  optimize->add_option("--max-iter", sc.max_iter, "Iteration cap")->each([&](const std::string&) { have_iter = true; });

  auto* oracle = app.add_subcommand("oracle", "Brute-force bang-bang enumeration vs sweep");
  add_common(oracle);
  oracle->add_option("--max-nodes", max_nodes, "Enumeration cap on control nodes");

  auto* verify = app.add_subcommand("verify", "Property suites");
  add_common(verify);
  verify->add_option("--suite", suite, "comparison | energy | gronwall | eigen | all")
      ->check(CLI::IsMember({"comparison", "energy", "gronwall", "eigen", "all"}));
  verify->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  if (print_schema) {
    std::cout << config_schema().dump(2) << '\n';
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kValidation;
  }

  const std::string command = joined(argc, argv);
  try {
    if (simulate->parsed()) return cmd_simulate(prepare(command, config, out, std::nullopt), control, mode);
    if (adjoint->parsed()) return cmd_adjoint(prepare(command, config, out, std::nullopt), control);
    if (optimize->parsed()) {
      Run run = prepare(command, config, out, std::nullopt);
      SweepConfig<double> merged = run.cfg.sweep;
      if (have_omega) merged.relaxation = sc.relaxation;
      if (have_tol) merged.u_tol = sc.u_tol;
      if (have_iter) merged.max_iter = sc.max_iter;
      if (!(merged.relaxation > 0 && merged.relaxation <= 1) || !(merged.u_tol > 0) || merged.max_iter < 1) {
        throw ValidationFailure("optimize: need 0 < omega <= 1, tol > 0, max-iter >= 1");
      }
      return cmd_optimize(run, merged);
    }
    if (oracle->parsed()) return cmd_oracle(prepare(command, config, out, std::nullopt), max_nodes);
    if (verify->parsed()) return cmd_verify(prepare(command, config, out, seed), suite, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return kValidation;
  } catch (const ValidationFailure& e) {
    std::cerr << "validation failed:\n" << e.what();
    return kValidation;
  } catch (const NonConvergenceError& e) {
    std::cerr << e.what() << '\n';
    return kNonConvergence;
  } catch (const NonFiniteError& e) {
    std::cerr << e.what() << '\n';
    return kNonConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}
