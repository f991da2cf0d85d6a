// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "otibsn/otibsn.hpp"

namespace otibsn::cli {
namespace {

struct InstanceSpec {
  std::string cost = "uniform";
  std::vector<long> size{32, 32};
  std::string cost_file;
  std::string a_file;
  std::string b_file;
  std::vector<std::string> images;
};

struct RunFlags {
  SolverConfig config;
  std::string inner_scale = "min-dim";
  bool no_timing = false;
  bool oracle = false;
  int threads = 0;
};

void add_instance_flags(CLI::App* app, InstanceSpec& spec) {
  app->add_option("--cost", spec.cost, "Generator for the cost matrix")
      ->check(CLI::IsMember({"uniform", "square", "spherical"}))
      ->capture_default_str();
  app->add_option("--size", spec.size, "Instance size m n")->expected(2)->capture_default_str();
  app->add_option("--cost-file", spec.cost_file, "Cost CSV (optional '# m n' header)");
  app->add_option("--a-file", spec.a_file, "Source marginal, one value per line");
  app->add_option("--b-file", spec.b_file, "Target marginal, one value per line");
  app->add_option("--images", spec.images, "Two grayscale images (PGM or CSV grid)")
      ->expected(2);
}

void add_config_flags(CLI::App* app, RunFlags& flags) {
  SolverConfig& c = flags.config;
  app->add_option("--eta", c.eta, "Proximal parameter")->capture_default_str();
  app->add_option("--mu0", c.mu0, "Inexactness schedule scale")->capture_default_str();
  app->add_option("--mu-floor", c.mu_floor, "Inexactness schedule floor")->capture_default_str();
  app->add_option("--inner-scale", flags.inner_scale, "Bregman test multiplier")
      ->check(CLI::IsMember({"min-dim", "one"}))
      ->capture_default_str();
  app->add_option("--warm-tol", c.warm_tol, "Sinkhorn warm-start tolerance")->capture_default_str();
  app->add_option("--kkt-tol", c.kkt_tol, "KKT residual target")->capture_default_str();
  app->add_option("--max-outer", c.max_outer, "Outer iteration cap")->capture_default_str();
  app->add_option("--max-inner", c.max_inner, "Newton steps per outer iteration")
      ->capture_default_str();
  app->add_option("--cg-rel-tol", c.cg_rel_tol, "CG relative tolerance")->capture_default_str();
  app->add_option("--cg-max-iters", c.cg_max_iters, "CG iteration cap, 0 for 2n")
      ->capture_default_str();
  app->add_option("--armijo-sigma", c.armijo_sigma, "Armijo constant")->capture_default_str();
  app->add_option("--armijo-beta", c.armijo_beta, "Backtracking factor")->capture_default_str();
  app->add_option("--seed", c.seed, "Generator seed")->capture_default_str();
  app->add_option("--grad-floor", c.grad_floor, "Stop Newton below this gradient norm")
      ->capture_default_str();
  app->add_option("--warm-max-sweeps", c.warm_max_sweeps, "Warm-start sweep cap")
      ->capture_default_str();
  app->add_option("--sinkhorn-max-sweeps", c.sinkhorn_max_sweeps, "Sinkhorn sweep cap")
      ->capture_default_str();
  app->add_option("--recenter-every", c.recenter_every, "Recenter gamma every N steps, 0 off")
      ->capture_default_str();
  app->add_option("--time-budget", c.time_budget_seconds, "Wall-clock budget in seconds");
  app->add_flag("--log-inner", c.log_inner, "Trajectory row after every Newton step");
  app->add_flag("--no-timing", flags.no_timing, "Record zero wall time (reproducible output)");
  app->add_flag("--oracle", flags.oracle, "Attach the exact LP gap when the instance is small");
  app->add_option("--threads", flags.threads, "Kernel threads (env OTIBSN_THREADS)");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

/// Applies `key = value` lines to options of `app` that were not given on the
/// command line. Keys are long flag names without dashes; '#' starts a comment.
void apply_config_file(CLI::App* app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::LoadError, path + ": cannot open config file");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": unknown key " + key);
    }
    if (opt->count() > 0) continue;  // the command line wins
    std::istringstream words(value);
    std::vector<std::string> parts;
    for (std::string w; words >> w;) parts.push_back(w);
    if (parts.empty()) continue;
    try {
      opt->add_result(parts);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_threads(int requested) {
  int threads = requested;
  if (threads <= 0) {
    if (const char* env = std::getenv("OTIBSN_THREADS")) threads = std::atoi(env);
  }
  set_num_threads(threads > 0 ? threads : 1);
}

SolverConfig finalize_config(const RunFlags& flags) {
  SolverConfig c = flags.config;
  c.inner_scale = flags.inner_scale == "one" ? InnerScale::One : InnerScale::MinDim;
  c.record_time = !flags.no_timing;
  c.validate();
  return c;
}

OtProblem build_problem(const InstanceSpec& spec, std::uint64_t seed) {
  if (!spec.images.empty()) return load_image_pair(spec.images[0], spec.images[1]);
  if (!spec.cost_file.empty() || !spec.a_file.empty() || !spec.b_file.empty()) {
    if (spec.cost_file.empty() || spec.a_file.empty() || spec.b_file.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--cost-file, --a-file and --b-file go together");
    }
    return load_problem(spec.cost_file, spec.a_file, spec.b_file);
  }
  const Index m = spec.size[0];
  const Index n = spec.size[1];
  if (spec.cost == "square") return gen_square(m, n, seed);
  if (spec.cost == "spherical") return gen_spherical(m, n, seed);
  return gen_uniform(m, n, seed);
}

const std::vector<std::string> kAlgorithms{"ibsn", "ibsink", "sinkhorn", "sinkhorn-kkt",
                                           "eot-ibsn"};

OuterResult run_algorithm(const std::string& algo, const OtProblem& problem,
                          const SolverConfig& config) {
  if (algo == "ibsn") return ibsn_solve(problem, config);
  if (algo == "ibsink") return ibsink_solve(problem, config);
  if (algo == "sinkhorn") return sinkhorn_baseline(problem, config, SinkhornTarget::Marginal);
  if (algo == "sinkhorn-kkt") return sinkhorn_baseline(problem, config, SinkhornTarget::Kkt);
  if (algo == "eot-ibsn") return eot_single_solve(problem, config);
  throw Error(ErrorCode::InvalidConfig, "unknown algorithm " + algo);
}

std::optional<double> oracle_value(const OtProblem& problem) {
  if (problem.rows() * problem.cols() > kOracleMaxCells) return std::nullopt;
  return exact_small_lp(problem).value;
}

nlohmann::ordered_json summary_json(const std::string& algo, const OtProblem& problem,
                                    const SolverConfig& config, const OuterResult& r) {
  nlohmann::ordered_json j;
  j["algorithm"] = algo;
  j["m"] = problem.rows();
  j["n"] = problem.cols();
  j["eta"] = config.eta;
  j["outer_iters"] = r.outer_iters;
  j["inner_total"] = r.inner_total;
  j["cg_total"] = r.cg_total;
  j["wall_seconds"] = r.wall_seconds;
  j["objective"] = r.objective;
  j["kkt"] = r.kkt.delta_kkt;
  if (config.reference_value) j["gap"] = std::abs(r.objective - *config.reference_value);
  j["stop_reason"] = std::string(to_string(r.stop_reason));
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::LoadError, path + ": cannot write file");
}

int exit_code(const OuterResult& r) { return r.converged() ? kExitOk : kExitCapped; }

int cmd_solve(const std::string& algo, const InstanceSpec& spec, const RunFlags& flags,
              const std::string& traj_path, const std::string& summary_path, std::ostream& out) {
  SolverConfig config = finalize_config(flags);
  apply_threads(flags.threads);
  const OtProblem problem = build_problem(spec, config.seed);
  if (flags.oracle) config.reference_value = oracle_value(problem);
  const OuterResult r = run_algorithm(algo, problem, config);
  if (!traj_path.empty()) write_text(traj_path, r.trajectory.to_csv());
  const std::string summary = summary_json(algo, problem, config, r).dump(2) + "\n";
  if (!summary_path.empty()) {
    write_text(summary_path, summary);
  } else {
    out << summary;
  }
  return exit_code(r);
}

int cmd_gen(const InstanceSpec& spec, std::uint64_t seed, const std::string& cost_out,
            const std::string& a_out, const std::string& b_out, std::ostream& out) {
  const OtProblem problem = build_problem(spec, seed);
  write_cost_csv(cost_out, problem.cost());
  write_marginal_csv(a_out, problem.a());
  write_marginal_csv(b_out, problem.b());
  out << "wrote " << problem.rows() << "x" << problem.cols() << " instance\n";
  return kExitOk;
}

int cmd_bench(const std::vector<std::string>& algos, const InstanceSpec& spec,
              const RunFlags& flags, std::optional<double> budget, const std::string& out_dir,
              std::ostream& out, std::ostream& err) {
  SolverConfig config = finalize_config(flags);
  if (budget) config.time_budget_seconds = *budget;
  apply_threads(flags.threads);
  const OtProblem problem = build_problem(spec, config.seed);
  config.reference_value = oracle_value(problem);
  std::filesystem::create_directories(out_dir);

  std::ostringstream table;
  table << "algorithm,status,outer_iters,inner_total,cg_total,wall_seconds,objective,kkt,gap,"
           "error\n";
  int failures = 0;
  for (const auto& algo : algos) {
    try {
      const OuterResult r = run_algorithm(algo, problem, config);
      write_text(out_dir + "/" + algo + ".csv", r.trajectory.to_csv());
      const auto j = summary_json(algo, problem, config, r);
      table << algo << ',' << (r.converged() ? "converged" : "capped") << ',' << r.outer_iters
            << ',' << r.inner_total << ',' << r.cg_total << ',' << j["wall_seconds"].dump() << ','
            << j["objective"].dump() << ',' << j["kkt"].dump() << ','
            << (j.contains("gap") ? j["gap"].dump() : "") << ",\n";
      out << algo << ": " << (r.converged() ? "converged" : "capped") << " kkt "
          << r.kkt.delta_kkt << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      table << algo << ",failed,,,,,,,," << msg << '\n';
      err << algo << ": " << e.what() << "\n";
    }
  }
  write_text(out_dir + "/summary.csv", table.str());
  return failures == static_cast<int>(algos.size()) ? kExitError : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact optimal transport by inexact Bregman sparse Newton"};
  app.name("otibsn");
  app.require_subcommand(1);

  InstanceSpec spec;
  RunFlags flags;
  std::string algo = "ibsn";
  std::string traj_path;
  std::string summary_path;
  auto* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("--algo", algo, "Solver")->check(CLI::IsMember(kAlgorithms))
      ->capture_default_str();
  add_instance_flags(solve, spec);
  add_config_flags(solve, flags);
  std::string solve_config;
  solve->add_option("--config", solve_config, "key=value file setting any flag");
  solve->add_option("--out", traj_path, "Trajectory CSV path");
  solve->add_option("--summary", summary_path, "Summary JSON path (stdout if absent)");

  InstanceSpec gen_spec;
  std::uint64_t gen_seed = 0;
  std::string cost_out;
  std::string a_out;
  std::string b_out;
  auto* gen = app.add_subcommand("gen", "Write a generated instance to CSV files");
  add_instance_flags(gen, gen_spec);
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--cost-out", cost_out, "Cost CSV path")->required();
  gen->add_option("--a-out", a_out, "Source marginal path")->required();
  gen->add_option("--b-out", b_out, "Target marginal path")->required();

  InstanceSpec bench_spec;
  RunFlags bench_flags;
  std::vector<std::string> algos{"ibsn", "ibsink", "sinkhorn-kkt"};
  std::optional<double> budget;
  std::string out_dir = "bench_out";
  auto* bench = app.add_subcommand("bench", "Run several solvers on one instance");
  bench->add_option("--algos", algos, "Comma-separated solvers")
      ->delimiter(',')
      ->check(CLI::IsMember(kAlgorithms))
      ->capture_default_str();
  add_instance_flags(bench, bench_spec);
  add_config_flags(bench, bench_flags);
  std::string bench_config;
  bench->add_option("--config", bench_config, "key=value file setting any flag");
  bench->add_option("--budget", budget, "Wall-clock budget per solver in seconds");
  bench->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (solve->parsed() && !solve_config.empty()) apply_config_file(solve, solve_config);
    if (bench->parsed() && !bench_config.empty()) apply_config_file(bench, bench_config);
    if (solve->parsed()) return cmd_solve(algo, spec, flags, traj_path, summary_path, out);
    if (gen->parsed()) return cmd_gen(gen_spec, gen_seed, cost_out, a_out, b_out, out);
    return cmd_bench(algos, bench_spec, bench_flags, budget, out_dir, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace otibsn::cli
