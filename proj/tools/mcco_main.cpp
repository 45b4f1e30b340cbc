// Command-line front end: estimate / gradient / optimize / experiment /
// schedule / tune-rates. JSON config in, CSV and JSON out.
// Exit codes: 0 success, 2 validation or configuration error, 3 infinite
// expected cost or cost-guard abort, 4 acceptance tolerance failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "mcco/analysis.hpp"
#include "mcco/experiments.hpp"
#include "mcco/mlmc.hpp"
#include "mcco/mlmc_gradient.hpp"
#include "mcco/optimizer.hpp"
#include "mcco/problems.hpp"
#include "mcco/saa.hpp"
#include "mcco/version.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCost = 3;
constexpr int kExitTolerance = 4;

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

mcco::Matrix parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw mcco::InvalidParams(name + " must be a matrix (array of rows)");
  const auto rows = j.size();
  const auto cols = j[0].size();
  mcco::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw mcco::InvalidParams(name + " has ragged rows");
    for (std::size_t k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return m;
}

mcco::Vector parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) throw mcco::InvalidParams(name + " must be an array");
  mcco::Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

mcco::AdapterParams parse_adapter(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "synthetic") return mcco::SyntheticParams{};
  if (kind == "bermudan") {
    mcco::BermudanParams p;
    p.assets = j.value("m", p.assets);
    p.strike = j.value("K", p.strike);
    p.gamma = j.value("gamma", p.gamma);
    p.sigma = j.value("sigma", p.sigma);
    p.dates = j.value("T", p.dates);
    p.s0 = j.value("s0", p.s0);
    return p;
  }
  if (kind == "entropic") {
    mcco::EntropicParams p;
    p.mu = j.at("mu").get<std::vector<double>>();
    p.means = j.at("means").get<std::vector<double>>();
    p.sds = j.at("sds").get<std::vector<double>>();
    return p;
  }
  if (kind == "lqr") {
    mcco::LqrParams p;
    p.A = parse_matrix(j.at("A"), "A");
    p.B = parse_matrix(j.at("B"), "B");
    p.Q = parse_matrix(j.at("Q"), "Q");
    p.R = parse_matrix(j.at("R"), "R");
    p.P_T = parse_matrix(j.at("P_T"), "P_T");
    p.noise_cov = parse_matrix(j.at("noise_cov"), "noise_cov");
    p.s0 = parse_vector(j.at("s0"), "s0");
    p.horizon = j.at("T").get<int>();
    return p;
  }
  if (kind == "bandits") {
    mcco::BanditsParams p;
    p.mu = j.value("mu", p.mu);
    p.r_c = j.value("r_c", p.r_c);
    p.r_y = j.value("r_y", p.r_y);
    p.lambda_max = j.value("lambda_max", p.lambda_max);
    if (j.contains("cost_cov")) p.cost_cov = parse_matrix(j.at("cost_cov"), "cost_cov");
    return p;
  }
  throw mcco::InvalidParams("unknown adapter kind '" + kind + "'");
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mcco::InvalidParams("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw mcco::InvalidParams(std::string("cannot parse ") + path + ": " + e.what());
  }
  return j;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw mcco::InvalidParams("cannot write " + path);
  out << content;
}

int default_threads_from_env() {
  const char* env = std::getenv("MCCO_THREADS");
  if (!env) return 0;
  return std::atoi(env);
}

struct EstimateArgs {
  std::string problem_path;
  std::string estimator = "mlmc";
  std::uint64_t n1 = 1000;
  std::vector<double> rates;
  std::vector<int> truncations;
  std::vector<std::uint64_t> saa_n;
  std::uint64_t budget = 1000000000;
  std::uint64_t seed = 1;
  int threads = 0;
  std::vector<double> x;
  std::string out_csv;
  std::string out_json;
  std::string from_report;
};

json resolved_config_json(const EstimateArgs& args, const json& problem_json) {
  json config;
  config["problem"] = problem_json;
  config["estimator"] = args.estimator;
  config["n1"] = args.n1;
  config["rates"] = args.rates;
  config["truncations"] = args.truncations;
  config["n"] = args.saa_n;
  config["budget"] = args.budget;
  config["threads"] = args.threads;
  if (!args.x.empty()) config["x"] = args.x;
  return config;
}

mcco::MlmcConfig mlmc_config_from(const EstimateArgs& args, int num_stages) {
  mcco::MlmcConfig config;
  config.n1 = args.n1;
  config.threads = args.threads;
  config.cost_budget = args.budget;
  std::vector<double> rates = args.rates;
  if (rates.empty() && num_stages >= 2) rates = mcco::default_rates(num_stages, true);
  if (static_cast<int>(rates.size()) != num_stages - 1)
    throw mcco::InvalidParams("expected " + std::to_string(num_stages - 1) + " rates");
  for (int t = 0; t < num_stages - 1; ++t) {
    std::optional<int> m;
    if (!args.truncations.empty()) {
      if (static_cast<int>(args.truncations.size()) != num_stages - 1)
        throw mcco::InvalidParams("expected " + std::to_string(num_stages - 1) + " truncations");
      if (args.truncations[static_cast<std::size_t>(t)] >= 0) m = args.truncations[static_cast<std::size_t>(t)];
    }
    config.levels.emplace_back(rates[static_cast<std::size_t>(t)], m);
  }
  return config;
}

int run_estimate_config(const EstimateArgs& args, const json& problem_json,
                        std::optional<double> expect_estimate) {
  mcco::BuiltProblem built = mcco::build_problem(parse_adapter(problem_json));
  mcco::Vector x = built.x0;
  if (!args.x.empty()) {
    x.resize(static_cast<Eigen::Index>(args.x.size()));
    for (std::size_t i = 0; i < args.x.size(); ++i) x(static_cast<Eigen::Index>(i)) = args.x[i];
  }

  mcco::EstimateReport report;
  double wall = 0.0;
  if (args.estimator == "mlmc") {
    mcco::MlmcConfig config = mlmc_config_from(args, built.problem.num_stages);
    for (const std::string& warning : config.check(built.problem.num_stages))
      std::cerr << "warning: " << warning << "\n";
    // Refuse configurations whose expected cost is provably infinite before
    // drawing a single sample.
    mcco::expected_cost(config);
    double start = now_ms();
    report = mcco::mlmc_value_estimate(built.problem, x, config, mcco::RngStream(args.seed));
    wall = now_ms() - start;
  } else if (args.estimator == "saa") {
    mcco::SaaConfig config;
    config.n = args.saa_n;
    config.threads = args.threads;
    if (config.n.empty()) throw mcco::InvalidParams("saa estimator needs --n n_1,..,n_T");
    double start = now_ms();
    report = mcco::saa_estimate(built.problem, x, config, mcco::RngStream(args.seed));
    wall = now_ms() - start;
  } else {
    throw mcco::InvalidParams("unknown estimator '" + args.estimator + "' (saa | mlmc)");
  }
  report.seed = args.seed;

  auto ci = report.confidence_interval();
  json out;
  out["version"] = mcco::kVersion;
  out["seed"] = args.seed;
  out["config"] = resolved_config_json(args, problem_json);
  out["estimate"] = report.value;
  out["stderr"] = report.stderr_of_mean();
  out["ci"] = {ci.first, ci.second};
  out["scenario_count"] = report.scenario_count;
  out["expected_cost"] = report.expected_cost;
  out["wall_ms"] = wall;

  if (!args.out_json.empty()) write_text(args.out_json, out.dump(2) + "\n");
  if (!args.out_csv.empty()) {
    mcco::CsvRow row = mcco::make_csv_row("estimate", report, args.n1, wall);
    row.seed = args.seed;
    if (args.estimator == "saa") row.n1 = args.saa_n.empty() ? 0 : args.saa_n[0];
    write_text(args.out_csv, mcco::csv_header() + "\n" + mcco::to_csv(row) + "\n");
  }
  std::cout << out.dump(2) << "\n";

  if (expect_estimate && !(report.value == *expect_estimate)) {
    std::cerr << "round-trip mismatch: recorded " << *expect_estimate << ", re-run " << report.value << "\n";
    return kExitTolerance;
  }
  return kExitOk;
}

int run_estimate(EstimateArgs args) {
  if (!args.from_report.empty()) {
    json report = load_json(args.from_report);
    const json& config = report.at("config");
    EstimateArgs replay;
    replay.estimator = config.at("estimator").get<std::string>();
    replay.n1 = config.at("n1").get<std::uint64_t>();
    replay.rates = config.at("rates").get<std::vector<double>>();
    replay.truncations = config.at("truncations").get<std::vector<int>>();
    replay.saa_n = config.at("n").get<std::vector<std::uint64_t>>();
    replay.budget = config.at("budget").get<std::uint64_t>();
    replay.threads = args.threads;  // thread count must not matter
    replay.seed = report.at("seed").get<std::uint64_t>();
    if (config.contains("x")) replay.x = config.at("x").get<std::vector<double>>();
    return run_estimate_config(replay, config.at("problem"), report.at("estimate").get<double>());
  }
  if (args.problem_path.empty()) throw mcco::InvalidParams("--problem is required");
  return run_estimate_config(args, load_json(args.problem_path), std::nullopt);
}

int run_gradient(const EstimateArgs& args) {
  if (args.problem_path.empty()) throw mcco::InvalidParams("--problem is required");
  json problem_json = load_json(args.problem_path);
  mcco::BuiltProblem built = mcco::build_problem(parse_adapter(problem_json));
  mcco::Vector x = built.x0;
  if (!args.x.empty()) {
    x.resize(static_cast<Eigen::Index>(args.x.size()));
    for (std::size_t i = 0; i < args.x.size(); ++i) x(static_cast<Eigen::Index>(i)) = args.x[i];
  }
  mcco::MlmcConfig config = mlmc_config_from(args, built.problem.num_stages);
  mcco::expected_cost(config);
  double start = now_ms();
  mcco::GradientReport report =
      mcco::mlmc_gradient_estimate(built.problem, x, config, mcco::RngStream(args.seed));
  double wall = now_ms() - start;

  json out;
  out["version"] = mcco::kVersion;
  out["seed"] = args.seed;
  out["config"] = resolved_config_json(args, problem_json);
  out["gradient"] = std::vector<double>(report.gradient.data(), report.gradient.data() + report.gradient.size());
  out["scenario_count"] = report.scenario_count;
  out["expected_cost"] = report.expected_cost;
  out["wall_ms"] = wall;
  if (!args.out_json.empty()) write_text(args.out_json, out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int run_optimize(const EstimateArgs& args, const std::string& method, int iterations, double eta) {
  if (args.problem_path.empty()) throw mcco::InvalidParams("--problem is required");
  json problem_json = load_json(args.problem_path);
  mcco::BuiltProblem built = mcco::build_problem(parse_adapter(problem_json));
  mcco::MlmcConfig config = mlmc_config_from(args, built.problem.num_stages);
  mcco::expected_cost(config);

  mcco::GradientOracle oracle = [&](const mcco::Vector& x, const mcco::RngStream& stream) {
    return mcco::mlmc_gradient_estimate(built.problem, x, config, stream);
  };

  json out;
  out["version"] = mcco::kVersion;
  out["seed"] = args.seed;
  out["config"] = resolved_config_json(args, problem_json);
  out["method"] = method;
  if (method == "sgd") {
    mcco::SgdResult result = mcco::projected_sgd(built.problem, built.x0,
                                                 mcco::SgdConfig::constant_step(iterations, eta), oracle,
                                                 mcco::RngStream(args.seed));
    out["output"] = std::vector<double>(result.output.data(), result.output.data() + result.output.size());
    const mcco::Vector& last = result.trajectory.back();
    out["final"] = std::vector<double>(last.data(), last.data() + last.size());
    out["total_scenarios"] = result.total_scenarios;
  } else if (method == "adam") {
    mcco::AdamConfig adam;
    adam.iterations = iterations;
    mcco::AdamBlock block;
    block.coords.resize(static_cast<std::size_t>(built.problem.decision_dim()));
    for (int c = 0; c < built.problem.decision_dim(); ++c) block.coords[static_cast<std::size_t>(c)] = c;
    block.lr = eta;
    adam.blocks = {block};
    mcco::AdamResult result = mcco::adam_run(built.problem, built.x0, adam, oracle, mcco::RngStream(args.seed));
    const mcco::Vector& last = result.trajectory.back();
    out["final"] = std::vector<double>(last.data(), last.data() + last.size());
    out["total_scenarios"] = result.total_scenarios;
  } else {
    throw mcco::InvalidParams("unknown method '" + method + "' (sgd | adam)");
  }
  if (!args.out_json.empty()) write_text(args.out_json, out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

mcco::ProblemConstants parse_constants(const json& j) {
  mcco::ProblemConstants constants;
  if (j.contains("L")) constants.L = j.at("L").get<std::vector<double>>();
  if (j.contains("S")) constants.S = j.at("S").get<std::vector<double>>();
  if (j.contains("sigma")) constants.sigma = j.at("sigma").get<std::vector<double>>();
  if (j.contains("mu_bar"))
    for (auto& [key, value] : j.at("mu_bar").items()) constants.mu_bar[std::stoi(key)] = value.get<double>();
  if (j.contains("nu_bar"))
    for (auto& [key, value] : j.at("nu_bar").items()) constants.nu_bar[std::stoi(key)] = value.get<double>();
  if (j.contains("B"))
    for (auto& [key, value] : j.at("B").items()) constants.B[std::stoi(key)] = value.get<double>();
  if (j.contains("R")) constants.R = j.at("R").get<std::vector<double>>();
  if (j.contains("rho")) constants.rho = j.at("rho").get<std::vector<double>>();
  if (j.contains("zeta2")) constants.zeta2 = j.at("zeta2").get<double>();
  if (j.contains("D_X")) constants.D_X = j.at("D_X").get<double>();
  if (j.contains("d")) constants.d = j.at("d").get<int>();
  if (j.contains("L_prime")) constants.L_prime = j.at("L_prime").get<double>();
  if (j.contains("dims")) constants.dims = j.at("dims").get<std::vector<int>>();
  return constants;
}

int run_schedule(const std::string& estimator, double epsilon, const std::string& constants_path,
                 bool smooth, const std::string& mode_name, double beta, int num_stages) {
  mcco::ProblemConstants constants = parse_constants(load_json(constants_path));
  mcco::ScheduleMode mode =
      mode_name == "highprob" ? mcco::ScheduleMode::highprob(beta) : mcco::ScheduleMode::mse();
  json out;
  out["version"] = mcco::kVersion;
  out["estimator"] = estimator;
  out["epsilon"] = epsilon;
  out["smooth"] = smooth;
  out["mode"] = mode_name;
  if (estimator == "saa") {
    mcco::SaaConfig config = mcco::saa_schedule(epsilon, constants, smooth, mode);
    out["n"] = config.n;
    out["total_scenarios"] = config.total_scenarios();
  } else if (estimator == "mlmc") {
    int T = num_stages > 0 ? num_stages : static_cast<int>(constants.L.size());
    if (T < 1) throw mcco::MissingConstant("supply --T or the Lipschitz constants L_1..L_T");
    mcco::TruncationSchedule schedule = mcco::truncation_schedule(T, epsilon, constants, smooth, mode);
    out["n1"] = schedule.n1;
    out["M"] = schedule.truncations;
    out["r"] = schedule.rates;
  } else {
    throw mcco::InvalidParams("unknown estimator '" + estimator + "' (saa | mlmc)");
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int run_experiment(const std::string& name, std::uint64_t seed, std::uint64_t n1, int truncation,
                   double rate, int reps, int iterations, int num_seeds, std::uint64_t grad_n1,
                   int threads, const std::string& out_dir) {
  mcco::ExperimentOutput result;
  if (name == "synthetic") {
    mcco::SyntheticOptions opts;
    opts.seed = seed;
    if (n1 > 0) opts.n1 = n1;
    opts.threads = threads;
    result = mcco::run_synthetic_experiment(opts);
  } else if (name == "bermudan") {
    mcco::BermudanOptions opts;
    opts.seed = seed;
    if (n1 > 0) opts.n1 = n1;
    if (truncation >= 0) opts.truncation = truncation;
    if (rate > 0) opts.rate = rate;
    opts.threads = threads;
    result = mcco::run_bermudan_experiment(opts);
  } else if (name == "bandits") {
    mcco::BanditsOptions opts;
    opts.seed = seed;
    if (iterations > 0) opts.iterations = iterations;
    if (num_seeds > 0) opts.num_seeds = num_seeds;
    if (grad_n1 > 0) opts.grad_n1 = grad_n1;
    opts.threads = threads;
    result = mcco::run_bandits_experiment(opts);
  } else if (name == "slopes") {
    mcco::SlopesOptions opts;
    opts.seed = seed;
    if (reps > 0) opts.replications = reps;
    opts.threads = threads;
    result = mcco::run_slopes_experiment(opts);
  } else {
    throw mcco::InvalidParams("unknown experiment '" + name + "' (synthetic | bermudan | bandits | slopes)");
  }

  json summary;
  summary["version"] = mcco::kVersion;
  summary["experiment"] = result.name;
  summary["seed"] = result.seed;
  summary["pass"] = result.all_pass();
  summary["checks"] = json::array();
  for (const mcco::CheckResult& check : result.checks) {
    summary["checks"].push_back(
        {{"name", check.name}, {"pass", check.pass}, {"observed", check.observed}, {"detail", check.detail}});
    std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name << ": " << check.detail << "\n";
  }

  std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(out_dir);
  std::filesystem::create_directories(dir);
  for (const mcco::NamedCsv& file : result.files) {
    std::ostringstream content;
    for (const std::string& line : file.lines) content << line << "\n";
    write_text((dir / file.filename).string(), content.str());
  }
  write_text((dir / (result.name + "_summary.json")).string(), summary.dump(2) + "\n");
  return result.all_pass() ? kExitOk : kExitTolerance;
}

int run_tune_rates(const std::string& problem_path, bool surrogate, double grid_start, double grid_stop,
                   double grid_step, int replications, int truncation, std::uint64_t seed, int threads) {
  mcco::BuiltProblem built =
      surrogate ? mcco::bermudan_rate_surrogate(4, 0.05) : mcco::build_problem(parse_adapter(load_json(problem_path)));
  std::vector<double> grid;
  for (double r = grid_start; r <= grid_stop + 1e-12; r += grid_step) grid.push_back(r);
  mcco::MlmcConfig config;
  config.threads = threads;
  config.levels.assign(static_cast<std::size_t>(built.problem.num_stages - 1),
                       mcco::LevelDistribution(0.6, truncation));
  double best = mcco::tune_rate_worknorm(built.problem, built.x0, grid, replications, config,
                                         mcco::RngStream(seed));
  json out;
  out["version"] = mcco::kVersion;
  out["seed"] = seed;
  out["grid"] = grid;
  out["replications"] = replications;
  out["truncation"] = truncation;
  out["best_rate"] = best;
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested conditional-expectation estimation and optimization toolkit"};
  app.require_subcommand(1);

  EstimateArgs args;
  args.threads = default_threads_from_env();

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--problem", args.problem_path, "problem descriptor JSON file");
    cmd->add_option("--seed", args.seed, "master seed (echoed into all outputs)");
    cmd->add_option("--threads", args.threads, "worker threads (default: logical cores)");
    cmd->add_option("--n1", args.n1, "number of trees");
    cmd->add_option("--rates", args.rates, "per-stage level rates r_1..r_{T-1}")->delimiter(',');
    cmd->add_option("--truncations", args.truncations, "per-stage truncations M_1..M_{T-1}; -1 = untruncated")
        ->delimiter(',');
    cmd->add_option("--budget", args.budget, "scenario cost guard");
    cmd->add_option("--x", args.x, "decision vector (default: adapter default)")->delimiter(',');
    cmd->add_option("--out", args.out_csv, "CSV output path");
    cmd->add_option("--json-out", args.out_json, "JSON report output path");
  };

  CLI::App* estimate = app.add_subcommand("estimate", "run a value estimator");
  add_common(estimate);
  estimate->add_option("--estimator", args.estimator, "saa | mlmc");
  estimate->add_option("--n", args.saa_n, "SAA branching n_1,..,n_T")->delimiter(',');
  estimate->add_option("--from-report", args.from_report, "re-run a recorded report (round trip)");

  CLI::App* gradient = app.add_subcommand("gradient", "run the MLMC gradient estimator");
  add_common(gradient);

  CLI::App* optimize = app.add_subcommand("optimize", "run projected SGD or Adam with MLMC gradients");
  add_common(optimize);
  std::string method = "sgd";
  int opt_iterations = 100;
  double opt_eta = 0.1;
  optimize->add_option("--method", method, "sgd | adam");
  optimize->add_option("--iters", opt_iterations, "iterations");
  optimize->add_option("--eta", opt_eta, "stepsize / learning rate");

  CLI::App* experiment = app.add_subcommand("experiment", "desk-scale reproduction runs");
  std::string exp_name;
  std::uint64_t exp_seed = 0, exp_n1 = 0, exp_grad_n1 = 0;
  int exp_trunc = -1, exp_reps = 0, exp_iters = 0, exp_num_seeds = 0, exp_threads = default_threads_from_env();
  double exp_rate = 0.0;
  std::string exp_out_dir;
  experiment->add_option("name", exp_name, "synthetic | bermudan | bandits | slopes")->required();
  experiment->add_option("--seed", exp_seed, "master seed");
  experiment->add_option("--n1", exp_n1, "number of trees override");
  experiment->add_option("--truncation", exp_trunc, "truncation override");
  experiment->add_option("--rate", exp_rate, "rate override");
  experiment->add_option("--reps", exp_reps, "replications (slopes)");
  experiment->add_option("--iters", exp_iters, "Adam iterations (bandits)");
  experiment->add_option("--seeds", exp_num_seeds, "number of seeds (bandits)");
  experiment->add_option("--grad-n1", exp_grad_n1, "gradient batch n1 (bandits)");
  experiment->add_option("--threads", exp_threads, "worker threads");
  experiment->add_option("--out-dir", exp_out_dir, "artifact directory");

  CLI::App* schedule = app.add_subcommand("schedule", "evaluate sample-size schedules");
  std::string sch_estimator = "saa", sch_constants, sch_mode = "mse";
  double sch_epsilon = 0.1, sch_beta = 0.05;
  bool sch_smooth = false;
  int sch_T = 0;
  schedule->add_option("--estimator", sch_estimator, "saa | mlmc");
  schedule->add_option("--epsilon", sch_epsilon, "target tolerance")->required();
  schedule->add_option("--constants", sch_constants, "constants JSON file")->required();
  schedule->add_flag("--smooth", sch_smooth, "integrands are smooth");
  schedule->add_option("--mode", sch_mode, "mse | highprob");
  schedule->add_option("--beta", sch_beta, "failure probability (highprob)");
  schedule->add_option("--T", sch_T, "stage count (mlmc; default: length of L)");

  CLI::App* tune = app.add_subcommand("tune-rates", "work-normalized rate tuning over a grid");
  std::string tune_problem;
  bool tune_surrogate = false;
  double grid_start = 0.51, grid_stop = 0.70, grid_step = 0.01;
  int tune_reps = 100000, tune_trunc = 9, tune_threads = default_threads_from_env();
  std::uint64_t tune_seed = 1;
  tune->add_option("--problem", tune_problem, "problem descriptor JSON file");
  tune->add_flag("--surrogate", tune_surrogate, "use the scalar-normal Bermudan proxy");
  tune->add_option("--grid-start", grid_start, "grid start");
  tune->add_option("--grid-stop", grid_stop, "grid stop");
  tune->add_option("--grid-step", grid_step, "grid step");
  tune->add_option("--replications", tune_reps, "trees per grid point");
  tune->add_option("--truncation", tune_trunc, "truncation during tuning");
  tune->add_option("--seed", tune_seed, "master seed");
  tune->add_option("--threads", tune_threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed()) return run_estimate(args);
    if (gradient->parsed()) return run_gradient(args);
    if (optimize->parsed()) return run_optimize(args, method, opt_iterations, opt_eta);
    if (experiment->parsed())
      return run_experiment(exp_name, exp_seed, exp_n1, exp_trunc, exp_rate, exp_reps, exp_iters,
                            exp_num_seeds, exp_grad_n1, exp_threads, exp_out_dir);
    if (schedule->parsed())
      return run_schedule(sch_estimator, sch_epsilon, sch_constants, sch_smooth, sch_mode, sch_beta, sch_T);
    if (tune->parsed())
      return run_tune_rates(tune_problem, tune_surrogate, grid_start, grid_stop, grid_step, tune_reps,
                            tune_trunc, tune_seed, tune_threads);
  } catch (const mcco::InfiniteCost& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCost;
  } catch (const mcco::CostGuardExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCost;
  } catch (const mcco::McCoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
