#include "mcco/analysis.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace mcco {

double EstimateReport::stderr_of_mean() const {
  const std::size_t n = tree_values.size();
  if (n < 2) return 0.0;
  double sq = 0.0;
  for (double v : tree_values) sq += (v - value) * (v - value);
  return std::sqrt(sq / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

std::pair<double, double> EstimateReport::confidence_interval() const {
  double half = 1.96 * stderr_of_mean();
  return {value - half, value + half};
}

double ReplicationSummary::mean_scenarios() const {
  if (scenario_counts.empty()) return 0.0;
  double sum = 0.0;
  for (std::uint64_t c : scenario_counts) sum += static_cast<double>(c);
  return sum / static_cast<double>(scenario_counts.size());
}

std::pair<double, double> confidence_interval(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw TooFewSamples("confidence interval needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  double sd = std::sqrt(sq / static_cast<double>(n - 1));
  double half = 1.96 * sd / std::sqrt(static_cast<double>(n));
  return {mean - half, mean + half};
}

double loglog_slope(const std::vector<double>& costs, const std::vector<double>& mses) {
  if (costs.size() != mses.size()) throw DegenerateFit("costs and mses must have equal length");
  if (costs.size() < 3) throw DegenerateFit("slope fit needs at least three points");
  const std::size_t n = costs.size();
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(costs[i] > 0.0) || !(mses[i] > 0.0)) throw DegenerateFit("slope fit needs positive entries");
    xs[i] = std::log10(costs[i]);
    ys[i] = std::log10(mses[i]);
    sx += xs[i];
    sy += ys[i];
  }
  double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw DegenerateFit("all costs identical");
  return sxy / sxx;
}

MseParts mse_decompose(const std::vector<double>& estimates, double truth) {
  const std::size_t n = estimates.size();
  if (n < 2) throw TooFewSamples("mse decomposition needs at least two estimates");
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= static_cast<double>(n);
  MseParts parts;
  parts.bias2 = (mean - truth) * (mean - truth);
  for (double e : estimates) {
    parts.variance += (e - mean) * (e - mean);
    parts.mse += (e - truth) * (e - truth);
  }
  parts.variance /= static_cast<double>(n);
  parts.mse /= static_cast<double>(n);
  return parts;
}

ReplicationSummary replicate(const EstimatorFn& estimator, int replications, const RngStream& stream,
                             std::optional<double> truth) {
  if (replications < 1) throw InvalidParams("need at least one replication");
  ReplicationSummary summary;
  summary.truth = truth;
  summary.estimates.reserve(static_cast<std::size_t>(replications));
  summary.scenario_counts.reserve(static_cast<std::size_t>(replications));
  for (int r = 0; r < replications; ++r) {
    EstimateReport report = estimator(stream.child(static_cast<std::uint64_t>(r)));
    summary.estimates.push_back(report.value);
    summary.scenario_counts.push_back(report.scenario_count);
  }
  double mean = 0.0;
  for (double e : summary.estimates) mean += e;
  summary.mean = mean / static_cast<double>(replications);
  for (double e : summary.estimates) summary.variance += (e - summary.mean) * (e - summary.mean);
  summary.variance /= static_cast<double>(replications);
  if (truth) {
    MseParts parts = replications >= 2 ? mse_decompose(summary.estimates, *truth) : MseParts{};
    summary.bias2 = parts.bias2;
    summary.mse = parts.mse;
  }
  return summary;
}

double tune_rate_worknorm(const MccoProblem& problem, const Vector& x, const std::vector<double>& grid,
                          int replications, const MlmcConfig& config_template, const RngStream& stream) {
  if (grid.empty()) throw InvalidParams("rate grid must not be empty");
  for (double r : grid)
    if (!(r > 0.5 && r < 1.0)) throw InvalidParams("grid rates must lie in (0.5, 1)");
  if (grid.size() == 1) return grid[0];

  std::vector<double> worknorm(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    MlmcConfig config = config_template;
    config.n1 = static_cast<std::uint64_t>(replications);
    for (LevelDistribution& dist : config.levels) dist = LevelDistribution(grid[k], dist.truncation);
    EstimateReport report = mlmc_value_estimate(problem, x, config, stream.child(k));
    double second_moment = 0.0;
    for (double v : report.tree_values) second_moment += v * v;
    second_moment /= static_cast<double>(report.tree_values.size());
    worknorm[k] = second_moment * (report.expected_cost / static_cast<double>(config.n1));
  }

  // Quadratic least-squares fit over the grid, minimizer snapped to the grid.
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double r = grid[k], y = worknorm[k];
    s0 += 1;
    s1 += r;
    s2 += r * r;
    s3 += r * r * r;
    s4 += r * r * r * r;
    t0 += y;
    t1 += r * y;
    t2 += r * r * y;
  }
  Eigen::Matrix3d normal;
  normal << s0, s1, s2, s1, s2, s3, s2, s3, s4;
  Eigen::Vector3d rhs(t0, t1, t2);
  Eigen::Vector3d coef = normal.ldlt().solve(rhs);

  std::size_t best = 0;
  double best_fit = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double fit = coef(0) + coef(1) * grid[k] + coef(2) * grid[k] * grid[k];
    if (fit < best_fit) {
      best_fit = fit;
      best = k;
    }
  }
  return grid[best];
}

namespace {

// Single-path plug-in continuation value from a given history.
Vector plugin_continuation(const MccoProblem& problem, const Vector& x, int t, SamplePath& path,
                           const RngStream& stream) {
  const int T = problem.num_stages;
  if (t == T + 1) return x;
  RngStream child = stream.child(0);
  Vector xi = problem.samplers[static_cast<std::size_t>(t) - 1](path, child);
  path.push(xi);
  Vector inner = plugin_continuation(problem, x, t + 1, path, child);
  Vector out = evaluate_integrand(problem, t, xi, inner);
  path.pop();
  return out;
}

}  // namespace

ProblemConstants estimate_constants(const MccoProblem& problem, const Vector& x, int histories,
                                    int children_per_history, const RngStream& stream) {
  if (histories < 2 || children_per_history < 2)
    throw InvalidParams("pilot needs at least two histories and two children each");
  const int T = problem.num_stages;
  ProblemConstants constants;
  constants.sigma.assign(static_cast<std::size_t>(T), 0.0);
  double mu2_max = 0.0;

  for (int h = 0; h < histories; ++h) {
    RngStream history_stream = stream.child(static_cast<std::uint64_t>(h));
    SamplePath path;
    for (int t = 1; t <= T; ++t) {
      // Conditional spread of f_t given the history so far, at a plug-in
      // continuation argument held fixed across the children.
      RngStream stage_stream = history_stream.child(static_cast<std::uint64_t>(t));
      Vector x_arg;
      {
        SamplePath probe_path = path;
        RngStream cont = stage_stream.child(0);
        Vector xi0 = problem.samplers[static_cast<std::size_t>(t) - 1](probe_path, cont);
        probe_path.push(xi0);
        x_arg = (t == T) ? x : plugin_continuation(problem, x, t + 1, probe_path, cont);
      }
      double sum = 0.0, sumsq = 0.0, sumnorm2 = 0.0;
      for (int c = 0; c < children_per_history; ++c) {
        RngStream cs = stage_stream.child(static_cast<std::uint64_t>(c) + 1);
        Vector xi = problem.samplers[static_cast<std::size_t>(t) - 1](path, cs);
        Vector f = evaluate_integrand(problem, t, xi, x_arg);
        double norm = f.norm();
        sum += norm;  // scalar proxy via norms
        sumsq += norm * norm;
        sumnorm2 += f.squaredNorm();
      }
      double n = static_cast<double>(children_per_history);
      double var = sumsq / n - (sum / n) * (sum / n);
      if (var < 0.0) var = 0.0;
      std::size_t idx = static_cast<std::size_t>(t) - 1;
      constants.sigma[idx] = std::max(constants.sigma[idx], std::sqrt(var));
      if (t == T) mu2_max = std::max(mu2_max, sumnorm2 / n);
      // Extend the history by one conditional draw for the next stage.
      RngStream forward = history_stream.child(1000 + static_cast<std::uint64_t>(t));
      path.push(problem.samplers[static_cast<std::size_t>(t) - 1](path, forward));
    }
  }
  constants.mu_bar[2] = mu2_max;
  return constants;
}

std::string csv_header() {
  return "run_id,seed,n1,estimate,stderr,ci_low,ci_high,scenarios,expected_cost,wall_ms";
}

std::string to_csv(const CsvRow& row) {
  std::ostringstream out;
  out.precision(12);
  out << row.run_id << ',' << row.seed << ',' << row.n1 << ',' << row.estimate << ',' << row.stderr_of_mean
      << ',' << row.ci_low << ',' << row.ci_high << ',' << row.scenarios << ',' << row.expected_cost << ','
      << row.wall_ms;
  return out.str();
}

CsvRow make_csv_row(const std::string& run_id, const EstimateReport& report, std::uint64_t n1, double wall_ms) {
  CsvRow row;
  row.run_id = run_id;
  row.seed = report.seed;
  row.n1 = n1;
  row.estimate = report.value;
  row.stderr_of_mean = report.stderr_of_mean();
  auto ci = report.confidence_interval();
  row.ci_low = ci.first;
  row.ci_high = ci.second;
  row.scenarios = report.scenario_count;
  row.expected_cost = report.expected_cost;
  row.wall_ms = wall_ms;
  return row;
}

}  // namespace mcco
