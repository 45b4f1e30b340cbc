#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcco/core.hpp"
#include "mcco/mlmc.hpp"
#include "mcco/report.hpp"

namespace mcco {

// Summary of independent estimator replications, with the error split into
// squared bias and variance when a reference value is available.
struct ReplicationSummary {
  std::vector<double> estimates;
  std::vector<std::uint64_t> scenario_counts;
  std::optional<double> truth;
  double mean = 0.0;
  double variance = 0.0;
  double bias2 = 0.0;
  double mse = 0.0;

  double mean_scenarios() const;
};

struct MseParts {
  double mse = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
};

// mean +- 1.96 * sample sd / sqrt(n). Throws TooFewSamples below length 2.
std::pair<double, double> confidence_interval(const std::vector<double>& values);

// Least-squares slope of log10(mse) against log10(cost).
double loglog_slope(const std::vector<double>& costs, const std::vector<double>& mses);

// Sample moments around `truth`; mse = bias2 + variance up to rounding.
MseParts mse_decompose(const std::vector<double>& estimates, double truth);

// One independent estimator run; replications derive disjoint child streams.
using EstimatorFn = std::function<EstimateReport(const RngStream& stream)>;

ReplicationSummary replicate(const EstimatorFn& estimator, int replications, const RngStream& stream,
                             std::optional<double> truth = std::nullopt);

// Work-normalized rate tuning: for each grid rate r (applied to every stage),
// estimates the tree second moment mu_1^2 by averaging H_1^2 over
// `replications` trees, multiplies by the per-tree expected cost, fits a
// quadratic by least squares over the grid and returns the grid point
// minimizing the fit.
double tune_rate_worknorm(const MccoProblem& problem, const Vector& x, const std::vector<double>& grid,
                          int replications, const MlmcConfig& config_template, const RngStream& stream);

// Rough pilot estimates of sigma_t and the terminal second moment bound from
// forward simulation; intended to seed schedule formulas when no analytic
// constants are available. Conditional variances use single-path plug-in
// continuation values; the esssup is proxied by a max over sampled histories.
ProblemConstants estimate_constants(const MccoProblem& problem, const Vector& x, int histories,
                                    int children_per_history, const RngStream& stream);

// Plot-ready CSV row shared by the CLI and the experiment harness.
struct CsvRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::uint64_t n1 = 0;
  double estimate = 0.0;
  double stderr_of_mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t scenarios = 0;
  double expected_cost = 0.0;
  double wall_ms = 0.0;
};

std::string csv_header();
std::string to_csv(const CsvRow& row);
CsvRow make_csv_row(const std::string& run_id, const EstimateReport& report, std::uint64_t n1, double wall_ms);

}  // namespace mcco
