#pragma once

#include <cstdint>
#include <vector>

#include "mcco/core.hpp"
#include "mcco/report.hpp"

namespace mcco {

// Per-stage branching factors of the scenario forest; n[0] = n_1 is the
// number of trees. Total scenario count is the product of all entries.
struct SaaConfig {
  std::vector<std::uint64_t> n;
  int threads = 0;  // 0 = hardware default

  std::uint64_t total_scenarios() const;
};

// Sample-size schedule mode: mean-squared-error tuning or the
// high-probability (uniform convergence) variant with confidence 1 - beta.
struct ScheduleMode {
  enum class Kind { Mse, HighProb };
  Kind kind = Kind::Mse;
  double beta = 0.05;

  static ScheduleMode mse() { return {Kind::Mse, 0.0}; }
  static ScheduleMode highprob(double beta) { return {Kind::HighProb, beta}; }
};

// Scenario-forest SAA estimator: n_1 independent trees built by conditional
// forward sampling, nested sample averages evaluated depth-first (trees are
// never materialized). Trees are independent work items; the final mean is
// reduced in tree-index order so results are thread-count invariant.
EstimateReport saa_estimate(const MccoProblem& problem, const Vector& x, const SaaConfig& config,
                            const RngStream& stream);

// Stagewise sample sizes achieving root mean squared error epsilon (Mse mode)
// or eps-uniform accuracy with probability 1-beta (HighProb mode).
SaaConfig saa_schedule(double epsilon, const ProblemConstants& constants, bool smooth, ScheduleMode mode);

}  // namespace mcco
