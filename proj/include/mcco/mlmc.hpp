#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcco/core.hpp"
#include "mcco/report.hpp"
#include "mcco/rng.hpp"
#include "mcco/saa.hpp"

namespace mcco {

// Configuration shared by the value and gradient MLMC estimators: number of
// trees n_1 and one level distribution per stage 1..T-1.
struct MlmcConfig {
  std::uint64_t n1 = 1;
  std::vector<LevelDistribution> levels;
  int threads = 0;                         // 0 = hardware default
  std::uint64_t cost_budget = 1000000000;  // abort when scenario_count passes this
  // Remark-style A/B variant: the gradient recursion draws its own samples
  // for the value argument chain instead of sharing them.
  bool independent_pair_samples = false;

  // Structural checks; returns human-readable warnings (e.g. untruncated
  // stage with rate <= 1/2, whose expected cost is infinite).
  std::vector<std::string> check(int num_stages) const;
};

// Optional instrumentation filled during an estimator run. `max_antithetic_gap`
// is the largest |full - (even+odd)/2| over all nodes as implemented (zero by
// construction); `max_direct_gap` compares against an independently summed
// full average and is bounded by machine rounding; `max_grad_split_gap` is the
// largest level-contribution norm of the gradient at levels >= 1.
struct MlmcProbe {
  double max_antithetic_gap = 0.0;
  double max_direct_gap = 0.0;
  double max_grad_split_gap = 0.0;
  std::uint64_t nodes_with_children = 0;
  std::uint64_t max_level_seen = 0;
};

// Recursive truncated (or untruncated) MLMC estimator of F(x). Each node
// draws its own level lambda_t, spawns 2^{lambda_t} conditional children,
// computes every child value once and reuses it across the full/even/odd
// averages. Tree-level parallelism with per-tree derived streams; reduction
// in tree-index order.
EstimateReport mlmc_value_estimate(const MccoProblem& problem, const Vector& x, const MlmcConfig& config,
                                   const RngStream& stream, MlmcProbe* probe = nullptr);

// Expected number of scenarios n_1 * prod_t sum_l q_t(l) 2^l, in closed form
// per stage. Throws InfiniteCost for an untruncated stage with rate <= 1/2.
double expected_cost(const MlmcConfig& config);

// Near-optimal rates: 1/2 per stage for nonsmooth integrands, 1 - 2^{-1-2^-t}
// for smooth ones.
std::vector<double> default_rates(int num_stages, bool smooth);

struct TruncationSchedule {
  std::vector<int> truncations;  // M_1..M_{T-1}
  std::vector<double> rates;     // the rates the schedule was evaluated at
  std::uint64_t n1 = 1;
};

// Backward recursion for the truncation points M_{T-1},...,M_1 plus the
// implied number of trees. Mse mode targets root mean squared error epsilon;
// HighProb mode the uniform-convergence variant (requires zeta2, D_X, d and
// the estimator Lipschitz constant L_prime).
TruncationSchedule truncation_schedule(int num_stages, double epsilon, const ProblemConstants& constants,
                                       bool smooth, ScheduleMode mode);

}  // namespace mcco
