#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcco/analysis.hpp"
#include "mcco/problems.hpp"

namespace mcco {

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  std::string detail;
};

struct NamedCsv {
  std::string filename;
  std::vector<std::string> lines;  // header included
};

struct ExperimentOutput {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  std::vector<NamedCsv> files;

  bool all_pass() const;
};

// Synthetic ground-truth reproduction: truncated MLMC with rates
// (1-2^{-3/2}, 1-2^{-5/4}) and truncations (6,5) against exp(-1/2).
struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::uint64_t n1 = 100000;
  int threads = 0;
};
ExperimentOutput run_synthetic_experiment(const SyntheticOptions& opts);

// Closed-form cost values reproduced by the expected-cost formula.
ExperimentOutput run_cost_formula_checks();

// Log-log MSE-vs-cost decay slopes for truncated MLMC and the two SAA
// branching policies on the synthetic problem.
struct SlopesOptions {
  std::uint64_t seed = 1;
  int replications = 10;
  int threads = 0;
};
ExperimentOutput run_slopes_experiment(const SlopesOptions& opts);

// Bermudan basket option pricing at desk scale.
struct BermudanOptions {
  std::uint64_t seed = 3;
  std::uint64_t n1 = 500000;
  int truncation = 10;
  double rate = 0.58;
  int threads = 0;
};
ExperimentOutput run_bermudan_experiment(const BermudanOptions& opts);

// Contextual bandit experiment: exact-enumeration oracle plus Adam with
// truncated MLMC gradients, convergence to the oracle minimizer averaged over
// several seeds.
struct BanditsOptions {
  std::uint64_t seed = 5;
  int iterations = 2000;
  int num_seeds = 5;
  std::uint64_t grad_n1 = 8;
  std::vector<int> truncations = {3, 3};
  std::vector<double> rates;  // empty = smooth defaults
  int threads = 0;
};
ExperimentOutput run_bandits_experiment(const BanditsOptions& opts);

// Cheap scalar proxy of the Bermudan problem used for work-normalized rate
// tuning: i.i.d. standard normal "prices" with at-the-money payoff max{0,-z}.
BuiltProblem bermudan_rate_surrogate(int dates, double gamma);

}  // namespace mcco
