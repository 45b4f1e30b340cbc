#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mcco/core.hpp"

namespace mcco {

// Output of a value estimator run. `value` is the mean of `tree_values` taken
// in tree-index order; `scenario_count` is the exact number of root-to-leaf
// paths consumed (not an expectation); `expected_cost` is the formula
// prediction (+inf when an untruncated stage has rate <= 1/2).
struct EstimateReport {
  double value = 0.0;
  std::vector<double> tree_values;
  std::uint64_t scenario_count = 0;
  double expected_cost = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;

  double stderr_of_mean() const;
  // mean +- 1.96 * sd / sqrt(n1)
  std::pair<double, double> confidence_interval() const;
};

// Output of the gradient estimator; same cost accounting as the value run.
struct GradientReport {
  Vector gradient;
  std::vector<Vector> tree_gradients;
  // Tree-wise value estimates H_1, coupled bitwise to the value estimator.
  std::vector<double> tree_values;
  std::uint64_t scenario_count = 0;
  double expected_cost = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
};

}  // namespace mcco
