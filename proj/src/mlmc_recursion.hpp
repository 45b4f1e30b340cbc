#pragma once

// Internal shared recursion for the MLMC value and gradient estimators. The
// gradient run executes the exact same draws and H arithmetic as a value-only
// run, which is what makes the per-tree H_1 coupling bitwise.

#include <atomic>
#include <cstdint>

#include "mcco/core.hpp"
#include "mcco/mlmc.hpp"

namespace mcco::detail {

enum class RecursionMode { Value, Gradient, GradientIndependent };

struct TreeProbe {
  double max_antithetic_gap = 0.0;
  double max_direct_gap = 0.0;
  double max_grad_split_gap = 0.0;
  std::uint64_t nodes_with_children = 0;
  std::uint64_t max_level_seen = 0;
};

struct TreeContext {
  const MccoProblem& problem;
  const Vector& x;
  const MlmcConfig& config;
  RecursionMode mode;
  std::atomic<std::uint64_t>* shared_paths;  // paths finished by other trees
  std::uint64_t local_paths = 0;
  TreeProbe* probe = nullptr;  // optional

  void count_leaf() {
    ++local_paths;
    if ((local_paths & 0x3ff) == 0) check_budget(0);
  }
  void check_budget(std::uint64_t about_to_spawn) {
    std::uint64_t global = shared_paths->load(std::memory_order_relaxed);
    if (global + local_paths + about_to_spawn > config.cost_budget)
      throw CostGuardExceeded("scenario budget of " + std::to_string(config.cost_budget) +
                              " paths exceeded; untruncated levels may be running away");
  }
};

struct NodeOut {
  Vector h;  // H_t, dim d_{t-1}
  Matrix g;  // G_t, d x d_{t-1}; empty in value mode
};

// Evaluates the stage-t node whose observation xi_t sits on top of `path`.
// `stream` is the node's stream, already advanced past the draws that
// produced xi_t.
NodeOut mlmc_node(TreeContext& ctx, int t, SamplePath& path, RngStream stream);

}  // namespace mcco::detail
