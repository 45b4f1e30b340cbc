#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mcco/core.hpp"
#include "mcco/report.hpp"

namespace mcco {

// Gradient oracle: an estimator closure evaluated at the current iterate
// with a per-iteration derived stream.
using GradientOracle = std::function<GradientReport(const Vector& x, const RngStream& stream)>;

struct SgdConfig {
  int iterations = 100;  // K
  std::function<double(int k)> stepsize;  // 1-based iteration index

  static SgdConfig constant_step(int iterations, double eta);
};

// Constant stepsize eta = nu_bar1 * sqrt(n1 / K) backing the K-iteration
// guarantee; nu_bar1 is user-supplied or pilot-estimated.
double theorem_stepsize(double nu_bar1, std::uint64_t n1, int iterations);

// Iterations sufficient for an epsilon-stationary point:
// ceil(nu_bar1^2 / (n1 eps^4) * bracket^2), where bracket bundles the optimality
// gap and smoothness term 2[F(x_1) - min F] + S_[T].
std::uint64_t sgd_iteration_bound(double nu_bar1, std::uint64_t n1, double bracket, double epsilon);

struct SgdResult {
  Vector output;                  // iterate chosen uniformly at random
  std::vector<Vector> trajectory; // x_1 (initial) .. x_{K+1}
  std::uint64_t total_scenarios = 0;
};

// Projected SGD: x_{k+1} = proj_X(x_k - eta_k G(x_k)); the output is drawn
// uniformly from {x_1..x_K} using the run's stream.
SgdResult projected_sgd(const MccoProblem& problem, const Vector& x0, const SgdConfig& config,
                        const GradientOracle& grad, const RngStream& stream);

// softplus(w) = log(1 + e^w) and companions, used to keep reparameterized
// coordinates positive without a hard projection boundary.
double softplus(double w);
double softplus_prime(double w);
double softplus_inverse(double x);

// One Adam coordinate block: learning rate, gradient-norm clip, optional L2
// weight on the objective, optional softplus reparameterization (coordinate
// kept positive) and optional per-coordinate interval projection.
struct AdamBlock {
  std::vector<int> coords;
  double lr = 1e-3;
  double clip = std::numeric_limits<double>::infinity();
  double l2 = 0.0;
  bool softplus_reparam = false;
  std::optional<std::pair<double, double>> project;
};

struct AdamConfig {
  std::vector<AdamBlock> blocks;
  int iterations = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamResult {
  std::vector<Vector> trajectory;               // x_1 (initial) .. x_{K+1}
  std::vector<std::uint64_t> scenario_counts;   // per-iteration estimator cost
  std::uint64_t total_scenarios = 0;
};

AdamResult adam_run(const MccoProblem& problem, const Vector& x0, const AdamConfig& config,
                    const GradientOracle& grad, const RngStream& stream);

// Rescales g to norm `threshold` when ||g|| exceeds it; direction preserved.
Vector clip_norm(const Vector& g, double threshold);

}  // namespace mcco
