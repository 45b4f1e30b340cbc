#include "mcco/optimizer.hpp"

#include <cmath>
#include <string>

namespace mcco {

SgdConfig SgdConfig::constant_step(int iterations, double eta) {
  if (iterations < 1) throw InvalidParams("iteration count must be >= 1");
  if (!(eta > 0.0)) throw InvalidParams("stepsize must be positive");
  SgdConfig config;
  config.iterations = iterations;
  config.stepsize = [eta](int) { return eta; };
  return config;
}

double theorem_stepsize(double nu_bar1, std::uint64_t n1, int iterations) {
  if (!(nu_bar1 > 0.0) || n1 < 1 || iterations < 1) throw InvalidParams("stepsize inputs must be positive");
  return nu_bar1 * std::sqrt(static_cast<double>(n1) / static_cast<double>(iterations));
}

std::uint64_t sgd_iteration_bound(double nu_bar1, std::uint64_t n1, double bracket, double epsilon) {
  if (!(nu_bar1 > 0.0) || n1 < 1 || !(bracket > 0.0) || !(epsilon > 0.0))
    throw InvalidParams("iteration bound inputs must be positive");
  double k = nu_bar1 * nu_bar1 / (static_cast<double>(n1) * std::pow(epsilon, 4.0)) * bracket * bracket;
  double ceiled = std::ceil(k);
  return ceiled < 1.0 ? 1 : static_cast<std::uint64_t>(ceiled);
}

SgdResult projected_sgd(const MccoProblem& problem, const Vector& x0, const SgdConfig& config,
                        const GradientOracle& grad, const RngStream& stream) {
  if (config.iterations < 1) throw InvalidParams("iteration count must be >= 1");
  if (!config.stepsize) throw InvalidParams("stepsize schedule missing");
  if (x0.size() != problem.decision_dim())
    throw DimensionMismatch(problem.num_stages, "initial point has wrong dimension");

  SgdResult result;
  result.trajectory.reserve(static_cast<std::size_t>(config.iterations) + 1);
  Vector x = project(problem.feasible_set, x0);
  result.trajectory.push_back(x);
  RngStream run_stream = stream;
  for (int k = 1; k <= config.iterations; ++k) {
    GradientReport report;
    try {
      report = grad(x, stream.child(static_cast<std::uint64_t>(k)));
    } catch (const McCoError& e) {
      throw McCoError("iteration " + std::to_string(k) + ": " + e.what());
    }
    result.total_scenarios += report.scenario_count;
    x = project(problem.feasible_set, x - config.stepsize(k) * report.gradient);
    result.trajectory.push_back(x);
  }
  // Uniform draw over {x_1..x_K}; the draw comes from the run stream itself,
  // which no iteration touches (children are key-derived).
  std::size_t pick = static_cast<std::size_t>(run_stream.uniform() * config.iterations);
  if (pick >= static_cast<std::size_t>(config.iterations)) pick = static_cast<std::size_t>(config.iterations) - 1;
  result.output = result.trajectory[pick];
  return result;
}

double softplus(double w) { return w > 30.0 ? w : std::log1p(std::exp(w)); }

double softplus_prime(double w) { return 1.0 / (1.0 + std::exp(-w)); }

double softplus_inverse(double x) {
  if (!(x > 0.0)) throw InvalidParams("softplus inverse needs a positive argument");
  return x > 30.0 ? x : std::log(std::expm1(x));
}

Vector clip_norm(const Vector& g, double threshold) {
  if (!(threshold > 0.0)) throw InvalidParams("clip threshold must be positive");
  double norm = g.norm();
  if (norm <= threshold || norm == 0.0) return g;
  return g * (threshold / norm);
}

AdamResult adam_run(const MccoProblem& problem, const Vector& x0, const AdamConfig& config,
                    const GradientOracle& grad, const RngStream& stream) {
  if (config.iterations < 1) throw InvalidParams("iteration count must be >= 1");
  const int d = problem.decision_dim();
  if (x0.size() != d) throw DimensionMismatch(problem.num_stages, "initial point has wrong dimension");
  std::vector<bool> covered(static_cast<std::size_t>(d), false);
  for (const AdamBlock& block : config.blocks) {
    if (!(block.lr > 0.0)) throw InvalidParams("learning rates must be positive");
    if (!(block.clip > 0.0)) throw InvalidParams("clip thresholds must be positive");
    for (int c : block.coords) {
      if (c < 0 || c >= d) throw InvalidParams("block coordinate out of range");
      if (covered[static_cast<std::size_t>(c)]) throw InvalidParams("blocks must not overlap");
      covered[static_cast<std::size_t>(c)] = true;
    }
  }

  // Working variables: the softplus preimage for reparameterized coordinates,
  // the coordinate itself otherwise.
  Vector x = x0;
  Vector w = x0;
  for (const AdamBlock& block : config.blocks)
    if (block.softplus_reparam)
      for (int c : block.coords) w(c) = softplus_inverse(x(c));

  Vector m = Vector::Zero(d);
  Vector v = Vector::Zero(d);
  AdamResult result;
  result.trajectory.reserve(static_cast<std::size_t>(config.iterations) + 1);
  result.trajectory.push_back(x);
  result.scenario_counts.reserve(static_cast<std::size_t>(config.iterations));

  for (int k = 1; k <= config.iterations; ++k) {
    GradientReport report;
    try {
      report = grad(x, stream.child(static_cast<std::uint64_t>(k)));
    } catch (const McCoError& e) {
      throw McCoError("iteration " + std::to_string(k) + ": " + e.what());
    }
    result.scenario_counts.push_back(report.scenario_count);
    result.total_scenarios += report.scenario_count;

    double bc1 = 1.0 - std::pow(config.beta1, k);
    double bc2 = 1.0 - std::pow(config.beta2, k);
    for (const AdamBlock& block : config.blocks) {
      // Clip the raw estimator block, then add the L2 term and chain through
      // the reparameterization.
      Vector g_block(block.coords.size());
      for (std::size_t j = 0; j < block.coords.size(); ++j) g_block(static_cast<Eigen::Index>(j)) = report.gradient(block.coords[j]);
      g_block = clip_norm(g_block, block.clip);
      for (std::size_t j = 0; j < block.coords.size(); ++j) {
        int c = block.coords[j];
        double g = g_block(static_cast<Eigen::Index>(j)) + 2.0 * block.l2 * x(c);
        if (block.softplus_reparam) g *= softplus_prime(w(c));
        m(c) = config.beta1 * m(c) + (1.0 - config.beta1) * g;
        v(c) = config.beta2 * v(c) + (1.0 - config.beta2) * g * g;
        double step = block.lr * (m(c) / bc1) / (std::sqrt(v(c) / bc2) + config.eps);
        w(c) -= step;
        double value = block.softplus_reparam ? softplus(w(c)) : w(c);
        if (block.project) {
          value = std::min(std::max(value, block.project->first), block.project->second);
          if (!block.softplus_reparam) w(c) = value;
        }
        x(c) = value;
      }
    }
    result.trajectory.push_back(x);
  }
  return result;
}

}  // namespace mcco
