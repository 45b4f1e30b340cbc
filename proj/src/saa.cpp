#include "mcco/saa.hpp"

#include <cmath>
#include <numeric>

#include "mcco/parallel.hpp"

namespace mcco {

std::uint64_t SaaConfig::total_scenarios() const {
  std::uint64_t total = 1;
  for (std::uint64_t n_t : n) total *= n_t;
  return total;
}

namespace {

// Depth-first evaluation of one subtree rooted at a stage-t node whose own
// observation xi_t is the last entry of `path`. Children are drawn in child
// index order from streams derived off the node stream.
Vector saa_node(const MccoProblem& problem, const Vector& x, const SaaConfig& config, int t,
                SamplePath& path, const RngStream& node_stream) {
  const int T = problem.num_stages;
  if (t == T) return evaluate_integrand(problem, t, path.at(t), x);
  const std::uint64_t n_child = config.n[static_cast<std::size_t>(t)];
  Vector sum = Vector::Zero(problem.dims[static_cast<std::size_t>(t)]);
  for (std::uint64_t i = 0; i < n_child; ++i) {
    RngStream child = node_stream.child(i);
    Vector xi = problem.samplers[static_cast<std::size_t>(t)](path, child);
    path.push(xi);
    sum += saa_node(problem, x, config, t + 1, path, child);
    path.pop();
  }
  return evaluate_integrand(problem, t, path.at(t), sum / static_cast<double>(n_child));
}

}  // namespace

EstimateReport saa_estimate(const MccoProblem& problem, const Vector& x, const SaaConfig& config,
                            const RngStream& stream) {
  const int T = problem.num_stages;
  if (static_cast<int>(config.n.size()) != T)
    throw InvalidParams("SAA config must list n_1..n_T (" + std::to_string(T) + " entries)");
  for (std::uint64_t n_t : config.n)
    if (n_t < 1) throw InvalidParams("all SAA branching factors must be >= 1");
  if (x.size() != problem.decision_dim())
    throw DimensionMismatch(T, "decision vector has length " + std::to_string(x.size()) + ", expected " +
                                   std::to_string(problem.decision_dim()));

  const std::uint64_t n1 = config.n[0];
  EstimateReport report;
  report.seed = stream.key();
  report.tree_values.resize(n1);
  int threads = config.threads > 0 ? config.threads : default_thread_count();
  parallel_for(static_cast<std::int64_t>(n1), threads, [&](std::int64_t i1) {
    try {
      RngStream tree_stream = stream.child(static_cast<std::uint64_t>(i1));
      SamplePath path;
      Vector xi1 = problem.samplers[0](path, tree_stream);
      path.push(xi1);
      Vector value = saa_node(problem, x, config, 1, path, tree_stream);
      report.tree_values[static_cast<std::size_t>(i1)] = value(0);
    } catch (const McCoError& e) {
      throw McCoError("tree " + std::to_string(i1) + ": " + e.what());
    }
  });
  double sum = 0.0;
  for (double v : report.tree_values) sum += v;
  report.value = sum / static_cast<double>(n1);
  report.scenario_count = config.total_scenarios();
  report.expected_cost = static_cast<double>(report.scenario_count);
  return report;
}

namespace {

double require_entry(const std::vector<double>& v, int t, const char* name) {
  if (t < 1 || t > static_cast<int>(v.size()))
    throw MissingConstant(std::string(name) + "_" + std::to_string(t) + " not supplied");
  double value = v[static_cast<std::size_t>(t) - 1];
  if (!(value > 0.0)) throw MissingConstant(std::string(name) + "_" + std::to_string(t) + " must be positive");
  return value;
}

}  // namespace

SaaConfig saa_schedule(double epsilon, const ProblemConstants& constants, bool smooth, ScheduleMode mode) {
  if (!(epsilon > 0.0)) throw InvalidParams("tolerance must be positive");
  const int T = static_cast<int>(constants.sigma.size());
  if (T < 1) throw MissingConstant("sigma_1..sigma_T not supplied");

  SaaConfig config;
  config.n.resize(static_cast<std::size_t>(T));

  const double sigma1 = require_entry(constants.sigma, 1, "sigma");
  if (mode.kind == ScheduleMode::Kind::Mse) {
    config.n[0] = static_cast<std::uint64_t>(
        std::ceil(1.0 + 2.0 * std::sqrt(2.0) * sigma1 / epsilon + 2.0 * sigma1 * sigma1 / (epsilon * epsilon)));
  } else {
    if (!constants.zeta2) throw MissingConstant("zeta2 (sub-Gaussian variance proxy) not supplied");
    if (!constants.D_X) throw MissingConstant("D_X (feasible-set diameter) not supplied");
    if (!constants.d) throw MissingConstant("d (decision dimension) not supplied");
    if (!(mode.beta > 0.0 && mode.beta < 1.0)) throw InvalidParams("beta must lie in (0,1)");
    double lip = constants.lip_product(1, T);
    double net = std::ceil(8.0 * lip * *constants.D_X / epsilon + 1.0);
    config.n[0] = static_cast<std::uint64_t>(
        std::ceil(128.0 * *constants.zeta2 / (epsilon * epsilon) *
                  (*constants.d * std::log(net) + std::log(4.0 / mode.beta))));
  }

  for (int t = 2; t <= T; ++t) {
    double sigma_t = require_entry(constants.sigma, t, "sigma");
    double n_t;
    if (!smooth) {
      double lead = (mode.kind == ScheduleMode::Kind::Mse) ? std::sqrt(2.0) : 4.0;
      double base = lead * constants.lip_product(1, t - 1) * sigma_t * (T - 1) / epsilon;
      n_t = std::ceil(base * base);
    } else {
      double s_prev = require_entry(constants.S, t - 1, "S");
      double lip = constants.lip_product(1, t - 2);
      if (mode.kind == ScheduleMode::Kind::Mse)
        n_t = std::ceil(std::sqrt(2.0) * lip * s_prev * sigma_t * sigma_t * (T - 1) / (2.0 * epsilon));
      else
        n_t = std::ceil(2.0 * lip * s_prev * sigma_t * sigma_t * (T - 1) / epsilon);
    }
    config.n[static_cast<std::size_t>(t) - 1] = n_t < 1.0 ? 1 : static_cast<std::uint64_t>(n_t);
  }
  if (config.n[0] < 1) config.n[0] = 1;
  return config;
}

}  // namespace mcco
