#include "mcco/mlmc.hpp"

#include <cmath>
#include <mutex>

#include "mcco/mlmc_gradient.hpp"
#include "mcco/parallel.hpp"
#include "mlmc_recursion.hpp"

namespace mcco {

namespace detail {

namespace {

// Value-only inner estimate used by the independent-samples gradient variant.
Vector value_only_child(TreeContext& ctx, int t, SamplePath& path, const RngStream& stream) {
  TreeContext value_ctx = ctx;
  value_ctx.mode = RecursionMode::Value;
  value_ctx.local_paths = 0;
  value_ctx.probe = nullptr;
  NodeOut out = mlmc_node(value_ctx, t, path, stream);
  ctx.local_paths += value_ctx.local_paths;
  return out.h;
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

NodeOut mlmc_node(TreeContext& ctx, int t, SamplePath& path, RngStream stream) {
  const MccoProblem& problem = ctx.problem;
  const int T = problem.num_stages;
  const bool with_grad = ctx.mode != RecursionMode::Value;
  const bool independent = ctx.mode == RecursionMode::GradientIndependent;

  if (t == T) {
    ctx.count_leaf();
    NodeOut out;
    out.h = evaluate_integrand(problem, t, path.at(t), ctx.x);
    if (with_grad) out.g = integrand_jacobian(problem, t, path.at(t), ctx.x);
    return out;
  }

  const LevelDistribution& dist = ctx.config.levels[static_cast<std::size_t>(t) - 1];
  const int level = dist.sample(stream);
  const std::uint64_t n_child = std::uint64_t{1} << level;
  ctx.check_budget(n_child);

  const int d_t = problem.dims[static_cast<std::size_t>(t)];
  const int d = problem.decision_dim();
  const std::uint64_t half = n_child / 2;

  // Accumulate the 1-based-odd (child indices 0,2,...) and even (1,3,...)
  // sums separately; the full average is formed as their half-sum, which is
  // exactly the antithetic identity.
  Vector h_sum_odd = Vector::Zero(d_t);
  Vector h_sum_even = Vector::Zero(d_t);
  Vector h_sum_all;  // child-index order, probe only
  if (ctx.probe) h_sum_all = Vector::Zero(d_t);
  Matrix g_sum_odd, g_sum_even;
  if (with_grad) {
    g_sum_odd = Matrix::Zero(d, d_t);
    g_sum_even = Matrix::Zero(d, d_t);
  }

  for (std::uint64_t i = 0; i < n_child; ++i) {
    RngStream child_stream = stream.child(independent ? 2 * i : i);
    Vector xi = problem.samplers[static_cast<std::size_t>(t)](path, child_stream);
    path.push(xi);
    NodeOut child = mlmc_node(ctx, t + 1, path, child_stream);
    path.pop();

    Vector h_child = child.h;
    if (independent) {
      // The value argument chain comes from a second, independently sampled
      // child; the gradient average keeps the first child's G.
      RngStream value_stream = stream.child(2 * i + 1);
      Vector xi_v = problem.samplers[static_cast<std::size_t>(t)](path, value_stream);
      path.push(xi_v);
      h_child = value_only_child(ctx, t + 1, path, value_stream);
      path.pop();
    }

    if (ctx.probe) h_sum_all += h_child;
    if ((i & 1) == 0) {
      h_sum_odd += h_child;
      if (with_grad) g_sum_odd += child.g;
    } else {
      h_sum_even += h_child;
      if (with_grad) g_sum_even += child.g;
    }
  }

  const Vector& xi_t = path.at(t);
  const double q = dist.pmf(level);
  NodeOut out;

  if (level == 0) {
    // Single child: full average is the child itself, even/odd halves are
    // defined as zero, so the telescoping term is just the plug-in value.
    const Vector& h_full = h_sum_odd;
    out.h = evaluate_integrand(problem, t, xi_t, h_full) / q;
    if (with_grad) out.g = (g_sum_odd * integrand_jacobian(problem, t, xi_t, h_full)) / q;
    if (ctx.probe) {
      ++ctx.probe->nodes_with_children;
    }
    return out;
  }

  const double inv_half = 1.0 / static_cast<double>(half);
  Vector h_odd = h_sum_odd * inv_half;
  Vector h_even = h_sum_even * inv_half;
  Vector h_full = 0.5 * (h_odd + h_even);

  Vector a_full = evaluate_integrand(problem, t, xi_t, h_full);
  Vector a_even = evaluate_integrand(problem, t, xi_t, h_even);
  Vector a_odd = evaluate_integrand(problem, t, xi_t, h_odd);
  out.h = (a_full - 0.5 * a_even - 0.5 * a_odd) / q;

  if (with_grad) {
    Matrix g_odd = g_sum_odd * inv_half;
    Matrix g_even = g_sum_even * inv_half;
    Matrix g_full = 0.5 * (g_odd + g_even);
    Matrix gh_full = g_full * integrand_jacobian(problem, t, xi_t, h_full);
    Matrix gh_even = g_even * integrand_jacobian(problem, t, xi_t, h_even);
    Matrix gh_odd = g_odd * integrand_jacobian(problem, t, xi_t, h_odd);
    out.g = (gh_full - 0.5 * gh_even - 0.5 * gh_odd) / q;
    if (ctx.probe) {
      Matrix split = gh_full - 0.5 * gh_even - 0.5 * gh_odd;
      double gap = split.cwiseAbs().maxCoeff() / (1.0 + gh_full.cwiseAbs().maxCoeff());
      if (gap > ctx.probe->max_grad_split_gap) ctx.probe->max_grad_split_gap = gap;
    }
  }

  if (ctx.probe) {
    ++ctx.probe->nodes_with_children;
    if (static_cast<std::uint64_t>(level) > ctx.probe->max_level_seen)
      ctx.probe->max_level_seen = static_cast<std::uint64_t>(level);
    Vector identity_gap = h_full - (0.5 * h_even + 0.5 * h_odd);
    double gap = inf_norm(identity_gap);
    if (gap > ctx.probe->max_antithetic_gap) ctx.probe->max_antithetic_gap = gap;
    Vector direct = h_sum_all / static_cast<double>(n_child);
    double dgap = inf_norm(direct - h_full) / (1.0 + inf_norm(h_full));
    if (dgap > ctx.probe->max_direct_gap) ctx.probe->max_direct_gap = dgap;
  }
  return out;
}

}  // namespace detail

std::vector<std::string> MlmcConfig::check(int num_stages) const {
  if (n1 < 1) throw InvalidParams("n1 must be >= 1");
  if (static_cast<int>(levels.size()) != num_stages - 1)
    throw InvalidParams("expected " + std::to_string(num_stages - 1) + " level distributions, got " +
                        std::to_string(levels.size()));
  std::vector<std::string> warnings;
  for (std::size_t t = 0; t < levels.size(); ++t)
    if (levels[t].untruncated() && levels[t].rate <= 0.5)
      warnings.push_back("stage " + std::to_string(t + 1) + ": untruncated rate " +
                         std::to_string(levels[t].rate) + " <= 1/2 has infinite expected cost");
  return warnings;
}

namespace {

struct ForestResult {
  std::vector<double> values;          // per-tree scalar H_1
  std::vector<Vector> gradients;       // per-tree G_1 (gradient modes)
  std::vector<std::uint64_t> counts;   // per-tree paths
};

ForestResult run_forest(const MccoProblem& problem, const Vector& x, const MlmcConfig& config,
                        const RngStream& stream, detail::RecursionMode mode, MlmcProbe* probe) {
  config.check(problem.num_stages);
  if (x.size() != problem.decision_dim())
    throw DimensionMismatch(problem.num_stages,
                            "decision vector has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(problem.decision_dim()));

  ForestResult result;
  result.values.resize(config.n1);
  result.counts.resize(config.n1);
  if (mode != detail::RecursionMode::Value) result.gradients.resize(config.n1);

  std::atomic<std::uint64_t> shared_paths{0};
  std::mutex probe_mutex;
  int threads = config.threads > 0 ? config.threads : default_thread_count();

  parallel_for(static_cast<std::int64_t>(config.n1), threads, [&](std::int64_t i1) {
    detail::TreeProbe tree_probe;
    detail::TreeContext ctx{problem, x, config, mode, &shared_paths};
    if (probe) ctx.probe = &tree_probe;
    try {
      RngStream tree_stream = stream.child(static_cast<std::uint64_t>(i1));
      SamplePath path;
      Vector xi1 = problem.samplers[0](path, tree_stream);
      path.push(xi1);
      detail::NodeOut out = detail::mlmc_node(ctx, 1, path, tree_stream);
      result.values[static_cast<std::size_t>(i1)] = out.h(0);
      if (mode != detail::RecursionMode::Value)
        result.gradients[static_cast<std::size_t>(i1)] = out.g.col(0);
    } catch (const CostGuardExceeded&) {
      throw;
    } catch (const McCoError& e) {
      throw McCoError("tree " + std::to_string(i1) + ": " + e.what());
    }
    result.counts[static_cast<std::size_t>(i1)] = ctx.local_paths;
    shared_paths.fetch_add(ctx.local_paths, std::memory_order_relaxed);
    if (probe) {
      std::lock_guard<std::mutex> lock(probe_mutex);
      probe->max_antithetic_gap = std::max(probe->max_antithetic_gap, tree_probe.max_antithetic_gap);
      probe->max_direct_gap = std::max(probe->max_direct_gap, tree_probe.max_direct_gap);
      probe->max_grad_split_gap = std::max(probe->max_grad_split_gap, tree_probe.max_grad_split_gap);
      probe->nodes_with_children += tree_probe.nodes_with_children;
      probe->max_level_seen = std::max(probe->max_level_seen, tree_probe.max_level_seen);
    }
  });
  return result;
}

double expected_cost_or_inf(const MlmcConfig& config) {
  try {
    return expected_cost(config);
  } catch (const InfiniteCost&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

EstimateReport mlmc_value_estimate(const MccoProblem& problem, const Vector& x, const MlmcConfig& config,
                                   const RngStream& stream, MlmcProbe* probe) {
  ForestResult forest = run_forest(problem, x, config, stream, detail::RecursionMode::Value, probe);
  EstimateReport report;
  report.seed = stream.key();
  report.tree_values = std::move(forest.values);
  double sum = 0.0;
  for (double v : report.tree_values) sum += v;
  report.value = sum / static_cast<double>(config.n1);
  report.scenario_count = 0;
  for (std::uint64_t c : forest.counts) report.scenario_count += c;
  report.expected_cost = expected_cost_or_inf(config);
  return report;
}

GradientReport mlmc_gradient_estimate(const MccoProblem& problem, const Vector& x, const MlmcConfig& config,
                                      const RngStream& stream, MlmcProbe* probe) {
  validate_problem(problem, ValidateMode::Gradient);
  auto mode = config.independent_pair_samples ? detail::RecursionMode::GradientIndependent
                                              : detail::RecursionMode::Gradient;
  ForestResult forest = run_forest(problem, x, config, stream, mode, probe);
  GradientReport report;
  report.seed = stream.key();
  report.tree_values = std::move(forest.values);
  report.tree_gradients = std::move(forest.gradients);
  Vector sum = Vector::Zero(problem.decision_dim());
  for (const Vector& g : report.tree_gradients) sum += g;
  report.gradient = sum / static_cast<double>(config.n1);
  report.scenario_count = 0;
  for (std::uint64_t c : forest.counts) report.scenario_count += c;
  report.expected_cost = expected_cost_or_inf(config);
  return report;
}

double expected_cost(const MlmcConfig& config) {
  double cost = static_cast<double>(config.n1);
  for (const LevelDistribution& dist : config.levels) cost *= dist.mean_branch_factor();
  return cost;
}

std::vector<double> default_rates(int num_stages, bool smooth) {
  if (num_stages < 2) throw InvalidParams("rate defaults need at least two stages");
  std::vector<double> rates(static_cast<std::size_t>(num_stages - 1));
  for (int t = 1; t < num_stages; ++t)
    rates[static_cast<std::size_t>(t) - 1] = smooth ? 1.0 - std::pow(2.0, -1.0 - std::pow(2.0, -t)) : 0.5;
  return rates;
}

namespace {

double require_positive(const std::vector<double>& v, int t, const char* name) {
  if (t < 1 || t > static_cast<int>(v.size()))
    throw MissingConstant(std::string(name) + "_" + std::to_string(t) + " not supplied");
  double value = v[static_cast<std::size_t>(t) - 1];
  if (!(value > 0.0)) throw MissingConstant(std::string(name) + "_" + std::to_string(t) + " must be positive");
  return value;
}

double require_moment(const std::map<int, double>& m, int p, const char* name) {
  auto it = m.find(p);
  if (it == m.end())
    throw MissingConstant(std::string(name) + "^" + std::to_string(p) + " not supplied");
  if (!(it->second > 0.0))
    throw MissingConstant(std::string(name) + "^" + std::to_string(p) + " must be positive");
  return it->second;
}

double z_factor(double rate, int m) {
  return (1.0 - std::pow(1.0 - rate, m + 1)) / rate;
}

int stage_dim(const ProblemConstants& constants, int t) {
  if (constants.dims.empty()) return 1;
  if (t < 1 || t > static_cast<int>(constants.dims.size()))
    throw MissingConstant("stage dimension d_" + std::to_string(t) + " not supplied");
  return constants.dims[static_cast<std::size_t>(t) - 1];
}

}  // namespace

TruncationSchedule truncation_schedule(int num_stages, double epsilon, const ProblemConstants& constants,
                                       bool smooth, ScheduleMode mode) {
  if (!(epsilon > 0.0)) throw InvalidParams("tolerance must be positive");
  const int T = num_stages;
  if (T < 1) throw InvalidParams("need at least one stage");
  const bool highprob = mode.kind == ScheduleMode::Kind::HighProb;

  TruncationSchedule schedule;
  schedule.rates = T >= 2 ? default_rates(T, smooth) : std::vector<double>{};
  schedule.truncations.assign(static_cast<std::size_t>(std::max(T - 1, 0)), 0);

  const double mu2 = require_moment(constants.mu_bar, 2, "mu_bar");
  const double b2 = constants.b_constant(2);
  double mu_high = 1.0;
  if (smooth && T >= 2) mu_high = require_moment(constants.mu_bar, 1 << T, "mu_bar");

  // C_t and D_t from the conditional moment bounds; empty products are 1.
  auto c_const = [&](int t) {
    return mu2 * std::pow(2.0 * b2, T - t) * std::pow(constants.lip_product(t, T - 1), 2.0);
  };
  auto d_const = [&](int t) {
    double value = mu_high;
    for (int s = t; s <= T - 1; ++s) {
      double s_s = require_positive(constants.S, s, "S");
      double pw = std::pow(2.0, s);  // 2^s
      value *= std::pow(1.5 * s_s, pw) * std::pow(static_cast<double>(stage_dim(constants, s)), pw - 1.0) *
               constants.b_constant(1 << (s + 1));
    }
    return value;
  };

  for (int t = T - 1; t >= 1; --t) {
    double m_t;
    if (!smooth) {
      double lead = highprob ? 4.0 : std::sqrt(2.0);
      double tail = 1.0;
      for (int s = t + 1; s <= T - 1; ++s) {
        int m_s = schedule.truncations[static_cast<std::size_t>(s) - 1];
        tail *= std::sqrt(z_factor(schedule.rates[static_cast<std::size_t>(s) - 1], m_s)) *
                std::sqrt(static_cast<double>(m_s + 1));
      }
      double arg = lead * constants.lip_product(1, t) * std::sqrt(c_const(t + 1)) * tail * (T - 1) / epsilon;
      m_t = std::ceil(2.0 * std::log2(arg));
    } else {
      double s_t = require_positive(constants.S, t, "S");
      double pw_t = std::pow(2.0, t);
      double tail = 1.0;
      for (int s = t + 1; s <= T - 1; ++s) {
        int m_s = schedule.truncations[static_cast<std::size_t>(s) - 1];
        double pw_s = std::pow(2.0, s);
        double geo = (1.0 - std::pow(2.0, -(m_s + 1) / pw_s)) / (1.0 - std::pow(2.0, -1.0 / pw_s));
        tail *= std::pow(z_factor(schedule.rates[static_cast<std::size_t>(s) - 1], m_s), (pw_s - 1.0) / pw_t) *
                std::pow(geo, 1.0 / pw_t);
      }
      double lip = constants.lip_product(1, t - 1);
      double arg = lip * s_t * std::pow(d_const(t + 1), 1.0 / pw_t) * tail * (T - 1);
      arg *= highprob ? 2.0 / epsilon : std::sqrt(2.0) / (2.0 * epsilon);
      m_t = std::ceil(std::log2(arg));
    }
    schedule.truncations[static_cast<std::size_t>(t) - 1] = m_t < 0.0 ? 0 : static_cast<int>(m_t);
  }

  if (!highprob) {
    // Implied n_1 = ceil(2 mu_1^2 / eps^2) with mu_1^2 from the conditional
    // moment bound at the truncations just fixed.
    double mu1_sq;
    if (!smooth) {
      mu1_sq = c_const(1);
      for (int s = 1; s <= T - 1; ++s) {
        const LevelDistribution dist(schedule.rates[static_cast<std::size_t>(s) - 1],
                                     schedule.truncations[static_cast<std::size_t>(s) - 1]);
        double sum = 0.0;
        for (int l = 0; l <= *dist.truncation; ++l) sum += 1.0 / (std::pow(2.0, l) * dist.pmf(l));
        mu1_sq *= sum;
      }
    } else {
      double bound = d_const(1);
      for (int s = 1; s <= T - 1; ++s) {
        const LevelDistribution dist(schedule.rates[static_cast<std::size_t>(s) - 1],
                                     schedule.truncations[static_cast<std::size_t>(s) - 1]);
        double pw = std::pow(2.0, s);
        double sum = 0.0;
        for (int l = 0; l <= *dist.truncation; ++l)
          sum += 1.0 / (std::pow(2.0, pw * l) * std::pow(dist.pmf(l), pw - 1.0));
        bound *= sum;
      }
      // The lemma bounds the 2-nd moment through the 2^1-st at t=1.
      mu1_sq = bound;
    }
    schedule.n1 = static_cast<std::uint64_t>(std::ceil(2.0 * mu1_sq / (epsilon * epsilon)));
  } else {
    if (!constants.zeta2) throw MissingConstant("zeta2 (sub-Gaussian variance proxy) not supplied");
    if (!constants.D_X) throw MissingConstant("D_X (feasible-set diameter) not supplied");
    if (!constants.d) throw MissingConstant("d (decision dimension) not supplied");
    if (!constants.L_prime) throw MissingConstant("L_prime (estimator Lipschitz constant) not supplied");
    if (!(mode.beta > 0.0 && mode.beta < 1.0)) throw InvalidParams("beta must lie in (0,1)");
    double net = std::ceil(8.0 * *constants.L_prime * *constants.D_X / epsilon + 1.0);
    schedule.n1 = static_cast<std::uint64_t>(std::ceil(
        128.0 * *constants.zeta2 / (epsilon * epsilon) *
        (*constants.d * std::log(net) + std::log(4.0 / mode.beta))));
  }
  if (schedule.n1 < 1) schedule.n1 = 1;
  return schedule;
}

}  // namespace mcco
