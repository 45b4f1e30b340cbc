#pragma once

#include <array>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "mcco/core.hpp"

namespace mcco {

// T = 3 toy with the known value exp(-1/2): f_1 = sin(xi_1 + x_1),
// f_2 = sin(xi_2 - x_2), f_3 = xi_3 on a Markov Gaussian chain started at
// N(pi/2, 1).
struct SyntheticParams {};

// Bermudan basket put on m equally weighted GBM assets with strike K,
// risk-free rate gamma, volatility sigma and T exercise dates.
struct BermudanParams {
  int assets = 5;
  double strike = 100.0;
  double gamma = 0.05;
  double sigma = 0.2;
  int dates = 4;
  double s0 = 100.0;
};

// Generic optimal stopping reduction: f_t = max{g_t(xi_t), discount * x_t},
// f_T = g_T. Programmatic only (payoffs and kernels are arbitrary functions).
struct StoppingParams {
  std::vector<std::function<double(const Vector&)>> payoffs;  // g_1..g_T
  std::vector<Sampler> samplers;
  std::vector<int> noise_dims;
  double discount = 1.0;
};

// Nested entropic risk of a sum of scalar costs with per-stage risk aversions
// mu_0..mu_{T-1}; the default kernels are independent Gaussians.
struct EntropicParams {
  std::vector<double> mu;     // size T
  std::vector<double> means;  // size T
  std::vector<double> sds;    // size T
};

// Linear-quadratic regulator reduced to a nest over the Q-function
// coefficient vector x_t = (Q^ss, Q^sa, Q^aa, b^s, b^a, c) of dimension
// m^2 + mn + n^2 + m + n + 1. Default kernels: deterministic s0 at stage 1,
// i.i.d. N(0, noise_cov) afterwards; custom history-dependent kernels may be
// supplied programmatically.
struct LqrParams {
  Matrix A, B, Q, R, P_T;
  Matrix noise_cov;
  Vector s0;
  int horizon = 2;  // T
  std::vector<Sampler> custom_kernels;  // optional, size T when present
};

// Distributionally robust contextual bandit (T = 3) over the 1440-point
// context grid, softmax temperature mu, ambiguity radii r_c and r_y,
// log-normal costs with covariance cost_cov, decision x = (theta_1, theta_2,
// lambda) in [0,1]^2 x [0, lambda_max].
struct BanditsParams {
  double mu = 2.0;
  double r_c = 0.4;
  double r_y = 0.15;
  double lambda_max = 100.0;
  Matrix cost_cov;  // defaults to [[5, 2.5], [2.5, 5]]
  // Optional replacement for the conditional cost means E[y|c] (tests use
  // this to create symmetric instances).
  std::function<std::array<double, 2>(const std::array<int, 6>&)> mean_override;
};

using AdapterParams = std::variant<SyntheticParams, BermudanParams, StoppingParams, EntropicParams,
                                   LqrParams, BanditsParams>;

struct BuiltProblem {
  MccoProblem problem;
  Vector x0;  // default evaluation / initial point
};

// Builds and validates the adapter; throws InvalidParams with a reason.
BuiltProblem build_problem(const AdapterParams& params);

// --- Independent analytic oracles -----------------------------------------

struct BanditsTruth {
  double lambda = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double value = 0.0;
  bool lambda_at_bound = false;  // set when the dual direction is unbounded
};

// Exact objective by enumeration over the finite context space with the
// log-normal conditional means in closed form, minimized by a damped Newton
// method to tolerance 1e-6.
BanditsTruth bandits_ground_truth(const BanditsParams& params);

// Exact bandit objective at a given decision (enumeration, no sampling).
double bandits_exact_objective(const BanditsParams& params, const Vector& x);

// Riccati-style evaluation of E[min_a Q_1(xi_1, a)] for i.i.d. zero-mean
// Gaussian noise of covariance noise_cov and deterministic s0.
double lqr_exact_value(const LqrParams& params);

// Gaussian closed form exp(mu * sum_t (-mean_t + mu var_t / 2)); requires a
// constant risk aversion across stages.
double entropic_exact_value(const EntropicParams& params);

// Context helpers shared with the experiments (1440 = 3*5*2*2*6*4 grid).
namespace bandit_grid {
constexpr int kContextCount = 1440;
std::array<int, 6> decode(int index);
std::array<double, 2> cost_means(const std::array<int, 6>& c);
}  // namespace bandit_grid

}  // namespace mcco
