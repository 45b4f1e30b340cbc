#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcco/problems.hpp"
#include "mcco/saa.hpp"
#include "toy_problems.hpp"

using namespace mcco;
using mcco::testing::scalar;

TEST_CASE("degenerate branching equals the single-path plug-in") {
  BuiltProblem synth = build_problem(SyntheticParams{});
  SaaConfig config;
  config.n = {1, 1, 1};
  RngStream stream(11);
  EstimateReport report = saa_estimate(synth.problem, synth.x0, config, stream);

  // Replay the one path by hand with the same stream discipline.
  RngStream tree = stream.child(0);
  SamplePath path;
  Vector xi1 = synth.problem.samplers[0](path, tree);
  path.push(xi1);
  RngStream c2 = tree.child(0);
  Vector xi2 = synth.problem.samplers[1](path, c2);
  path.push(xi2);
  RngStream c3 = c2.child(0);
  Vector xi3 = synth.problem.samplers[2](path, c3);
  double plug = std::sin(xi1(0) + std::sin(xi2(0) - xi3(0)));
  CHECK(report.value == doctest::Approx(plug).epsilon(1e-15));
  CHECK(report.scenario_count == 1);
}

TEST_CASE("scenario count is the exact product of branching factors") {
  BuiltProblem synth = build_problem(SyntheticParams{});
  SaaConfig config;
  config.n = {7, 3, 5};
  EstimateReport report = saa_estimate(synth.problem, synth.x0, config, RngStream(2));
  CHECK(report.scenario_count == 7 * 3 * 5);
  CHECK(report.tree_values.size() == 7);
  double mean = 0.0;
  for (double v : report.tree_values) mean += v;
  CHECK(report.value == doctest::Approx(mean / 7.0).epsilon(1e-15));
}

TEST_CASE("synthetic estimate lands near the closed form") {
  BuiltProblem synth = build_problem(SyntheticParams{});
  SaaConfig config;
  config.n = {20000, 15, 15};
  EstimateReport report = saa_estimate(synth.problem, synth.x0, config, RngStream(5));
  double truth = std::exp(-0.5);
  CHECK(std::abs(report.value - truth) < 3.0 * report.stderr_of_mean() + 5e-3);
}

TEST_CASE("one-stage estimator is unbiased against direct Monte Carlo") {
  // T = 1: the SAA estimator is a plain sample mean of f_1.
  MccoProblem chain = mcco::testing::linear_chain({3.0}, 1.0);
  Vector x = scalar(0.5);
  SaaConfig config;
  config.n = {10000};
  EstimateReport report = saa_estimate(chain, x, config, RngStream(8));
  // Truth: 3 * 0.5 + E[xi] = 1.5.
  CHECK(std::abs(report.value - 1.5) < 3.0 * report.stderr_of_mean());
}

TEST_CASE("estimates are deterministic and thread-count invariant") {
  BuiltProblem synth = build_problem(SyntheticParams{});
  SaaConfig one;
  one.n = {500, 4, 4};
  one.threads = 1;
  SaaConfig four = one;
  four.threads = 4;
  EstimateReport a = saa_estimate(synth.problem, synth.x0, one, RngStream(77));
  EstimateReport b = saa_estimate(synth.problem, synth.x0, four, RngStream(77));
  CHECK(a.value == b.value);
  CHECK(a.tree_values == b.tree_values);
  CHECK(a.scenario_count == b.scenario_count);
}

TEST_CASE("config and dimension errors are rejected") {
  BuiltProblem synth = build_problem(SyntheticParams{});
  SaaConfig wrong;
  wrong.n = {10, 10};
  CHECK_THROWS_AS(saa_estimate(synth.problem, synth.x0, wrong, RngStream(1)), InvalidParams);
  SaaConfig zero;
  zero.n = {10, 0, 10};
  CHECK_THROWS_AS(saa_estimate(synth.problem, synth.x0, zero, RngStream(1)), InvalidParams);
  SaaConfig ok;
  ok.n = {2, 2, 2};
  CHECK_THROWS_AS(saa_estimate(synth.problem, Vector::Zero(2), ok, RngStream(1)), DimensionMismatch);
}

TEST_CASE("mse schedule reproduces the plug-in sample sizes") {
  ProblemConstants constants;
  constants.sigma = {1.0};
  SaaConfig config = saa_schedule(1.0, constants, false, ScheduleMode::mse());
  CHECK(config.n[0] == 6);  // ceil(1 + 2 sqrt(2) + 2)

  // Nonsmooth T = 2 with unit constants at eps = 0.1.
  ProblemConstants two;
  two.sigma = {1.0, 1.0};
  two.L = {1.0, 1.0};
  SaaConfig nonsmooth = saa_schedule(0.1, two, false, ScheduleMode::mse());
  CHECK(nonsmooth.n[1] == 200);

  two.S = {1.0, 1.0};
  SaaConfig smooth = saa_schedule(0.1, two, true, ScheduleMode::mse());
  CHECK(smooth.n[1] == 8);
}

TEST_CASE("high-probability schedule needs the sub-Gaussian constants") {
  ProblemConstants constants;
  constants.sigma = {1.0, 1.0};
  constants.L = {1.0, 1.0};
  CHECK_THROWS_AS(saa_schedule(0.5, constants, false, ScheduleMode::highprob(0.05)), MissingConstant);
  constants.zeta2 = 1.0;
  constants.D_X = 1.0;
  constants.d = 2;
  SaaConfig config = saa_schedule(0.5, constants, false, ScheduleMode::highprob(0.05));
  // n_1 = ceil(128 zeta^2 / eps^2 (d log(ceil(8 L D/eps + 1)) + log(4/beta)))
  double expected = std::ceil(128.0 / 0.25 * (2.0 * std::log(17.0) + std::log(4.0 / 0.05)));
  CHECK(config.n[0] == static_cast<std::uint64_t>(expected));
  // n_t = ceil((4 L sigma (T-1) / eps)^2) = 64
  CHECK(config.n[1] == 64);
}

TEST_CASE("missing constants are named") {
  ProblemConstants constants;
  constants.sigma = {1.0, 1.0};
  try {
    saa_schedule(0.1, constants, false, ScheduleMode::mse());
    FAIL("expected MissingConstant");
  } catch (const MissingConstant& e) {
    CHECK(std::string(e.what()).find("L_1") != std::string::npos);
  }
}
