#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcco/core.hpp"
#include "mcco/problems.hpp"
#include "toy_problems.hpp"

using namespace mcco;
using mcco::testing::scalar;

namespace {

MccoProblem three_stage_toy() { return mcco::testing::linear_chain({1.0, 1.0, 1.0}); }

// Central finite difference of the transposed Jacobian.
Matrix fd_jacobian(const MccoProblem& p, int t, const Vector& xi, const Vector& x, double h = 1e-5) {
  const int d_t = p.dims[static_cast<std::size_t>(t)];
  const int d_prev = p.dims[static_cast<std::size_t>(t) - 1];
  Matrix jac(d_t, d_prev);
  for (int i = 0; i < d_t; ++i) {
    Vector hi = x, lo = x;
    hi(i) += h;
    lo(i) -= h;
    jac.row(i) = ((evaluate_integrand(p, t, xi, hi) - evaluate_integrand(p, t, xi, lo)) / (2.0 * h)).transpose();
  }
  return jac;
}

}  // namespace

TEST_CASE("well-formed problem validates") {
  MccoProblem p = three_stage_toy();
  CHECK(p.dims == std::vector<int>{1, 1, 1, 1});
  CHECK_NOTHROW(validate_problem(p));
}

TEST_CASE("d_0 must equal one") {
  MccoProblem p = three_stage_toy();
  p.dims[0] = 2;
  try {
    validate_problem(p);
    FAIL("expected DimensionMismatch");
  } catch (const DimensionMismatch& e) {
    CHECK(e.stage() == 0);
  }
}

TEST_CASE("transposed Jacobian shape is rejected at its stage") {
  LqrParams lqr;
  lqr.A = Matrix::Identity(2, 2);
  lqr.B = Matrix::Identity(2, 2);
  lqr.Q = Matrix::Identity(2, 2);
  lqr.R = Matrix::Identity(2, 2);
  lqr.P_T = Matrix::Identity(2, 2);
  lqr.noise_cov = Matrix::Zero(2, 2);
  lqr.s0 = Vector::Ones(2);
  lqr.horizon = 2;
  MccoProblem p = build_problem(lqr).problem;
  // Sabotage stage 2: return the d_{t-1} x d_t transpose instead.
  auto good = p.integrands[1].jacobian;
  p.integrands[1].jacobian = [good](const Vector& xi, const Vector& x) {
    return Matrix(good(xi, x).transpose().eval());
  };
  try {
    validate_problem(p);
    FAIL("expected DimensionMismatch");
  } catch (const DimensionMismatch& e) {
    CHECK(e.stage() == 2);
  }
}

TEST_CASE("missing evaluators are named") {
  MccoProblem p = three_stage_toy();
  p.integrands[1].value = nullptr;
  CHECK_THROWS_AS(validate_problem(p), MissingStage);
  MccoProblem q = three_stage_toy();
  q.samplers[2] = nullptr;
  CHECK_THROWS_AS(validate_problem(q), MissingStage);
}

TEST_CASE("gradient validation refuses nonsmooth stages") {
  MccoProblem p = three_stage_toy();
  CHECK_NOTHROW(validate_problem(p, ValidateMode::Gradient));
  p.integrands[2].smooth = false;
  CHECK_THROWS_AS(validate_problem(p, ValidateMode::Gradient), NotDifferentiable);
}

TEST_CASE("integrand evaluation matches the adapters' closed forms") {
  // Synthetic stage 2: argument cancellation.
  BuiltProblem synth = build_problem(SyntheticParams{});
  Vector value = evaluate_integrand(synth.problem, 2, scalar(M_PI / 2.0), scalar(M_PI / 2.0));
  CHECK(value(0) == doctest::Approx(0.0).epsilon(1e-15));

  // Bermudan terminal payoff at the money.
  BuiltProblem berm = build_problem(BermudanParams{});
  Vector at_money = evaluate_integrand(berm.problem, 4, Vector::Constant(5, 100.0), scalar(0.0));
  CHECK(at_money(0) == 0.0);
  Vector in_money = evaluate_integrand(berm.problem, 4, Vector::Constant(5, 90.0), scalar(0.0));
  CHECK(in_money(0) == doctest::Approx(10.0));

  // Stopping stage: max of payoff and continuation at discount one.
  StoppingParams stopping;
  stopping.discount = 1.0;
  stopping.noise_dims = {1, 1};
  stopping.payoffs = {[](const Vector&) { return 3.0; }, [](const Vector&) { return 3.0; }};
  stopping.samplers = {[](const SamplePath&, RngStream& rng) { return scalar(rng.normal()); },
                       [](const SamplePath&, RngStream& rng) { return scalar(rng.normal()); }};
  BuiltProblem stop = build_problem(stopping);
  CHECK(evaluate_integrand(stop.problem, 1, scalar(0.0), scalar(5.0))(0) == doctest::Approx(5.0));
}

TEST_CASE("integrand shape errors carry the stage") {
  MccoProblem p = three_stage_toy();
  CHECK_THROWS_AS(evaluate_integrand(p, 2, Vector::Zero(2), scalar(0.0)), DimensionMismatch);
  CHECK_THROWS_AS(evaluate_integrand(p, 4, scalar(0.0), scalar(0.0)), MissingStage);
}

TEST_CASE("jacobians match hand values") {
  // Linear scalar integrand f = 2x + xi.
  MccoProblem lin = mcco::testing::linear_chain({2.0});
  CHECK(integrand_jacobian(lin, 1, scalar(0.3), scalar(1.1))(0, 0) == doctest::Approx(2.0));

  // Bandit stage 1: d log(x)/mu / dx = 1/(mu x).
  BuiltProblem bandits = build_problem(BanditsParams{});
  Matrix jac = integrand_jacobian(bandits.problem, 1, Vector::Zero(6), scalar(1.0));
  CHECK(jac(0, 0) == doctest::Approx(0.5));

  MccoProblem nonsmooth = three_stage_toy();
  nonsmooth.integrands[0].smooth = false;
  CHECK_THROWS_AS(integrand_jacobian(nonsmooth, 1, scalar(0.0), scalar(0.0)), NotDifferentiable);
}

TEST_CASE("finite differences confirm every smooth adapter Jacobian") {
  RngStream rng(2371);
  BuiltProblem synth = build_problem(SyntheticParams{});
  for (int t = 1; t <= 3; ++t) {
    Vector xi = scalar(rng.normal());
    Vector x = scalar(0.3 * rng.normal());
    Matrix analytic = integrand_jacobian(synth.problem, t, xi, x);
    Matrix fd = fd_jacobian(synth.problem, t, xi, x);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + fd.cwiseAbs().maxCoeff()));
  }

  EntropicParams entropic{{0.8, 0.6, 0.9}, {0.0, 0.0, 0.0}, {0.4, 0.4, 0.4}};
  BuiltProblem ent = build_problem(entropic);
  for (int t = 1; t <= 2; ++t) {
    Vector xi = scalar(0.2 * rng.normal());
    Vector x = scalar(1.0 + 0.2 * rng.uniform());
    Matrix analytic = integrand_jacobian(ent.problem, t, xi, x);
    Matrix fd = fd_jacobian(ent.problem, t, xi, x);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + fd.cwiseAbs().maxCoeff()));
  }

  BuiltProblem bandit_built = build_problem(BanditsParams{});
  {
    SamplePath path;
    RngStream s1 = rng.child(1), s2 = rng.child(2), s3 = rng.child(3);
    path.push(bandit_built.problem.samplers[0](path, s1));
    path.push(bandit_built.problem.samplers[1](path, s2));
    Vector xi3 = bandit_built.problem.samplers[2](path, s3);
    Vector x(3);
    x << 0.4, 0.7, 2.0;
    Matrix analytic = integrand_jacobian(bandit_built.problem, 3, xi3, x);
    Matrix fd = fd_jacobian(bandit_built.problem, 3, xi3, x);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + fd.cwiseAbs().maxCoeff()));
  }

  // LQR at generic (invertible) coefficients, all stages.
  LqrParams lqr;
  lqr.A = Matrix::Identity(2, 2);
  lqr.A(0, 1) = 0.3;
  lqr.B = Matrix::Zero(2, 1);
  lqr.B(0, 0) = 1.0;
  lqr.B(1, 0) = 0.5;
  lqr.Q = Matrix::Identity(2, 2);
  lqr.R = Matrix::Identity(1, 1);
  lqr.P_T = Matrix::Identity(2, 2);
  lqr.noise_cov = 0.25 * Matrix::Identity(2, 2);
  lqr.s0 = Vector::Ones(2);
  lqr.horizon = 3;
  BuiltProblem built = build_problem(lqr);
  const int d = built.problem.decision_dim();
  Vector generic = built.problem.probe_points[0];
  for (int i = 0; i < d; ++i) generic(i) += 0.05 * rng.normal();
  for (int t = 1; t <= 3; ++t) {
    Vector xi(2);
    xi << rng.normal(), rng.normal();
    Matrix analytic = integrand_jacobian(built.problem, t, xi, generic);
    Matrix fd = fd_jacobian(built.problem, t, xi, generic, 1e-6);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + fd.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("dimension chain holds on every shipped adapter") {
  RngStream rng(99);
  std::vector<BuiltProblem> adapters;
  adapters.push_back(build_problem(SyntheticParams{}));
  adapters.push_back(build_problem(BermudanParams{}));
  adapters.push_back(build_problem(EntropicParams{{1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}}));
  adapters.push_back(build_problem(BanditsParams{}));
  {
    LqrParams lqr;
    lqr.A = Matrix::Identity(2, 2);
    lqr.B = Matrix::Identity(2, 2);
    lqr.Q = Matrix::Identity(2, 2);
    lqr.R = Matrix::Identity(2, 2);
    lqr.P_T = Matrix::Identity(2, 2);
    lqr.noise_cov = 0.1 * Matrix::Identity(2, 2);
    lqr.s0 = Vector::Ones(2);
    lqr.horizon = 3;
    adapters.push_back(build_problem(lqr));
  }
  for (auto& built : adapters) {
    const MccoProblem& p = built.problem;
    SamplePath path;
    for (int t = 1; t <= p.num_stages; ++t) {
      RngStream stage = rng.child(static_cast<std::uint64_t>(t));
      Vector xi = p.samplers[static_cast<std::size_t>(t) - 1](path, stage);
      CHECK(xi.size() == p.noise_dims[static_cast<std::size_t>(t) - 1]);
      path.push(xi);
      Vector arg = p.probe_points.empty() ? Vector(Vector::Ones(p.dims[static_cast<std::size_t>(t)]))
                                          : p.probe_points[static_cast<std::size_t>(t) - 1];
      Vector out = evaluate_integrand(p, t, xi, arg);
      CHECK(out.size() == p.dims[static_cast<std::size_t>(t) - 1]);
      if (p.integrands[static_cast<std::size_t>(t) - 1].jacobian) {
        Matrix jac = integrand_jacobian(p, t, xi, arg);
        CHECK(jac.rows() == p.dims[static_cast<std::size_t>(t)]);
        CHECK(jac.cols() == p.dims[static_cast<std::size_t>(t) - 1]);
      }
    }
  }
}

TEST_CASE("box projection clamps, is idempotent and nonexpansive") {
  Vector lo = Vector::Zero(2), hi = Vector::Ones(2);
  FeasibleSet box = FeasibleSet::box(lo, hi);
  Vector x(2);
  x << 1.5, -0.3;
  Vector projected = project(box, x);
  CHECK(projected(0) == 1.0);
  CHECK(projected(1) == 0.0);

  Vector interior(2);
  interior << 0.5, 0.5;
  CHECK(project(box, interior) == interior);
  Vector boundary(2);
  boundary << 1.0, 0.25;
  CHECK(project(box, boundary) == boundary);
  CHECK(project(box, projected) == projected);

  RngStream rng(31);
  for (int i = 0; i < 200; ++i) {
    Vector a(2), b(2);
    a << 3.0 * rng.normal(), 3.0 * rng.normal();
    b << 3.0 * rng.normal(), 3.0 * rng.normal();
    CHECK((project(box, a) - project(box, b)).norm() <= (a - b).norm() + 1e-15);
  }

  CHECK_THROWS_AS(project(box, Vector::Zero(3)), DimensionMismatch);
}

TEST_CASE("evaluators are pure") {
  BuiltProblem synth = build_problem(SyntheticParams{});
  Vector xi = scalar(0.37), x = scalar(-0.8);
  Vector first = evaluate_integrand(synth.problem, 1, xi, x);
  Vector second = evaluate_integrand(synth.problem, 1, xi, x);
  CHECK(first == second);
}
