#pragma once

// Hand-built toy problems with known answers, shared by the unit and
// acceptance suites. These are oracles: they stay independent of the adapter
// implementations they help check.

#include <cmath>

#include "mcco/core.hpp"

namespace mcco::testing {

inline Vector scalar(double v) {
  Vector out(1);
  out(0) = v;
  return out;
}

inline Matrix scalar_matrix(double v) {
  Matrix out(1, 1);
  out(0, 0) = v;
  return out;
}

// Linear chain f_t(xi, x) = a_t x + xi with independent N(0, sd^2) noise.
// F(x) = (prod a_t) x, gradient prod a_t; both SAA and MLMC are exactly
// unbiased for it at any truncation.
inline MccoProblem linear_chain(const std::vector<double>& a, double noise_sd = 1.0) {
  const int T = static_cast<int>(a.size());
  MccoProblem p;
  p.num_stages = T;
  p.dims.assign(static_cast<std::size_t>(T) + 1, 1);
  p.noise_dims.assign(static_cast<std::size_t>(T), 1);
  for (int t = 0; t < T; ++t) {
    double a_t = a[static_cast<std::size_t>(t)];
    p.samplers.push_back(
        [noise_sd](const SamplePath&, RngStream& rng) { return scalar(rng.normal(0.0, noise_sd)); });
    p.integrands.push_back({[a_t](const Vector& xi, const Vector& x) { return scalar(a_t * x(0) + xi(0)); },
                            [a_t](const Vector&, const Vector&) { return scalar_matrix(a_t); }, true});
  }
  p.feasible_set = FeasibleSet::box(scalar(-10.0), scalar(10.0));
  return p;
}

// T = 2 toy on a linear-Gaussian chain with a quadratic outer integrand:
// f_1 = x_1^2 + xi_1, f_2 = xi_2 + x. E[SAA with n_2 children] =
// F(x) + Var(xi_2) / n_2; the MLMC estimator truncated at M is an unbiased
// estimator of the SAA estimator with branching 2^M.
inline MccoProblem quadratic_two_stage(double slope = 0.7) {
  MccoProblem p;
  p.num_stages = 2;
  p.dims = {1, 1, 1};
  p.noise_dims = {1, 1};
  p.samplers = {
      [](const SamplePath&, RngStream& rng) { return scalar(rng.normal(0.0, 1.0)); },
      [slope](const SamplePath& h, RngStream& rng) { return scalar(rng.normal(slope * h.at(1)(0), 1.0)); },
  };
  p.integrands = {
      {[](const Vector& xi, const Vector& x) { return scalar(x(0) * x(0) + xi(0)); },
       [](const Vector&, const Vector& x) { return scalar_matrix(2.0 * x(0)); }, true},
      {[](const Vector& xi, const Vector& x) { return scalar(xi(0) + x(0)); },
       [](const Vector&, const Vector&) { return scalar_matrix(1.0); }, true},
  };
  p.feasible_set = FeasibleSet::box(scalar(-10.0), scalar(10.0));
  return p;
}

// T = 2 chain whose gradient estimator has zero level contributions beyond
// the base level: f_2 affine in x, nabla f_1 affine in x_1.
inline MccoProblem affine_gradient_two_stage() {
  MccoProblem p;
  p.num_stages = 2;
  p.dims = {1, 1, 1};
  p.noise_dims = {1, 1};
  p.samplers = {
      [](const SamplePath&, RngStream& rng) { return scalar(rng.normal(0.0, 1.0)); },
      [](const SamplePath& h, RngStream& rng) { return scalar(rng.normal(h.at(1)(0), 1.0)); },
  };
  p.integrands = {
      {[](const Vector& xi, const Vector& x) { return scalar(x(0) * x(0) + xi(0) * x(0)); },
       [](const Vector& xi, const Vector& x) { return scalar_matrix(2.0 * x(0) + xi(0)); }, true},
      {[](const Vector& xi, const Vector& x) { return scalar(3.0 * x(0) + xi(0)); },
       [](const Vector&, const Vector&) { return scalar_matrix(3.0); }, true},
  };
  p.feasible_set = FeasibleSet::box(scalar(-10.0), scalar(10.0));
  return p;
}

}  // namespace mcco::testing
