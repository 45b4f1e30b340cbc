#pragma once

#include <vector>

#include "mcco/core.hpp"
#include "mcco/mlmc.hpp"
#include "mcco/report.hpp"

namespace mcco {

// Coupled MLMC estimator of the gradient of F. Value and gradient pairs
// (H_t, G_t) are propagated on shared samples: at each node the children are
// sampled once, and the stage composition is
//   g^l = E^l[G_{t+1}] * nabla_{x_t} f_t(xi_t, E^l[H_{t+1}]),
// analogously for the even/odd splits. Per-tree H_1 values are bitwise
// identical to a value-only run under the same seed and config.
GradientReport mlmc_gradient_estimate(const MccoProblem& problem, const Vector& x, const MlmcConfig& config,
                                      const RngStream& stream, MlmcProbe* probe = nullptr);

// Admissible rate interval per stage for the untruncated gradient estimator
// (finite variance and finite expected cost simultaneously), plus the
// midpoint default. rho lists the Hoelder exponents rho_1..rho_{T-1}.
struct RateWindow {
  double lower = 0.5;
  double upper = 1.0;
  double midpoint() const { return 0.5 * (lower + upper); }
};

std::vector<RateWindow> grad_rate_window(int num_stages, const std::vector<double>& rho);

}  // namespace mcco
