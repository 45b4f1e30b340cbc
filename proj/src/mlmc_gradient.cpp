#include "mcco/mlmc_gradient.hpp"

#include <cmath>
#include <string>

namespace mcco {

std::vector<RateWindow> grad_rate_window(int num_stages, const std::vector<double>& rho) {
  const int T = num_stages;
  if (T < 2) throw InvalidParams("rate windows need at least two stages");
  if (static_cast<int>(rho.size()) != T - 1)
    throw InvalidParams("expected " + std::to_string(T - 1) + " Hoelder exponents, got " +
                        std::to_string(rho.size()));

  std::vector<RateWindow> windows(static_cast<std::size_t>(T - 1));
  for (int t = 1; t <= T - 1; ++t) {
    double rho_t = rho[static_cast<std::size_t>(t) - 1];
    double rho_prev = t == 1 ? 0.0 : rho[static_cast<std::size_t>(t) - 2];  // rho_0 = 0
    double lower_bound = 1.0 - std::pow(2.0, 1 - t);
    if (!(rho_t > lower_bound && rho_t <= 1.0))
      throw EmptyWindow("rho_" + std::to_string(t) + " = " + std::to_string(rho_t) +
                        " violates (" + std::to_string(lower_bound) + ", 1]");
    double pw = std::pow(2.0, t);
    double first = 1.0 - std::pow(2.0, -(pw / 2.0) * (rho_t + 1.0) / (pw - 1.0));
    double second = 1.0 - std::pow(2.0, -pw * (rho_prev + 1.0) / (pw * (rho_prev + 1.0) - 1.0));
    double upper = std::min(first, second);
    if (!(upper > 0.5))
      throw EmptyWindow("stage " + std::to_string(t) + ": admissible rate window is empty");
    windows[static_cast<std::size_t>(t) - 1] = RateWindow{0.5, upper};
  }
  return windows;
}

}  // namespace mcco
