#pragma once

#include <cstdint>
#include <optional>

#include "mcco/errors.hpp"

namespace mcco {

// Splittable counter-based random stream. A stream is identified by a 64-bit
// key; draws hash (key, counter) and never touch shared state, so streams can
// be handed to different workers and results do not depend on scheduling.
// Child streams are derived from the key alone: derive(s, i) yields the same
// stream no matter how many draws the parent has consumed.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed);

  // Deterministic child derivation; distinct indices give distinct keys.
  RngStream child(std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t key() const { return key_; }

 private:
  RngStream(std::uint64_t key, int /*tag*/) : key_(key), counter_(0) {}

  std::uint64_t key_;
  std::uint64_t counter_;
};

// Truncated (or untruncated) geometric law for the log-branching factors.
// pmf q(l) = r(1-r)^l / (1-(1-r)^{M+1}) for l = 0..M; untruncated when M is
// absent, with q(l) = r(1-r)^l.
struct LevelDistribution {
  double rate = 0.5;
  std::optional<int> truncation;  // M; nullopt = untruncated

  LevelDistribution() = default;
  LevelDistribution(double r, std::optional<int> m);

  bool untruncated() const { return !truncation.has_value(); }

  // q(l); throws OutOfSupport outside [0, M].
  double pmf(int level) const;

  // Inverse-CDF sample. Untruncated draws above the hard safety cap (l = 62,
  // keeping 2^l in machine range) abort the run instead of silently
  // truncating, which would bias the estimator.
  int sample(RngStream& rng) const;

  // E[2^lambda]; closed form per stage. Throws InfiniteCost for an
  // untruncated stage with r <= 1/2.
  double mean_branch_factor() const;

  static constexpr int kLevelCap = 62;
};

}  // namespace mcco
