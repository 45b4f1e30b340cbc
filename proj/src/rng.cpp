#include "mcco/rng.hpp"

#include <cmath>
#include <string>

namespace mcco {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Finalizer from SplitMix64 (Stafford variant 13); bijective on 64 bits.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed ^ kGolden)), counter_(0) {}

RngStream RngStream::child(std::uint64_t index) const {
  // For a fixed parent key the map index -> child key is injective:
  // index*kGolden+1 is a bijection mod 2^64 (kGolden odd) and mix64 is one too.
  std::uint64_t child_key = mix64(key_ ^ mix64(index * kGolden + 1));
  return RngStream(child_key, 0);
}

std::uint64_t RngStream::next_u64() {
  return mix64(key_ + (++counter_) * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // Box-Muller, cosine branch only. u1 is kept away from 0.
  double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

LevelDistribution::LevelDistribution(double r, std::optional<int> m) : rate(r), truncation(m) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidParams("level rate must lie in (0,1), got " + std::to_string(r));
  if (m && *m < 0) throw InvalidParams("truncation point must be >= 0");
}

double LevelDistribution::pmf(int level) const {
  if (level < 0 || (truncation && level > *truncation))
    throw OutOfSupport("level " + std::to_string(level) + " outside support");
  double q = rate * std::pow(1.0 - rate, level);
  if (truncation) q /= 1.0 - std::pow(1.0 - rate, *truncation + 1);
  return q;
}

int LevelDistribution::sample(RngStream& rng) const {
  if (truncation && *truncation == 0) return 0;
  double u = rng.uniform();
  double log1mr = std::log1p(-rate);
  int level;
  if (truncation) {
    // Smallest l with (1-(1-r)^{l+1})/(1-(1-r)^{M+1}) >= u.
    double norm = 1.0 - std::pow(1.0 - rate, *truncation + 1);
    level = static_cast<int>(std::floor(std::log1p(-u * norm) / log1mr));
    if (level > *truncation) level = *truncation;  // guard against rounding
  } else {
    level = static_cast<int>(std::floor(std::log1p(-u) / log1mr));
    if (level > kLevelCap)
      throw CostGuardExceeded("untruncated level draw " + std::to_string(level) +
                              " exceeds the hard cap of 62; 2^level is out of machine range");
  }
  return level < 0 ? 0 : level;
}

double LevelDistribution::mean_branch_factor() const {
  double g = 2.0 * (1.0 - rate);
  if (!truncation) {
    if (rate <= 0.5)
      throw InfiniteCost("untruncated stage with rate " + std::to_string(rate) +
                         " <= 1/2 has infinite expected cost");
    return rate / (2.0 * rate - 1.0);  // sum r(1-r)^l 2^l = r/(2r-1)
  }
  int m = *truncation;
  double norm = 1.0 - std::pow(1.0 - rate, m + 1);
  double series = (std::abs(g - 1.0) < 1e-14) ? static_cast<double>(m + 1)
                                              : (std::pow(g, m + 1) - 1.0) / (g - 1.0);
  return rate / norm * series;
}

}  // namespace mcco
