#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mcco/rng.hpp"

using namespace mcco;

TEST_CASE("level pmf matches the truncated geometric closed form") {
  LevelDistribution dist(0.5, 1);
  CHECK(dist.pmf(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(dist.pmf(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(dist.pmf(2), OutOfSupport);
  CHECK_THROWS_AS(dist.pmf(-1), OutOfSupport);

  LevelDistribution paper(0.59, 9);
  double sum = 0.0;
  for (int l = 0; l <= 9; ++l) sum += paper.pmf(l);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("pmf normalizes to one on a grid of rates and truncations") {
  for (double r = 0.01; r < 1.0; r += 0.07) {
    for (int m = 0; m <= 20; ++m) {
      LevelDistribution dist(r, m);
      double sum = 0.0;
      for (int l = 0; l <= m; ++l) sum += dist.pmf(l);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("degenerate truncation always samples level zero") {
  LevelDistribution dist(0.3, 0);
  RngStream rng(7);
  for (int i = 0; i < 100; ++i) CHECK(dist.sample(rng) == 0);
}

TEST_CASE("sampled levels pass a chi-squared test against the pmf") {
  LevelDistribution dist(0.5, 3);
  RngStream rng(42);
  const int draws = 1000000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(dist.sample(rng))];
  double chi2 = 0.0;
  for (int l = 0; l <= 3; ++l) {
    double expected = draws * dist.pmf(l);
    double diff = counts[static_cast<std::size_t>(l)] - expected;
    chi2 += diff * diff / expected;
  }
  // 3 degrees of freedom at alpha = 0.01.
  CHECK(chi2 < 11.345);
}

TEST_CASE("near-one rate concentrates the untruncated law at zero") {
  LevelDistribution dist(0.999, std::nullopt);
  RngStream rng(3);
  double mean = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) mean += dist.sample(rng);
  mean /= draws;
  CHECK(mean < 0.01);
}

TEST_CASE("empirical branch factor matches the closed form within one percent") {
  for (auto [r, m] : std::vector<std::pair<double, std::optional<int>>>{
           {0.59, 9}, {0.6464466094067263, 6}, {0.74, std::nullopt}}) {
    LevelDistribution dist(r, m);
    RngStream rng(17);
    double mean = 0.0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i) mean += std::pow(2.0, dist.sample(rng));
    mean /= draws;
    CHECK(std::abs(mean - dist.mean_branch_factor()) < 0.01 * dist.mean_branch_factor());
  }
}

TEST_CASE("untruncated cost factor rejects rates at or below one half") {
  CHECK_THROWS_AS(LevelDistribution(0.5, std::nullopt).mean_branch_factor(), InfiniteCost);
  CHECK(LevelDistribution(0.5001, std::nullopt).mean_branch_factor() == doctest::Approx(2500.5).epsilon(1e-10));
}

TEST_CASE("streams are deterministic and siblings decorrelated") {
  RngStream a = RngStream(99).child(4);
  RngStream b = RngStream(99).child(4);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  // Distinct child indices give distinct keys.
  RngStream parent(123);
  CHECK(parent.child(0).key() != parent.child(1).key());
  CHECK(parent.child(1).key() != parent.child(2).key());

  // Sample correlation of sibling normal draws stays near zero.
  RngStream left = parent.child(0);
  RngStream right = parent.child(1);
  const int n = 10000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double x = left.normal();
    double y = right.normal();
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  double corr = (sxy - sx * sy / n) / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
  CHECK(std::abs(corr) < 0.03);
}

TEST_CASE("derivation depends on the key, not the counter position") {
  RngStream a(5);
  RngStream b(5);
  b.uniform();  // advance the parent
  CHECK(a.child(7).key() == b.child(7).key());
}

TEST_CASE("uniform and normal draws look sane") {
  RngStream rng(2024);
  const int n = 200000;
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = rng.normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
