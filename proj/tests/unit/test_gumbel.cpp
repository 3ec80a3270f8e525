#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "perturbmax/bounds.hpp"
#include "perturbmax/gumbel.hpp"

using namespace perturbmax;

TEST_CASE("inverse CDF identity") {
  CHECK(gumbel_from_uniform(std::exp(-1.0)) == doctest::Approx(-kEulerGamma).epsilon(1e-15));
  CHECK(kEulerGamma == doctest::Approx(0.5772156649015329).epsilon(1e-16));
  for (double t : {-2.0, 0.0, 1.5}) CHECK(gumbel_from_uniform(gumbel_cdf(t)) == doctest::Approx(t).epsilon(1e-12));
}

TEST_CASE("uniform guard keeps draws finite") {
  CHECK(std::isfinite(gumbel_from_uniform(kUnitGuard)));
  CHECK(std::isfinite(gumbel_from_uniform(1.0 - kUnitGuard)));
}

TEST_CASE("moments and distribution of 10^6 draws") {
  CounterRng rng(stream_key({1234}));
  const std::size_t N = 1000000;
  std::vector<double> x(N);
  double mean = 0.0;
  for (auto& v : x) mean += (v = sample_gumbel(rng));
  mean /= N;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= (N - 1);
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(var - kGumbelVariance) < 0.02);

  // Kolmogorov-Smirnov on the first 10^5 draws.
  std::vector<double> head(x.begin(), x.begin() + 100000);
  std::sort(head.begin(), head.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < head.size(); ++i) {
    const double F = gumbel_cdf(head[i]);
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / head.size()), std::abs(F - static_cast<double>(i + 1) / head.size())});
  }
  CHECK(ks < 0.01);
}

TEST_CASE("perturbation sets") {
  const auto m = testing::glass(2, 3, 1, 1, 0);
  const auto singles = sample_perturbation(m, singleton_subsets(6), 9, 4);
  CHECK(singles.value_count() == 12);
  CHECK(singles.singletons_only());
  const auto full = sample_perturbation(m, full_subset(6), 9, 4);
  CHECK(full.value_count() == 64);
  CHECK_FALSE(full.singletons_only());

  const auto again = sample_perturbation(m, singleton_subsets(6), 9, 4);
  CHECK(again.tables == singles.tables);
  const auto other = sample_perturbation(m, singleton_subsets(6), 9, 5);
  CHECK(other.tables != singles.tables);

  const Configuration x = {1, 0, 1, 1, 0, 0};
  double expected = 0.0;
  for (int i = 0; i < 6; ++i) expected += singles.tables[static_cast<std::size_t>(i)][static_cast<std::size_t>(x[static_cast<std::size_t>(i)])];
  CHECK(singles.value(x) == doctest::Approx(expected));
  CHECK(full.value(x) == full.tables[0][configuration_index(m.cardinalities(), x)]);
}

TEST_CASE("averaged copy perturbation") {
  const std::vector<int> cards = {2, 3};
  SUBCASE("one copy matches singleton sampling in shape") {
    const std::vector<int> rep = {1, 1};
    const auto p = averaged_copy_perturbation(cards, rep, 3, 0);
    CHECK(p.raw.value_count() == 5);
    CHECK(p.scaled.tables == p.raw.tables);
  }
  SUBCASE("averaging shrinks the variance by M") {
    const int M = 8;
    const std::vector<int> rep = {M, M};
    double sum = 0.0, sq = 0.0;
    const std::size_t draws = 20000;
    for (std::size_t k = 0; k < draws; ++k) {
      const auto p = averaged_copy_perturbation(cards, rep, 17, k);
      const std::vector<int> states(M, 1);
      const double g = p.averaged(0, states);
      sum += g;
      sq += g * g;
    }
    const double mean = sum / draws;
    const double var = sq / draws - mean * mean;
    CHECK(std::abs(mean) < 4 * std::sqrt(kGumbelVariance / M / draws));
    CHECK(var == doctest::Approx(kGumbelVariance / M).epsilon(0.05));
  }
}

TEST_CASE("max-stability on a tiny model") {
  const auto m = testing::glass(2, 2, 1.0, 1.0, 8, CouplingMode::mixed);
  const std::size_t M = 4000;
  const auto b = upper_bound_logz(m, full_subset(4), M, 21);
  CHECK(std::abs(b.mean - testing::naive_logz(m)) < 4 * kGumbelStdDev / std::sqrt(double(M)));
}
