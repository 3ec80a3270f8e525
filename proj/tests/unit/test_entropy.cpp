#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "perturbmax/entropy.hpp"

using namespace perturbmax;

TEST_CASE("entropy bound examples") {
  SUBCASE("near-deterministic model") {
    PairwiseModel m({2, 2});
    const double u[2] = {0, 50};
    m.set_unary(0, u);
    m.set_unary(1, u);
    CHECK(entropy_upper_bound(m, singleton_subsets(2), 500, 1).mean < 1e-6);
  }
  SUBCASE("uniform single variable gives log k") {
    const auto b = entropy_upper_bound(PairwiseModel({4}), singleton_subsets(1), 20000, 2);
    CHECK(std::abs(b.mean - std::log(4.0)) < 4 * b.std_error);
  }
  SUBCASE("independent variables add") {
    PairwiseModel m({2, 3});
    const double a[2] = {0.3, -0.2};
    const double b[3] = {1.0, 0.0, -0.5};
    m.set_unary(0, a);
    m.set_unary(1, b);
    const auto est = entropy_upper_bound(m, singleton_subsets(2), 20000, 3);
    const double h = exact_summary(m).entropy;
    CHECK(std::abs(est.mean - h) < 4 * est.std_error);
  }
  SUBCASE("full-subset perturbation is exact in expectation") {
    const auto m = testing::glass(2, 2, 1, 1, 6, CouplingMode::mixed);
    const auto est = entropy_upper_bound(m, full_subset(4), 20000, 4);
    CHECK(std::abs(est.mean - exact_summary(m).entropy) < 4 * est.std_error);
  }
  SUBCASE("low-dimensional bound dominates the entropy") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto m = testing::glass(3, 3, 1, 1, s);
      const auto est = entropy_upper_bound(m, singleton_subsets(9), 400, s);
      CHECK(est.mean >= exact_summary(m).entropy - 3 * est.std_error);
    }
  }
}

TEST_CASE("uncertainty is maximal at the uniform model") {
  const auto zero = testing::glass(3, 3, 0, 0, 0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto m = testing::glass(3, 3, 1, 1, s, CouplingMode::mixed);
    // Same seed means the same perturbations, so the comparison holds sample by sample.
    CHECK(uncertainty_measure(zero, singleton_subsets(9), 100, s).mean >=
          uncertainty_measure(m, singleton_subsets(9), 100, s).mean - 1e-12);
  }
}

TEST_CASE("marginal entropy bound") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto summary = exact_summary(testing::glass(3, 3, 1, 2, s, CouplingMode::mixed));
    CHECK(marginal_entropy_bound(summary) >= summary.entropy - 1e-12);
  }
  CHECK(marginal_entropy_bound({{0.5, 0.5}, {1.0, 0.0}}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("argmax distribution") {
  const auto m = testing::glass(2, 2, 1, 1, 2, CouplingMode::mixed);
  const auto d = perturbmax_distribution(m, full_subset(4), 50000, 7);
  CHECK(d.counts.size() == 16);
  CHECK(d.samples == 50000);
  const auto freq = d.frequencies();
  CHECK(total_variation(freq, *exact_bruteforce(m).gibbs_table) < 0.02);

  const auto marg = empirical_marginals(m, d);
  const auto exact = exact_summary(m).marginals;
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(marg[i][1] - exact[i][1]) < 0.02);
}

TEST_CASE("plug-in entropies") {
  const std::vector<double> p = {0.25, 0.25, 0.5};
  CHECK(shannon_entropy(p) == doctest::Approx(1.5 * std::log(2.0)));
  const std::vector<std::uint64_t> counts = {25, 25, 50, 0};
  // Miller-Madow adds (nonzero bins - 1) / (2N).
  CHECK(plugin_entropy_miller_madow(counts) == doctest::Approx(1.5 * std::log(2.0) + 2.0 / 200.0));
  const std::vector<std::uint64_t> single = {10};
  CHECK(plugin_entropy_miller_madow(single) == doctest::Approx(0.0));
}
