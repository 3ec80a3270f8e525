#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "perturbmax/bounds.hpp"
#include "perturbmax/errors.hpp"

using namespace perturbmax;

namespace {
double mc_tol(std::size_t M) { return 4 * kGumbelStdDev / std::sqrt(static_cast<double>(M)); }
}  // namespace

TEST_CASE("upper bound basics") {
  SUBCASE("full perturbation is unbiased") {
    const auto m = testing::glass(2, 3, 1, 1, 4, CouplingMode::mixed);
    const auto b = upper_bound_logz(m, full_subset(6), 1000, 2);
    CHECK(std::abs(b.mean - testing::naive_logz(m)) < mc_tol(1000));
    CHECK(b.kind == BoundKind::upper);
  }
  SUBCASE("single variable with k states") {
    const auto b = upper_bound_logz(PairwiseModel({5}), singleton_subsets(1), 20000, 1);
    CHECK(std::abs(b.mean - std::log(5.0)) < mc_tol(20000));
  }
  SUBCASE("estimate bookkeeping") {
    const auto m = testing::glass(3, 3, 1, 1, 0);
    const auto b = upper_bound_logz(m, singleton_subsets(9), 50, 3);
    double s = 0.0;
    for (double v : b.per_sample) s += v;
    CHECK(std::abs(s / 50 - b.mean) < 1e-12);
    CHECK(b.samples == 50);
    CHECK(b.deviation_radius > 0.0);
  }
  SUBCASE("job count does not change the result") {
    const auto m = testing::glass(4, 4, 1, 1, 0);
    BoundOptions one, four;
    four.jobs = 4;
    CHECK(upper_bound_logz(m, singleton_subsets(16), 40, 5, one).per_sample ==
          upper_bound_logz(m, singleton_subsets(16), 40, 5, four).per_sample);
  }
  SUBCASE("subsets must cover every variable") {
    const auto m = testing::glass(2, 2, 1, 1, 0);
    CHECK_THROWS_AS(upper_bound_logz(m, {{0, 1}, {2}}, 10, 0), ContractError);
  }
}

TEST_CASE("upper bound dominates log Z on attractive grids") {
  int above = 0;
  const int instances = 20;
  for (int k = 0; k < instances; ++k) {
    const auto m = testing::glass(6, 6, 1.0, 1.0 + 0.1 * k, 100 + k);
    const auto b = upper_bound_logz(m, singleton_subsets(36), 100, k);
    const double logz = exact_transfer_matrix(m).log_partition;
    CHECK(b.mean >= logz - 3 * b.deviation_radius);
    above += b.mean >= logz ? 1 : 0;
  }
  CHECK(above >= 19);
}

TEST_CASE("partial phi") {
  const auto m = testing::glass(2, 3, 1, 1, 9);
  const std::vector<int> full = {1, 0, 1, 1, 0, 1};
  CHECK(partial_phi(m, full, 10, 0) == m.evaluate(full));

  const auto root = partial_phi(m, {}, 30, 7);
  CHECK(root == doctest::Approx(upper_bound_logz(m, singleton_subsets(6), 30, 7).mean).epsilon(1e-12));

  const std::vector<int> prefix = {1, 0, 1, 1, 0};
  std::vector<double> tail;
  for (int x = 0; x < 2; ++x) {
    auto c = prefix;
    c.push_back(x);
    tail.push_back(m.evaluate(c));
  }
  const std::size_t M = 4000;
  CHECK(std::abs(partial_phi(m, prefix, M, 3) - log_sum_exp(tail)) < mc_tol(M));
}

TEST_CASE("self-reducible chain inequality") {
  const auto m = testing::glass(2, 3, 1, 1, 2);
  const std::size_t M = 2000;
  const double slack = 3 * kGumbelStdDev * std::sqrt(6.0) / std::sqrt(double(M));
  for (std::size_t j = 0; j < 6; ++j) {
    std::vector<int> prefix(j, 1);
    const double parent = partial_phi(m, prefix, M, 11);
    std::vector<double> kids;
    for (int x = 0; x < 2; ++x) {
      auto c = prefix;
      c.push_back(x);
      kids.push_back(partial_phi(m, c, M, 11));
    }
    CHECK(log_sum_exp(kids) <= parent + slack);
  }
}

TEST_CASE("sequential recursion") {
  PairwiseModel one({2});
  const double t[2] = {0.2, -0.4};
  one.set_unary(0, t);
  CHECK(std::abs(sequential_logz(one, 20000, 1) - log_sum_exp(t)) < mc_tol(20000));

  const auto two = testing::glass(1, 2, 1, 1, 3, CouplingMode::mixed);
  CHECK(std::abs(sequential_logz(two, 10000, 2) - testing::naive_logz(two)) < 0.05);

  const auto zero = testing::glass(2, 2, 0, 0, 0);
  CHECK(std::abs(sequential_logz(zero, 4000, 3) - std::log(16.0)) < 0.12);

  const auto m = testing::glass(2, 2, 1, 1, 1);
  const auto up = upper_bound_logz(m, singleton_subsets(4), 2000, 4);
  CHECK(sequential_logz(m, 300, 4) <= up.mean + 3 * up.std_error);

  CHECK_THROWS_AS(sequential_logz(testing::glass(1, 7, 1, 1, 0), 10, 0), ContractError);
}

TEST_CASE("extended model construction") {
  const auto m = testing::glass(2, 3, 1, 2, 5);
  SUBCASE("one copy reproduces the base model") {
    const auto ext = build_extended_model(m, uniform_replication(m, 1));
    ConfigurationCursor c(m);
    while (c.next()) CHECK(ext.model.evaluate(c.current()) == doctest::Approx(m.evaluate(c.current())).epsilon(1e-12));
  }
  SUBCASE("replicated configurations evaluate to theta(x)") {
    const std::vector<int> rep = {2, 3, 1, 2, 2, 3};
    const auto ext = build_extended_model(m, rep);
    CHECK(ext.model.num_variables() == 13);
    ConfigurationCursor c(m);
    while (c.next()) CHECK(std::abs(ext.model.evaluate(ext.replicate(c.current())) - m.evaluate(c.current())) < 1e-9);
    for (std::size_t e = 0; e < ext.model.edges().size(); ++e)
      CHECK(ext.model.pair(e, 0, 0) + ext.model.pair(e, 1, 1) >= ext.model.pair(e, 0, 1) + ext.model.pair(e, 1, 0));
  }
  SUBCASE("size cap") {
    const auto big = testing::glass(10, 10, 1, 1, 0);
    CHECK_THROWS_AS(build_extended_model(big, uniform_replication(big, 1001)), CapacityError);
  }
}

TEST_CASE("lower bound") {
  SUBCASE("single variable single copy averages to log Z") {
    PairwiseModel one({3});
    const double t[3] = {0.5, -1.0, 0.1};
    one.set_unary(0, t);
    const std::vector<int> rep = {1};
    double s = 0.0;
    const int N = 4000;
    for (int k = 0; k < N; ++k) s += lower_bound_logz(one, rep, k).mean;
    CHECK(std::abs(s / N - log_sum_exp(t)) < mc_tol(N));
  }
  SUBCASE("direct min-cut path matches the materialized extended model") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto m = testing::glass(2, 2, 1.0, 2.0, s);
      const std::vector<int> rep = {2, 3, 2, 2};
      const auto direct = lower_bound_logz(m, rep, s);
      const auto ext = build_extended_model(m, rep);
      const auto pert = averaged_copy_perturbation(m.cardinalities(), rep, s, 0);
      const auto brute = solve_bruteforce(ext.model, &pert.scaled);
      CHECK(direct.mean == doctest::Approx(brute.value).epsilon(1e-10));
    }
  }
  SUBCASE("value equals the extended objective at the returned copies") {
    const auto m = testing::glass(3, 3, 1.0, 1.0, 2);
    const std::vector<int> rep = uniform_replication(m, 4);
    const auto ext = build_extended_model(m, rep);
    const auto pert = averaged_copy_perturbation(m.cardinalities(), rep, 8, 0);
    const auto r = solve(ext.model, &pert.scaled);
    CHECK(extended_objective(m, pert, r.argmax) == doctest::Approx(r.value).epsilon(1e-10));
  }
  SUBCASE("zero model stays below n log 2") {
    const auto m = testing::glass(3, 3, 0, 0, 0);
    double s = 0.0;
    for (int k = 0; k < 50; ++k) s += lower_bound_logz(m, uniform_replication(m, 20), k).mean;
    CHECK(s / 50 <= 9 * std::log(2.0));
  }
  SUBCASE("epsilon and the failure probability") {
    const auto m = testing::glass(2, 2, 1, 1, 0);
    const auto rep = uniform_replication(m, 5);
    const auto a = lower_bound_logz(m, rep, 3, 0.0);
    const auto b = lower_bound_logz(m, rep, 3, 0.25);
    CHECK(b.mean == doctest::Approx(a.mean - 1.0));
    CHECK(std::isinf(*a.failure_probability));
    // sum_i pi^2 prod_{j=2}^{i} |X_{j-1}| / (6 M_i eps^2) with |X| = 2, M_i = 5.
    const double expected = std::numbers::pi * std::numbers::pi / (6 * 5 * 0.0625) * (1 + 2 + 4 + 8);
    CHECK(lower_bound_failure_probability(m, rep, 0.25) == doctest::Approx(expected));
  }
}
