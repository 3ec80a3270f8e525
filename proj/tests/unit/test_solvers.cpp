#include <doctest.h>

#include "helpers.hpp"
#include "perturbmax/errors.hpp"
#include "perturbmax/solvers.hpp"

using namespace perturbmax;

namespace {

// Independent exhaustive scan used to cross-check solve_bruteforce.
double scan_max(const PairwiseModel& m, const PerturbationSet* p) {
  double best = kNegInf;
  for (std::uint64_t k = 0; k < *m.config_count(); ++k) {
    const auto x = configuration_from_index(m.cardinalities(), k);
    best = std::max(best, m.evaluate(x) + (p ? p->value(x) : 0.0));
  }
  return best;
}

void check_consistent(const PairwiseModel& m, const PerturbationSet* p, const MapResult& r) {
  CHECK(m.evaluate(r.argmax) + (p ? p->value(r.argmax) : 0.0) == doctest::Approx(r.value).epsilon(1e-12));
}

}  // namespace

TEST_CASE("brute force small cases") {
  const auto zero = solve_bruteforce(PairwiseModel({2, 3, 2}));
  CHECK(zero.argmax == Configuration{0, 0, 0});
  CHECK(zero.value == 0.0);

  PairwiseModel one({2});
  const double t[2] = {0.3, 1.7};
  one.set_unary(0, t);
  const auto r = solve_bruteforce(one);
  CHECK(r.argmax == Configuration{1});
  CHECK(r.value == doctest::Approx(1.7));

  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto m = testing::glass(3, 3, 1, 2, s, CouplingMode::mixed);
    const auto p = sample_perturbation(m, singleton_subsets(9), s, 0);
    const auto b = solve_bruteforce(m, &p);
    CHECK(b.value == doctest::Approx(scan_max(m, &p)).epsilon(1e-12));
    check_consistent(m, &p, b);
  }
}

TEST_CASE("graph cuts") {
  SUBCASE("independent variables take their own argmax") {
    PairwiseModel m({2, 2, 2});
    const double a[2] = {1, 0}, b[2] = {0, 2}, c[2] = {-1, 3};
    m.set_unary(0, a);
    m.set_unary(1, b);
    m.set_unary(2, c);
    CHECK(solve_graphcut(m).argmax == Configuration{0, 1, 1});
  }
  SUBCASE("ferromagnet ties resolve to all zeros") {
    PairwiseModel m(std::vector<int>(9, 2));
    const double t[4] = {1, -1, -1, 1};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (c + 1 < 3) m.add_edge(r * 3 + c, r * 3 + c + 1, t);
        if (r + 1 < 3) m.add_edge(r * 3 + c, r * 3 + c + 3, t);
      }
    const auto r = solve_graphcut(m);
    CHECK(r.argmax == Configuration(9, 0));
    CHECK(r.value == doctest::Approx(12.0));
  }
  SUBCASE("agrees with brute force on perturbed attractive grids") {
    int count = 0;
    for (int h = 1; h <= 4; ++h)
      for (int w = 1; w <= 4; ++w)
        for (std::uint64_t s = 0; s < 7; ++s, ++count) {
          const auto m = testing::glass(h, w, 1.0, 2.5, s * 31 + h * 5 + w);
          const auto p = sample_perturbation(m, singleton_subsets(h * w), s, 2);
          const auto g = solve_graphcut(m, &p);
          const auto b = solve_bruteforce(m, &p);
          CHECK(std::abs(g.value - b.value) <= 1e-9);
          check_consistent(m, &p, g);
        }
    CHECK(count == 112);
  }
  SUBCASE("rejections carry a reason") {
    CHECK(graphcut_rejection(PairwiseModel({3})).has_value());
    CHECK(graphcut_rejection(testing::glass(2, 2, 1, 1, 0, CouplingMode::mixed)).has_value());
    const auto m = testing::glass(2, 2, 1, 1, 0);
    const auto full = sample_perturbation(m, full_subset(4), 0, 0);
    CHECK(graphcut_rejection(m, &full).has_value());
    CHECK_FALSE(graphcut_rejection(m).has_value());
    CHECK_THROWS_AS(solve_graphcut(PairwiseModel({3})), SolverRejected);
  }
}

TEST_CASE("routing") {
  CHECK(select_solver(testing::glass(6, 6, 1, 1, 0), nullptr, Strategy::automatic) == SolverKind::graphcut);
  CHECK(select_solver(testing::glass(3, 3, 1, 1, 0, CouplingMode::mixed), nullptr, Strategy::automatic) ==
        SolverKind::bruteforce);
  CHECK_THROWS_AS(solve(testing::glass(30, 30, 1, 1, 0, CouplingMode::mixed)), SolverRejected);
  CHECK(strategy_from_string("graphcut") == Strategy::graphcut);
  CHECK_THROWS_AS(strategy_from_string("lp"), ContractError);
}

TEST_CASE("a constant on one unary shifts the MAP value by that constant") {
  const auto m = testing::glass(3, 3, 1, 1, 4, CouplingMode::mixed);
  const auto base = solve(m);
  auto shifted = m;
  shifted.add_unary(4, 0, 0.75);
  shifted.add_unary(4, 1, 0.75);
  const auto r = solve(shifted);
  CHECK(r.value == doctest::Approx(base.value + 0.75));
  CHECK(r.argmax == base.argmax);
}
