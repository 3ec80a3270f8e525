#include <doctest.h>

#include "helpers.hpp"
#include "perturbmax/errors.hpp"
#include "perturbmax/model.hpp"

using namespace perturbmax;

TEST_CASE("evaluate on hand-built models") {
  PairwiseModel zero({2, 3, 2});
  CHECK(zero.evaluate(std::vector<int>{1, 2, 0}) == 0.0);

  // Two spins, field (-1, +1) on the first, coupling +1 * s1 * s2.
  PairwiseModel chain({2, 2});
  const double field[2] = {-1.0, 1.0};
  chain.set_unary(0, field);
  const double coupling[4] = {1.0, -1.0, -1.0, 1.0};
  chain.add_edge(0, 1, coupling);
  CHECK(chain.evaluate(std::vector<int>{1, 1}) == doctest::Approx(2.0));
  CHECK(chain.evaluate(std::vector<int>{0, 1}) == doctest::Approx(-2.0));

  PairwiseModel masked({2, 2});
  masked.set_domain_mask([](std::span<const int> x) { return x[0] == x[1]; });
  CHECK(masked.evaluate(std::vector<int>{0, 1}) == kNegInf);
  CHECK(masked.evaluate(std::vector<int>{1, 1}) == 0.0);
}

TEST_CASE("evaluate rejects malformed configurations") {
  PairwiseModel m({2, 2});
  CHECK_THROWS_AS(m.evaluate(std::vector<int>{0}), ContractError);
  CHECK_THROWS_AS(m.evaluate(std::vector<int>{0, 2}), ContractError);
  CHECK_THROWS_AS(m.evaluate(std::vector<int>{-1, 0}), ContractError);
}

TEST_CASE("edge bookkeeping") {
  PairwiseModel m({2, 2, 2});
  const double t[4] = {0, 0, 0, 1};
  m.add_edge(0, 1, t);
  CHECK_THROWS_AS(m.add_edge(0, 1, t), ContractError);
  CHECK_THROWS_AS(m.add_edge(2, 1, t), ContractError);
  m.add_pair(1, 2, 1, 1, 0.5);
  REQUIRE(m.find_edge(1, 2).has_value());
  CHECK(m.evaluate(std::vector<int>{1, 1, 1}) == doctest::Approx(1.5));
}

TEST_CASE("spin glass generator") {
  const auto single = testing::glass(1, 1, 0.0, 0.0, 5);
  CHECK(single.num_variables() == 1);
  CHECK(single.edges().empty());
  CHECK(single.evaluate(std::vector<int>{1}) == 0.0);

  const auto g = testing::glass(3, 3, 1.0, 2.0, 11);
  CHECK(g.num_variables() == 9);
  CHECK(g.edges().size() == 12);
  for (int h : {1, 2, 4, 7})
    for (int w : {1, 3, 5}) CHECK(testing::glass(h, w, 1, 1, 0).edges().size() == std::size_t(2 * h * w - h - w));

  SUBCASE("determinism") {
    const auto again = testing::glass(3, 3, 1.0, 2.0, 11);
    for (int i = 0; i < 9; ++i)
      for (int s = 0; s < 2; ++s) CHECK(g.unary(i)[static_cast<std::size_t>(s)] == again.unary(i)[static_cast<std::size_t>(s)]);
    for (std::size_t e = 0; e < g.edges().size(); ++e)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) CHECK(g.pair(e, a, b) == again.pair(e, a, b));
  }

  SUBCASE("attractive couplings are supermodular") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto m = testing::glass(4, 4, 1.0, 3.0, seed);
      for (std::size_t e = 0; e < m.edges().size(); ++e)
        CHECK(m.pair(e, 0, 0) + m.pair(e, 1, 1) >= m.pair(e, 0, 1) + m.pair(e, 1, 0));
    }
  }

  SUBCASE("ranges") {
    const auto m = testing::glass(5, 5, 0.5, 2.0, 3, CouplingMode::mixed);
    for (int i = 0; i < 25; ++i) CHECK(std::abs(m.unary(i)[1]) <= 0.5);
    for (std::size_t e = 0; e < m.edges().size(); ++e) CHECK(std::abs(m.pair(e, 1, 1)) <= 2.0);
  }
}

TEST_CASE("enumeration order and counts") {
  PairwiseModel two({2, 2});
  const auto all = enumerate_configurations(two);
  REQUIRE(all.size() == 4);
  CHECK(all[0] == Configuration{0, 0});
  CHECK(all[1] == Configuration{0, 1});
  CHECK(all[2] == Configuration{1, 0});
  CHECK(all[3] == Configuration{1, 1});
  CHECK(enumerate_configurations(testing::glass(3, 3, 1, 1, 0)).size() == 512);
  CHECK(enumerate_configurations(PairwiseModel({5})).size() == 5);

  PairwiseModel masked({2, 2});
  masked.set_domain_mask([](std::span<const int> x) { return x[0] == x[1]; });
  CHECK(enumerate_configurations(masked).size() == 2);

  CHECK_THROWS_AS(enumerate_configurations(PairwiseModel(std::vector<int>(25, 2))), CapacityError);
}

TEST_CASE("configuration index round trip") {
  const std::vector<int> cards = {3, 2, 4};
  for (std::uint64_t k = 0; k < 24; ++k) {
    const auto x = configuration_from_index(cards, k);
    CHECK(configuration_index(cards, x) == k);
  }
}

TEST_CASE("evaluation is additive over summed models") {
  const auto a = testing::glass(3, 3, 1.0, 1.0, 1, CouplingMode::mixed);
  const auto b = testing::glass(3, 3, 2.0, 0.5, 2, CouplingMode::mixed);
  const auto sum = add_models(a, b);
  ConfigurationCursor c(sum);
  while (c.next()) CHECK(sum.evaluate(c.current()) == doctest::Approx(a.evaluate(c.current()) + b.evaluate(c.current())));
}

TEST_CASE("clamping a prefix preserves evaluation") {
  const auto m = testing::random_chain(5, 3, 4);
  const std::vector<int> prefix = {1, 0};
  const auto suffix = clamp_prefix(m, prefix);
  REQUIRE(suffix.num_variables() == 3);
  ConfigurationCursor c(suffix);
  while (c.next()) {
    Configuration full = prefix;
    full.insert(full.end(), c.current().begin(), c.current().end());
    CHECK(suffix.evaluate(c.current()) == doctest::Approx(m.evaluate(full)).epsilon(1e-12));
  }
}
