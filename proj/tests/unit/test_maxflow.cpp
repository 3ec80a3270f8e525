#include <doctest.h>

#include <array>
#include <cmath>
#include <tuple>

#include "perturbmax/maxflow.hpp"
#include "perturbmax/rng.hpp"

using namespace perturbmax;

namespace {

struct RandomGraph {
  int n;
  std::vector<std::array<double, 2>> terminals;
  std::vector<std::tuple<int, int, double, double>> arcs;
};

RandomGraph random_graph(std::uint64_t seed) {
  CounterRng rng(stream_key({7, seed}));
  RandomGraph g;
  g.n = 2 + static_cast<int>(rng.uniform() * 30);
  // Half-integer capacities make ties and degenerate cuts common.
  auto cap = [&] { return std::floor(rng.uniform() * 6.0) * 0.5; };
  for (int i = 0; i < g.n; ++i) g.terminals.push_back({cap(), cap()});
  const int m = static_cast<int>(rng.uniform() * 4 * g.n);
  for (int k = 0; k < m; ++k) {
    const int i = static_cast<int>(rng.uniform() * g.n);
    const int j = static_cast<int>(rng.uniform() * g.n);
    if (i != j) g.arcs.emplace_back(i, j, cap(), cap());
  }
  return g;
}

template <class Graph>
std::pair<double, std::vector<int>> run(const RandomGraph& r) {
  Graph g(r.n);
  for (int i = 0; i < r.n; ++i) g.add_terminal_weights(i, r.terminals[i][0], r.terminals[i][1]);
  for (const auto& [i, j, c, rc] : r.arcs) g.add_edge(i, j, c, rc);
  const double flow = g.maxflow();
  std::vector<int> side(r.n);
  for (int i = 0; i < r.n; ++i) side[i] = g.on_sink_side(i) ? 1 : 0;
  return {flow, side};
}

double cut_value(const RandomGraph& r, const std::vector<int>& side) {
  double v = 0.0;
  for (int i = 0; i < r.n; ++i) v += side[i] ? r.terminals[i][0] : r.terminals[i][1];
  for (const auto& [i, j, c, rc] : r.arcs) {
    if (!side[i] && side[j]) v += c;
    if (side[i] && !side[j]) v += rc;
  }
  return v;
}

}  // namespace

TEST_CASE("textbook network") {
  for (int variant = 0; variant < 2; ++variant) {
    // s->0 (3), s->1 (2), 0->1 (1), 0->t (2), 1->t (3): max flow 5.
    auto check = [](auto& g) {
      g.add_terminal_weights(0, 3, 2);
      g.add_terminal_weights(1, 2, 3);
      g.add_edge(0, 1, 1);
      CHECK(g.maxflow() == doctest::Approx(5.0));
    };
    if (variant == 0) {
      MaxFlowGraph g(2);
      check(g);
    } else {
      PushRelabelGraph g(2);
      check(g);
    }
  }
}

TEST_CASE("free nodes stay on the source side") {
  MaxFlowGraph a(3);
  PushRelabelGraph b(3);
  a.add_edge(0, 1, 1, 1);
  b.add_edge(0, 1, 1, 1);
  a.maxflow();
  b.maxflow();
  for (int i = 0; i < 3; ++i) {
    CHECK_FALSE(a.on_sink_side(i));
    CHECK_FALSE(b.on_sink_side(i));
  }
}

TEST_CASE("both solvers agree with each other and with the min-cut value") {
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto r = random_graph(seed);
    const auto [fa, sa] = run<MaxFlowGraph>(r);
    const auto [fb, sb] = run<PushRelabelGraph>(r);
    CHECK(fa == doctest::Approx(fb).epsilon(1e-12));
    CHECK(sa == sb);
    CHECK(cut_value(r, sa) == doctest::Approx(fa).epsilon(1e-12));
  }
}
