#pragma once

#include <cmath>
#include <cstdint>

#include "perturbmax/model.hpp"
#include "perturbmax/oracle.hpp"
#include "perturbmax/rng.hpp"

namespace testing {

inline perturbmax::PairwiseModel glass(int h, int w, double f, double c, std::uint64_t seed,
                                       perturbmax::CouplingMode mode = perturbmax::CouplingMode::attractive) {
  perturbmax::SpinGlassSpec spec;
  spec.height = h;
  spec.width = w;
  spec.field_range = f;
  spec.coupling_range = c;
  spec.coupling_mode = mode;
  spec.seed = seed;
  return perturbmax::generate_spin_glass(spec);
}

// Random pairwise model on a chain with arbitrary cardinalities in [2, max_card].
inline perturbmax::PairwiseModel random_chain(int n, int max_card, std::uint64_t seed) {
  perturbmax::CounterRng rng(perturbmax::stream_key({99, seed}));
  std::vector<int> cards(static_cast<std::size_t>(n));
  for (int& k : cards) k = 2 + static_cast<int>(rng.uniform() * (max_card - 1));
  perturbmax::PairwiseModel m(cards);
  for (int i = 0; i < n; ++i) {
    std::vector<double> u(static_cast<std::size_t>(cards[static_cast<std::size_t>(i)]));
    for (double& v : u) v = rng.uniform(-1.0, 1.0);
    m.set_unary(i, u);
  }
  for (int i = 0; i + 1 < n; ++i) {
    std::vector<double> t(static_cast<std::size_t>(cards[static_cast<std::size_t>(i)] * cards[static_cast<std::size_t>(i + 1)]));
    for (double& v : t) v = rng.uniform(-1.0, 1.0);
    m.add_edge(i, i + 1, t);
  }
  return m;
}

// Direct log-sum-exp over an explicit enumeration, independent of the oracle code.
inline double naive_logz(const perturbmax::PairwiseModel& m) {
  double mx = -INFINITY;
  std::vector<double> vals;
  perturbmax::ConfigurationCursor c(m);
  while (c.next()) {
    vals.push_back(m.evaluate(c.current()));
    mx = std::max(mx, vals.back());
  }
  double s = 0.0;
  for (double v : vals) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace testing
