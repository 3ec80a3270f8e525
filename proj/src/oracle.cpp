#include "perturbmax/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "perturbmax/errors.hpp"
#include "perturbmax/rng.hpp"

namespace perturbmax {

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "distributions must share a support");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

ExactSummary exact_bruteforce(const PairwiseModel& model) {
  const std::uint64_t total = checked_config_count(model);
  const auto cards = model.cardinalities();
  std::vector<double> theta(total, kNegInf);
  ConfigurationCursor cursor(model);
  while (cursor.next()) theta[cursor.index()] = model.evaluate_unchecked(cursor.current());

  ExactSummary out;
  out.log_partition = log_sum_exp(theta);
  if (out.log_partition == kNegInf) throw ContractError("model has no feasible configuration");

  out.marginals.resize(cards.size());
  for (std::size_t i = 0; i < cards.size(); ++i) out.marginals[i].assign(static_cast<std::size_t>(cards[i]), 0.0);

  std::vector<double> prob(total, 0.0);
  double entropy = 0.0;
  Configuration x(cards.size(), 0);
  for (std::uint64_t k = 0; k < total; ++k) {
    if (theta[k] != kNegInf) {
      const double log_p = theta[k] - out.log_partition;
      const double p = std::exp(log_p);
      prob[k] = p;
      entropy -= p * log_p;
      for (std::size_t i = 0; i < cards.size(); ++i) out.marginals[i][static_cast<std::size_t>(x[i])] += p;
    }
    for (std::size_t i = cards.size(); i-- > 0;) {
      if (++x[i] < cards[i]) break;
      x[i] = 0;
    }
  }
  out.entropy = std::max(0.0, entropy);
  out.gibbs_table = std::move(prob);
  return out;
}

namespace {

// Grid viewed as T slices of P variables each; var(t, p) is the model index.
struct SliceLayout {
  int T = 0;
  int P = 0;
  bool columns = false;  // slices are grid columns (width >= height)
  int width = 0;
  std::vector<std::vector<int>> card;              // [t][p]
  std::vector<std::vector<std::size_t>> stride;    // [t][p] mixed radix, p = 0 least significant
  std::vector<std::size_t> size;                   // [t]
  std::vector<std::vector<long>> intra;            // edge between (t,p) and (t,p+1), -1 if none
  std::vector<std::vector<long>> inter;            // edge between (t-1,p) and (t,p), -1 if none

  int var(int t, int p) const { return columns ? p * width + t : t * width + p; }
};

SliceLayout make_layout(const PairwiseModel& model) {
  if (!model.grid()) throw ContractError("transfer matrix needs a grid model");
  if (model.has_mask()) throw ContractError("transfer matrix does not support domain masks");
  const GridShape g = *model.grid();
  require(g.height * g.width == model.num_variables(), "grid shape does not match the variable count");
  SliceLayout L;
  L.columns = g.width >= g.height;
  L.T = L.columns ? g.width : g.height;
  L.P = L.columns ? g.height : g.width;
  L.width = g.width;
  L.card.assign(static_cast<std::size_t>(L.T), std::vector<int>(static_cast<std::size_t>(L.P)));
  L.stride.assign(static_cast<std::size_t>(L.T), std::vector<std::size_t>(static_cast<std::size_t>(L.P)));
  L.size.assign(static_cast<std::size_t>(L.T), 1);
  for (int t = 0; t < L.T; ++t) {
    std::size_t s = 1;
    for (int p = 0; p < L.P; ++p) {
      const int k = model.cardinality(L.var(t, p));
      L.card[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = k;
      L.stride[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = s;
      if (static_cast<std::uint64_t>(s) * static_cast<std::uint64_t>(k) > kSliceCap)
        throw CapacityError("grid slice state space exceeds " + std::to_string(kSliceCap) + " states");
      s *= static_cast<std::size_t>(k);
    }
    L.size[static_cast<std::size_t>(t)] = s;
  }
  // Position of each variable in slice coordinates.
  std::vector<std::pair<int, int>> pos(static_cast<std::size_t>(model.num_variables()));
  for (int t = 0; t < L.T; ++t)
    for (int p = 0; p < L.P; ++p) pos[static_cast<std::size_t>(L.var(t, p))] = {t, p};
  L.intra.assign(static_cast<std::size_t>(L.T), std::vector<long>(static_cast<std::size_t>(L.P), -1));
  L.inter.assign(static_cast<std::size_t>(L.T), std::vector<long>(static_cast<std::size_t>(L.P), -1));
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    auto [ta, pa] = pos[static_cast<std::size_t>(model.edges()[e].i)];
    auto [tb, pb] = pos[static_cast<std::size_t>(model.edges()[e].j)];
    if (ta > tb || (ta == tb && pa > pb)) {
      std::swap(ta, tb);
      std::swap(pa, pb);
    }
    if (ta == tb && pb == pa + 1) {
      L.intra[static_cast<std::size_t>(ta)][static_cast<std::size_t>(pa)] = static_cast<long>(e);
    } else if (pa == pb && tb == ta + 1) {
      L.inter[static_cast<std::size_t>(tb)][static_cast<std::size_t>(pb)] = static_cast<long>(e);
    } else {
      throw ContractError("edge (" + std::to_string(model.edges()[e].i) + "," + std::to_string(model.edges()[e].j) +
                          ") is not a 4-neighbour grid edge");
    }
  }
  return L;
}

// Pair value with the caller's orientation (a, b) regardless of storage order.
double oriented_pair(const PairwiseModel& model, std::size_t e, int a, int xa, int xb) {
  return model.edges()[e].i == a ? model.pair(e, xa, xb) : model.pair(e, xb, xa);
}

// Energy of each slice-t state from unaries and intra-slice edges.
std::vector<double> slice_energy(const PairwiseModel& model, const SliceLayout& L, int t) {
  const auto ts = static_cast<std::size_t>(t);
  std::vector<double> out(L.size[ts], 0.0);
  std::vector<int> digit(static_cast<std::size_t>(L.P), 0);
  for (std::size_t s = 0; s < L.size[ts]; ++s) {
    double v = 0.0;
    for (int p = 0; p < L.P; ++p) v += model.unary(L.var(t, p))[static_cast<std::size_t>(digit[static_cast<std::size_t>(p)])];
    for (int p = 0; p + 1 < L.P; ++p) {
      const long e = L.intra[ts][static_cast<std::size_t>(p)];
      if (e >= 0)
        v += oriented_pair(model, static_cast<std::size_t>(e), L.var(t, p), digit[static_cast<std::size_t>(p)],
                           digit[static_cast<std::size_t>(p) + 1]);
    }
    out[s] = v;
    for (int p = 0; p < L.P; ++p) {
      if (++digit[static_cast<std::size_t>(p)] < L.card[ts][static_cast<std::size_t>(p)]) break;
      digit[static_cast<std::size_t>(p)] = 0;
    }
  }
  return out;
}

// Table h[a * kb + b] for the inter-slice edge at position p entering slice t:
// a is the state of (t-1, p), b the state of (t, p).
std::vector<double> inter_table(const PairwiseModel& model, const SliceLayout& L, int t, int p) {
  const int ka = L.card[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(p)];
  const int kb = L.card[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  std::vector<double> h(static_cast<std::size_t>(ka * kb), 0.0);
  const long e = L.inter[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  if (e < 0) return h;
  for (int a = 0; a < ka; ++a)
    for (int b = 0; b < kb; ++b)
      h[static_cast<std::size_t>(a * kb + b)] = oriented_pair(model, static_cast<std::size_t>(e), L.var(t - 1, p), a, b);
  return h;
}

// Log-domain message with an optional expectation channel: for every state,
// `log` holds log sum w and `mean` holds the w-weighted mean of accumulated theta.
struct Message {
  std::vector<double> log;
  std::vector<double> mean;
};

// Replaces mixed-radix digit p (cardinality ka, block size `low`) by a new
// digit of cardinality kb, eliminating the old one:
//   out(.., b, ..) = log sum_a exp(in(.., a, ..) + h[a][b]).
// When `track` is set the expectation channel follows the same weights.
Message replace_digit(const Message& in, std::size_t low, int ka, int kb, const std::vector<double>& h, bool track) {
  const std::size_t high = in.log.size() / (low * static_cast<std::size_t>(ka));
  Message out;
  out.log.assign(high * static_cast<std::size_t>(kb) * low, kNegInf);
  if (track) out.mean.assign(out.log.size(), 0.0);
  std::vector<double> terms(static_cast<std::size_t>(ka));
  for (std::size_t hi = 0; hi < high; ++hi) {
    for (int b = 0; b < kb; ++b) {
      for (std::size_t lo = 0; lo < low; ++lo) {
        double m = kNegInf;
        for (int a = 0; a < ka; ++a) {
          const std::size_t src = (hi * static_cast<std::size_t>(ka) + static_cast<std::size_t>(a)) * low + lo;
          terms[static_cast<std::size_t>(a)] = in.log[src] + h[static_cast<std::size_t>(a * kb + b)];
          m = std::max(m, terms[static_cast<std::size_t>(a)]);
        }
        const std::size_t dst = (hi * static_cast<std::size_t>(kb) + static_cast<std::size_t>(b)) * low + lo;
        if (m == kNegInf) continue;
        double z = 0.0, acc = 0.0;
        for (int a = 0; a < ka; ++a) {
          const double w = std::exp(terms[static_cast<std::size_t>(a)] - m);
          z += w;
          if (track) {
            const std::size_t src = (hi * static_cast<std::size_t>(ka) + static_cast<std::size_t>(a)) * low + lo;
            acc += w * (in.mean[src] + h[static_cast<std::size_t>(a * kb + b)]);
          }
        }
        out.log[dst] = m + std::log(z);
        if (track) out.mean[dst] = acc / z;
      }
    }
  }
  return out;
}

// Forward messages alpha_t over slice-t states (including slice t's energy).
std::vector<Message> forward_pass(const PairwiseModel& model, const SliceLayout& L, bool track) {
  std::vector<Message> alpha(static_cast<std::size_t>(L.T));
  for (int t = 0; t < L.T; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const auto energy = slice_energy(model, L, t);
    Message cur;
    if (t == 0) {
      cur.log.assign(energy.size(), 0.0);
      if (track) cur.mean.assign(energy.size(), 0.0);
    } else {
      cur = alpha[ts - 1];
      // The radix changes digit by digit from slice t-1 to slice t.
      for (int p = 0; p < L.P; ++p) {
        std::size_t low = 1;
        for (int q = 0; q < p; ++q) low *= static_cast<std::size_t>(L.card[ts][static_cast<std::size_t>(q)]);
        cur = replace_digit(cur, low, L.card[ts - 1][static_cast<std::size_t>(p)], L.card[ts][static_cast<std::size_t>(p)],
                            inter_table(model, L, t, p), track);
      }
    }
    for (std::size_t s = 0; s < energy.size(); ++s) {
      cur.log[s] += energy[s];
      if (track) cur.mean[s] += energy[s];
    }
    alpha[ts] = std::move(cur);
  }
  return alpha;
}

}  // namespace

ExactSummary exact_transfer_matrix(const PairwiseModel& model) {
  const SliceLayout L = make_layout(model);
  const auto alpha = forward_pass(model, L, true);
  const Message& last = alpha.back();

  ExactSummary out;
  const double log_z0 = log_sum_exp(last.log);
  double expected_theta = 0.0;
  for (std::size_t s = 0; s < last.log.size(); ++s) expected_theta += std::exp(last.log[s] - log_z0) * last.mean[s];
  out.log_partition = log_z0 + model.offset();
  out.entropy = std::max(0.0, log_z0 - expected_theta);

  // Backward messages: beta_t(s) = log sum over later slices given slice t = s.
  std::vector<std::vector<double>> beta(static_cast<std::size_t>(L.T));
  beta.back().assign(L.size.back(), 0.0);
  for (int t = L.T - 1; t >= 1; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const auto energy = slice_energy(model, L, t);
    Message cur;
    cur.log.resize(energy.size());
    for (std::size_t s = 0; s < energy.size(); ++s) cur.log[s] = energy[s] + beta[ts][s];
    for (int p = 0; p < L.P; ++p) {
      std::size_t low = 1;
      for (int q = 0; q < p; ++q) low *= static_cast<std::size_t>(L.card[ts - 1][static_cast<std::size_t>(q)]);
      const int kb = L.card[ts][static_cast<std::size_t>(p)];
      const int ka = L.card[ts - 1][static_cast<std::size_t>(p)];
      const auto h = inter_table(model, L, t, p);
      std::vector<double> ht(h.size());
      for (int a = 0; a < ka; ++a)
        for (int b = 0; b < kb; ++b) ht[static_cast<std::size_t>(b * ka + a)] = h[static_cast<std::size_t>(a * kb + b)];
      cur = replace_digit(cur, low, kb, ka, ht, false);
    }
    beta[ts - 1] = std::move(cur.log);
  }

  out.marginals.resize(static_cast<std::size_t>(model.num_variables()));
  for (int i = 0; i < model.num_variables(); ++i)
    out.marginals[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(model.cardinality(i)), 0.0);
  for (int t = 0; t < L.T; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    std::vector<int> digit(static_cast<std::size_t>(L.P), 0);
    for (std::size_t s = 0; s < L.size[ts]; ++s) {
      const double q = std::exp(alpha[ts].log[s] + beta[ts][s] - log_z0);
      for (int p = 0; p < L.P; ++p)
        out.marginals[static_cast<std::size_t>(L.var(t, p))][static_cast<std::size_t>(digit[static_cast<std::size_t>(p)])] += q;
      for (int p = 0; p < L.P; ++p) {
        if (++digit[static_cast<std::size_t>(p)] < L.card[ts][static_cast<std::size_t>(p)]) break;
        digit[static_cast<std::size_t>(p)] = 0;
      }
    }
  }
  return out;
}

std::vector<Configuration> exact_gibbs_sample(const PairwiseModel& model, std::size_t count, std::uint64_t seed) {
  const SliceLayout L = make_layout(model);
  const auto alpha = forward_pass(model, L, false);

  auto draw = [](CounterRng& rng, const std::vector<double>& logw) {
    const double m = *std::max_element(logw.begin(), logw.end());
    double z = 0.0;
    for (double v : logw) z += std::exp(v - m);
    double u = rng.uniform() * z;
    for (std::size_t s = 0; s < logw.size(); ++s) {
      u -= std::exp(logw[s] - m);
      if (u < 0.0) return s;
    }
    // Round-off landed past the end: return the last state with positive weight.
    for (std::size_t s = logw.size(); s-- > 0;)
      if (logw[s] != kNegInf) return s;
    return std::size_t{0};
  };
  auto decode = [&L](int t, std::size_t s) {
    std::vector<int> d(static_cast<std::size_t>(L.P));
    for (int p = 0; p < L.P; ++p) {
      const auto k = static_cast<std::size_t>(L.card[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
      d[static_cast<std::size_t>(p)] = static_cast<int>(s % k);
      s /= k;
    }
    return d;
  };

  std::vector<std::vector<std::vector<double>>> tables(static_cast<std::size_t>(L.T));
  for (int t = 1; t < L.T; ++t)
    for (int p = 0; p < L.P; ++p) tables[static_cast<std::size_t>(t)].push_back(inter_table(model, L, t, p));

  std::vector<Configuration> samples;
  samples.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    CounterRng rng(stream_key({tag(StreamTag::oracle_sample), seed, k}));
    Configuration x(static_cast<std::size_t>(model.num_variables()));
    std::vector<int> next = decode(L.T - 1, draw(rng, alpha.back().log));
    for (int p = 0; p < L.P; ++p) x[static_cast<std::size_t>(L.var(L.T - 1, p))] = next[static_cast<std::size_t>(p)];
    for (int t = L.T - 2; t >= 0; --t) {
      const auto ts = static_cast<std::size_t>(t);
      std::vector<double> logw = alpha[ts].log;
      std::vector<int> digit(static_cast<std::size_t>(L.P), 0);
      for (std::size_t s = 0; s < logw.size(); ++s) {
        for (int p = 0; p < L.P; ++p) {
          const int kb = L.card[ts + 1][static_cast<std::size_t>(p)];
          logw[s] += tables[ts + 1][static_cast<std::size_t>(p)][static_cast<std::size_t>(digit[static_cast<std::size_t>(p)] * kb +
                                                                                          next[static_cast<std::size_t>(p)])];
        }
        for (int p = 0; p < L.P; ++p) {
          if (++digit[static_cast<std::size_t>(p)] < L.card[ts][static_cast<std::size_t>(p)]) break;
          digit[static_cast<std::size_t>(p)] = 0;
        }
      }
      next = decode(t, draw(rng, logw));
      for (int p = 0; p < L.P; ++p) x[static_cast<std::size_t>(L.var(t, p))] = next[static_cast<std::size_t>(p)];
    }
    samples.push_back(std::move(x));
  }
  return samples;
}

ExactSummary exact_summary(const PairwiseModel& model) {
  if (model.grid() && !model.has_mask()) {
    const GridShape g = *model.grid();
    bool small = true;
    const int P = std::min(g.height, g.width);
    const bool columns = g.width >= g.height;
    for (int t = 0; t < std::max(g.height, g.width) && small; ++t) {
      std::uint64_t s = 1;
      for (int p = 0; p < P; ++p) {
        s *= static_cast<std::uint64_t>(model.cardinality(columns ? p * g.width + t : t * g.width + p));
        if (s > kSliceCap) small = false;
      }
    }
    if (small) return exact_transfer_matrix(model);
  }
  return exact_bruteforce(model);
}

}  // namespace perturbmax
