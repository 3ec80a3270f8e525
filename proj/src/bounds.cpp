#include "perturbmax/bounds.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "perturbmax/concentration.hpp"
#include "perturbmax/errors.hpp"
#include "perturbmax/maxflow.hpp"
#include "perturbmax/parallel.hpp"

namespace perturbmax {

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::upper:
      return "upper";
    case BoundKind::lower:
      return "lower";
    case BoundKind::exact_mc:
      return "exact_mc";
  }
  return "upper";
}

void require_cover(const PairwiseModel& model, const SubsetFamily& subsets) {
  require(!subsets.empty(), "subset family is empty");
  std::vector<char> seen(static_cast<std::size_t>(model.num_variables()), 0);
  for (const auto& alpha : subsets)
    for (int v : alpha) {
      require(v >= 0 && v < model.num_variables(), "subset variable out of range");
      seen[static_cast<std::size_t>(v)] = 1;
    }
  for (char s : seen) require(s != 0, "subsets must cover every variable");
}

double sample_std_error(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

BoundEstimate upper_bound_logz(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                               std::uint64_t seed, const BoundOptions& options) {
  require(M >= 1, "need at least one perturbation sample");
  require_cover(model, subsets);
  BoundEstimate out;
  out.kind = BoundKind::upper;
  out.samples = M;
  out.subsets = subsets;
  out.delta = options.delta;
  out.per_sample = parallel_map(M, options.jobs, [&](std::size_t k) {
    const auto pert = sample_perturbation(model, subsets, seed, k);
    return solve(model, &pert, options.strategy).value;
  });
  for (double v : out.per_sample) out.mean += v;
  out.mean /= static_cast<double>(M);
  out.std_error = sample_std_error(out.per_sample, out.mean);
  out.deviation_radius =
      deviation_radius_sobolev(std::sqrt(static_cast<double>(subsets.size())), static_cast<double>(M), options.delta);
  return out;
}

double partial_phi(const PairwiseModel& model, std::span<const int> prefix, std::size_t M, std::uint64_t seed,
                   Strategy strategy) {
  require(prefix.size() <= static_cast<std::size_t>(model.num_variables()), "prefix longer than the model");
  if (prefix.size() == static_cast<std::size_t>(model.num_variables())) return model.evaluate(prefix);
  require(M >= 1, "need at least one perturbation sample");
  const PairwiseModel suffix = prefix.empty() ? model : clamp_prefix(model, prefix);
  const auto subsets = singleton_subsets(suffix.num_variables());
  double total = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    const auto pert = sample_perturbation(suffix, subsets, seed, k);
    total += solve(suffix, &pert, strategy).value;
  }
  return total / static_cast<double>(M);
}

double sequential_logz(const PairwiseModel& model, std::size_t M_inner, std::uint64_t seed) {
  const int n = model.num_variables();
  require(n >= 1 && n <= 6, "sequential recursion is limited to 1..6 variables");
  require(model.is_binary(), "sequential recursion needs binary variables");
  require(M_inner >= 1, "need at least one inner sample");
  // value[p] over prefixes of the current length, p in lexicographic order.
  std::vector<double> value(std::size_t{1} << n);
  for (std::size_t k = 0; k < value.size(); ++k) value[k] = model.evaluate(configuration_from_index(model.cardinalities(), k));
  for (int j = n - 1; j >= 0; --j) {
    std::vector<double> parent(std::size_t{1} << j);
    for (std::size_t p = 0; p < parent.size(); ++p) {
      CounterRng rng(stream_key({tag(StreamTag::perturbation), seed, 0x5e9ULL, static_cast<std::uint64_t>(j), p}));
      double total = 0.0;
      for (std::size_t m = 0; m < M_inner; ++m) {
        const double v0 = sample_gumbel(rng) + value[2 * p];
        const double v1 = sample_gumbel(rng) + value[2 * p + 1];
        total += std::max(v0, v1);
      }
      parent[p] = total / static_cast<double>(M_inner);
    }
    value = std::move(parent);
  }
  return value[0];
}

Configuration ExtendedModel::replicate(std::span<const int> x) const {
  require(x.size() == replication.size(), "configuration size does not match the base model");
  Configuration out;
  out.reserve(static_cast<std::size_t>(model.num_variables()));
  for (std::size_t i = 0; i < x.size(); ++i) out.insert(out.end(), static_cast<std::size_t>(replication[i]), x[i]);
  return out;
}

namespace {

std::vector<std::size_t> check_replication(const PairwiseModel& model, std::span<const int> replication) {
  require(replication.size() == static_cast<std::size_t>(model.num_variables()), "one replication count per variable");
  std::vector<std::size_t> offset;
  std::size_t total = 0;
  for (int m : replication) {
    require(m >= 1, "replication counts must be at least 1");
    offset.push_back(total);
    total += static_cast<std::size_t>(m);
  }
  if (total > kExtendedCap)
    throw CapacityError("extended model would have " + std::to_string(total) + " variables (cap " +
                        std::to_string(kExtendedCap) + ")");
  return offset;
}

}  // namespace

ExtendedModel build_extended_model(const PairwiseModel& model, std::span<const int> replication) {
  require(!model.has_mask(), "masked models cannot be extended");
  ExtendedModel out;
  out.replication.assign(replication.begin(), replication.end());
  out.copy_offset = check_replication(model, replication);

  std::vector<int> cards;
  for (int i = 0; i < model.num_variables(); ++i) cards.insert(cards.end(), static_cast<std::size_t>(replication[static_cast<std::size_t>(i)]), model.cardinality(i));
  out.model = PairwiseModel(cards);
  out.model.set_offset(model.offset());

  std::vector<double> scaled;
  for (int i = 0; i < model.num_variables(); ++i) {
    const double inv = 1.0 / replication[static_cast<std::size_t>(i)];
    const auto u = model.unary(i);
    scaled.assign(u.begin(), u.end());
    for (double& v : scaled) v *= inv;
    for (int k = 0; k < replication[static_cast<std::size_t>(i)]; ++k) out.model.set_unary(out.extended_index(i, k), scaled);
  }
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const auto& ed = model.edges()[e];
    const int mi = replication[static_cast<std::size_t>(ed.i)];
    const int mj = replication[static_cast<std::size_t>(ed.j)];
    const auto t = model.pair_table(e);
    scaled.assign(t.begin(), t.end());
    for (double& v : scaled) v /= static_cast<double>(mi) * mj;
    for (int k = 0; k < mi; ++k)
      for (int l = 0; l < mj; ++l) out.model.add_edge(out.extended_index(ed.i, k), out.extended_index(ed.j, l), scaled);
  }
  return out;
}

std::vector<int> uniform_replication(const PairwiseModel& model, int m) {
  require(m >= 1, "replication count must be at least 1");
  return std::vector<int>(static_cast<std::size_t>(model.num_variables()), m);
}

double lower_bound_failure_probability(const PairwiseModel& model, std::span<const int> replication, double epsilon) {
  require(replication.size() == static_cast<std::size_t>(model.num_variables()), "one replication count per variable");
  require(epsilon >= 0.0, "epsilon must be nonnegative");
  if (epsilon == 0.0) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  double prod = 1.0;  // prod_{j=2}^{i} |X_{j-1}|
  for (int i = 0; i < model.num_variables(); ++i) {
    if (i > 0) prod *= model.cardinality(i - 1);
    total += std::numbers::pi * std::numbers::pi * prod / (6.0 * replication[static_cast<std::size_t>(i)] * epsilon * epsilon);
  }
  return total;
}

double extended_objective(const PairwiseModel& model, const ExtendedPerturbation& perturbation,
                          std::span<const int> extended_states) {
  const auto n = static_cast<std::size_t>(model.num_variables());
  require(perturbation.replication.size() == n, "perturbation does not match the model");
  // counts[i][a] = number of copies of i in state a
  std::vector<std::vector<double>> counts(n);
  double value = model.offset();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    counts[i].assign(static_cast<std::size_t>(model.cardinality(static_cast<int>(i))), 0.0);
    for (int k = 0; k < perturbation.replication[i]; ++k, ++pos) {
      const int a = extended_states[pos];
      counts[i][static_cast<std::size_t>(a)] += 1.0;
      value += perturbation.scaled.tables[pos][static_cast<std::size_t>(a)];
    }
  }
  require(pos == extended_states.size(), "extended configuration has the wrong length");
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = model.unary(static_cast<int>(i));
    for (std::size_t a = 0; a < u.size(); ++a) value += counts[i][a] * u[a] / perturbation.replication[i];
  }
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const auto& ed = model.edges()[e];
    const auto& ci = counts[static_cast<std::size_t>(ed.i)];
    const auto& cj = counts[static_cast<std::size_t>(ed.j)];
    const double scale = static_cast<double>(perturbation.replication[static_cast<std::size_t>(ed.i)]) *
                         perturbation.replication[static_cast<std::size_t>(ed.j)];
    double s = 0.0;
    for (std::size_t a = 0; a < ci.size(); ++a)
      for (std::size_t b = 0; b < cj.size(); ++b) s += ci[a] * cj[b] * model.pair(e, static_cast<int>(a), static_cast<int>(b));
    value += s / scale;
  }
  return value;
}

namespace {

// Min-cut on the extended model assembled straight from the base tables. Each
// copy pair of an edge gets the same arc weight, and the linear parts of the
// pairwise terms are summed over partner copies before they reach the unaries.
Configuration extended_graphcut(const PairwiseModel& model, const ExtendedPerturbation& pert) {
  const auto n = static_cast<std::size_t>(model.num_variables());
  const std::size_t total = pert.scaled.tables.size();
  std::vector<double> cost0(total), cost1(total);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = model.unary(static_cast<int>(i));
    const double inv = 1.0 / pert.replication[i];
    for (int k = 0; k < pert.replication[i]; ++k) {
      const std::size_t v = pert.copy_offset[i] + static_cast<std::size_t>(k);
      cost0[v] = -u[0] * inv - pert.scaled.tables[v][0];
      cost1[v] = -u[1] * inv - pert.scaled.tables[v][1];
    }
  }
  std::vector<double> weight(model.edges().size());
  double scale = 1.0;
  std::size_t arcs = 0;
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const auto& ed = model.edges()[e];
    const auto mi = static_cast<double>(pert.replication[static_cast<std::size_t>(ed.i)]);
    const auto mj = static_cast<double>(pert.replication[static_cast<std::size_t>(ed.j)]);
    const auto t = model.pair_table(e);
    const double a = -t[0], b = -t[1], c = -t[2], d = -t[3];
    for (int k = 0; k < static_cast<int>(mi); ++k) cost1[pert.copy_offset[static_cast<std::size_t>(ed.i)] + static_cast<std::size_t>(k)] += (c - a) / mi;
    for (int l = 0; l < static_cast<int>(mj); ++l) cost1[pert.copy_offset[static_cast<std::size_t>(ed.j)] + static_cast<std::size_t>(l)] += (d - c) / mj;
    weight[e] = std::max(0.0, b + c - a - d) / (mi * mj);
    scale = std::max(scale, std::abs(b + c - a - d));
    if (weight[e] > 0) arcs += static_cast<std::size_t>(mi * mj);
  }
  for (std::size_t v = 0; v < total; ++v) scale = std::max({scale, std::abs(cost0[v]), std::abs(cost1[v])});

  PushRelabelGraph graph(static_cast<int>(total), 1e-12 * scale);
  graph.reserve_edges(arcs);
  for (std::size_t v = 0; v < total; ++v) {
    const double delta = cost1[v] - cost0[v];
    if (delta > 0) graph.add_terminal_weights(static_cast<int>(v), delta, 0.0);
    if (delta < 0) graph.add_terminal_weights(static_cast<int>(v), 0.0, -delta);
  }
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    if (!(weight[e] > 0)) continue;
    const auto& ed = model.edges()[e];
    const std::size_t oi = pert.copy_offset[static_cast<std::size_t>(ed.i)];
    const std::size_t oj = pert.copy_offset[static_cast<std::size_t>(ed.j)];
    for (int k = 0; k < pert.replication[static_cast<std::size_t>(ed.i)]; ++k)
      for (int l = 0; l < pert.replication[static_cast<std::size_t>(ed.j)]; ++l)
        graph.add_edge(static_cast<int>(oi) + k, static_cast<int>(oj) + l, weight[e], 0.0);
  }
  graph.maxflow();
  Configuration states(total);
  for (std::size_t v = 0; v < total; ++v) states[v] = graph.on_sink_side(static_cast<int>(v)) ? 1 : 0;
  return states;
}

}  // namespace

BoundEstimate lower_bound_logz(const PairwiseModel& model, std::span<const int> replication, std::uint64_t seed,
                               double epsilon, Strategy strategy) {
  require(epsilon >= 0.0, "epsilon must be nonnegative");
  check_replication(model, replication);
  require(!model.has_mask(), "masked models cannot be extended");
  const auto pert = averaged_copy_perturbation(model.cardinalities(), replication, seed, 0);

  double value;
  if (strategy != Strategy::bruteforce && !graphcut_rejection(model)) {
    value = extended_objective(model, pert, extended_graphcut(model, pert));
  } else {
    if (strategy == Strategy::graphcut) throw SolverRejected(*graphcut_rejection(model));
    const auto ext = build_extended_model(model, replication);
    value = solve(ext.model, &pert.scaled, strategy).value;
  }

  BoundEstimate out;
  out.kind = BoundKind::lower;
  out.mean = value - epsilon * model.num_variables();
  out.samples = 1;
  out.per_sample = {out.mean};
  out.subsets = singleton_subsets(model.num_variables());
  out.failure_probability = lower_bound_failure_probability(model, replication, epsilon);
  return out;
}

}  // namespace perturbmax
