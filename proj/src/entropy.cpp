#include "perturbmax/entropy.hpp"

#include <cmath>

#include "perturbmax/concentration.hpp"
#include "perturbmax/errors.hpp"
#include "perturbmax/parallel.hpp"

namespace perturbmax {

namespace {

bool is_full(const PairwiseModel& model, const SubsetFamily& subsets) {
  if (subsets.size() != 1 || subsets[0].size() != static_cast<std::size_t>(model.num_variables())) return false;
  for (int v = 0; v < model.num_variables(); ++v)
    if (subsets[0][static_cast<std::size_t>(v)] != v) return false;
  return true;
}

struct Draw {
  Configuration argmax;
  double noise = 0.0;
};

// Full-dimensional perturbations give one Gumbel per joint configuration, so
// the argmax is a scan over the table rather than a solver call.
Draw draw(const PairwiseModel& model, const SubsetFamily& subsets, bool full, std::uint64_t seed, std::uint64_t k,
          Strategy strategy) {
  const auto pert = sample_perturbation(model, subsets, seed, k);
  if (!full) {
    auto r = solve(model, &pert, strategy);
    const double g = pert.value(r.argmax);
    return {std::move(r.argmax), g};
  }
  Draw best;
  double best_value = kNegInf;
  ConfigurationCursor cursor(model);
  while (cursor.next()) {
    const double g = pert.tables[0][cursor.index()];
    const double v = model.evaluate_unchecked(cursor.current()) + g;
    if (v > best_value) {
      best_value = v;
      best.argmax.assign(cursor.current().begin(), cursor.current().end());
      best.noise = g;
    }
  }
  return best;
}

}  // namespace

BoundEstimate entropy_upper_bound(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                                  std::uint64_t seed, const BoundOptions& options) {
  require(M >= 1, "need at least one perturbation sample");
  require_cover(model, subsets);
  const bool full = is_full(model, subsets);
  if (full) checked_config_count(model);
  BoundEstimate out;
  out.kind = BoundKind::upper;
  out.samples = M;
  out.subsets = subsets;
  out.delta = options.delta;
  out.per_sample = parallel_map(M, options.jobs, [&](std::size_t k) {
    return draw(model, subsets, full, seed, k, options.strategy).noise;
  });
  for (double v : out.per_sample) out.mean += v;
  out.mean /= static_cast<double>(M);
  out.std_error = sample_std_error(out.per_sample, out.mean);
  out.deviation_radius =
      deviation_radius_sobolev(std::sqrt(static_cast<double>(subsets.size())), static_cast<double>(M), options.delta);
  return out;
}

BoundEstimate uncertainty_measure(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                                  std::uint64_t seed, const BoundOptions& options) {
  return entropy_upper_bound(model, subsets, M, seed, options);
}

std::vector<double> ArgmaxDistribution::frequencies() const {
  std::vector<double> f(counts.size(), 0.0);
  if (samples == 0) return f;
  for (std::size_t i = 0; i < counts.size(); ++i) f[i] = static_cast<double>(counts[i]) / static_cast<double>(samples);
  return f;
}

ArgmaxDistribution perturbmax_distribution(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                                           std::uint64_t seed, const BoundOptions& options) {
  require(M >= 1, "need at least one perturbation sample");
  require_cover(model, subsets);
  const std::uint64_t size = checked_config_count(model, kDistributionCap);
  const bool full = is_full(model, subsets);
  const auto indices = parallel_map(M, options.jobs, [&](std::size_t k) {
    const auto d = draw(model, subsets, full, seed, k, options.strategy);
    return configuration_index(model.cardinalities(), d.argmax);
  });
  ArgmaxDistribution out;
  out.counts.assign(size, 0);
  out.samples = M;
  for (auto i : indices) ++out.counts[i];
  return out;
}

double shannon_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double plugin_entropy_miller_madow(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  std::size_t occupied = 0;
  for (auto c : counts) {
    total += c;
    if (c > 0) ++occupied;
  }
  require(total > 0, "count table is empty");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
  return h + static_cast<double>(occupied - 1) / (2.0 * n);
}

double marginal_entropy_bound(const std::vector<std::vector<double>>& marginals) {
  double h = 0.0;
  for (const auto& m : marginals) {
    double sum = 0.0;
    for (double v : m) {
      require(v >= -1e-12, "marginal has a negative entry");
      sum += v;
    }
    require(std::abs(sum - 1.0) < 1e-6, "marginal does not sum to one");
    h += shannon_entropy(m);
  }
  return h;
}

double marginal_entropy_bound(const ExactSummary& summary) { return marginal_entropy_bound(summary.marginals); }

std::vector<std::vector<double>> empirical_marginals(const PairwiseModel& model, const ArgmaxDistribution& dist) {
  require(dist.samples > 0, "distribution has no samples");
  std::vector<std::vector<double>> m(static_cast<std::size_t>(model.num_variables()));
  for (int i = 0; i < model.num_variables(); ++i) m[static_cast<std::size_t>(i)].assign(model.cardinality(i), 0.0);
  for (std::uint64_t idx = 0; idx < dist.counts.size(); ++idx) {
    if (dist.counts[idx] == 0) continue;
    const auto x = configuration_from_index(model.cardinalities(), idx);
    const double w = static_cast<double>(dist.counts[idx]) / static_cast<double>(dist.samples);
    for (std::size_t i = 0; i < x.size(); ++i) m[i][static_cast<std::size_t>(x[i])] += w;
  }
  return m;
}

}  // namespace perturbmax
