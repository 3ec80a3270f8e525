#include "perturbmax/gumbel.hpp"

#include <numeric>

#include "perturbmax/errors.hpp"

namespace perturbmax {

SubsetFamily singleton_subsets(int n) {
  SubsetFamily out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back({i});
  return out;
}

SubsetFamily full_subset(int n) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  return {all};
}

double PerturbationSet::value(std::span<const int> x) const {
  double total = 0.0;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const auto& alpha = subsets[s];
    const auto& cards = local_cards[s];
    std::size_t idx = 0;
    for (std::size_t p = 0; p < alpha.size(); ++p) {
      idx = idx * static_cast<std::size_t>(cards[p]) + static_cast<std::size_t>(x[static_cast<std::size_t>(alpha[p])]);
    }
    total += tables[s][idx];
  }
  return total;
}

bool PerturbationSet::singletons_only() const {
  for (const auto& alpha : subsets)
    if (alpha.size() != 1) return false;
  return true;
}

std::size_t PerturbationSet::value_count() const {
  std::size_t total = 0;
  for (const auto& t : tables) total += t.size();
  return total;
}

PerturbationSet sample_perturbation(const PairwiseModel& model, const SubsetFamily& subsets, std::uint64_t seed,
                                    std::uint64_t index) {
  require(!subsets.empty(), "perturbation needs at least one subset");
  PerturbationSet out;
  out.subsets = subsets;
  out.base_seed = seed;
  out.sample_index = index;
  out.local_cards.reserve(subsets.size());
  out.tables.reserve(subsets.size());
  const std::uint64_t sample_key = stream_key({tag(StreamTag::perturbation), seed, index});
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const auto& alpha = subsets[s];
    require(!alpha.empty(), "perturbation subsets must be nonempty");
    std::vector<int> cards;
    cards.reserve(alpha.size());
    std::uint64_t size = 1;
    for (int v : alpha) {
      require(v >= 0 && v < model.num_variables(), "subset variable out of range");
      cards.push_back(model.cardinality(v));
      size *= static_cast<std::uint64_t>(model.cardinality(v));
      if (size > kEnumerationCap) throw CapacityError("perturbation subset table exceeds the enumeration cap");
    }
    std::vector<double> table(size);
    const std::uint64_t subset_key = mix64(sample_key ^ mix64(s));
    for (std::uint64_t l = 0; l < size; ++l) table[l] = gumbel_from_uniform(uniform_at(subset_key ^ mix64(l + 0x51ed27ULL)));
    out.local_cards.push_back(std::move(cards));
    out.tables.push_back(std::move(table));
  }
  return out;
}

double ExtendedPerturbation::averaged(int i, std::span<const int> copy_states) const {
  const auto m = static_cast<std::size_t>(replication[static_cast<std::size_t>(i)]);
  require(copy_states.size() == m, "copy state count does not match the replication count");
  double total = 0.0;
  const std::size_t base = copy_offset[static_cast<std::size_t>(i)];
  for (std::size_t k = 0; k < m; ++k) total += raw.tables[base + k][static_cast<std::size_t>(copy_states[k])];
  return total / static_cast<double>(m);
}

ExtendedPerturbation averaged_copy_perturbation(std::span<const int> cardinalities, std::span<const int> replication,
                                                std::uint64_t seed, std::uint64_t index) {
  require(cardinalities.size() == replication.size(), "one replication count per variable is required");
  ExtendedPerturbation out;
  out.replication.assign(replication.begin(), replication.end());
  std::size_t total = 0;
  for (int m : replication) {
    require(m >= 1, "replication counts must be at least 1");
    out.copy_offset.push_back(total);
    total += static_cast<std::size_t>(m);
  }
  // Same lineage as sample_perturbation with singleton subsets over the
  // extended variables, so M_i = 1 reproduces it exactly.
  const std::uint64_t sample_key = stream_key({tag(StreamTag::perturbation), seed, index});
  for (auto* set : {&out.raw, &out.scaled}) {
    set->base_seed = seed;
    set->sample_index = index;
    set->subsets.reserve(total);
    set->local_cards.reserve(total);
    set->tables.reserve(total);
  }
  for (std::size_t i = 0; i < cardinalities.size(); ++i) {
    const int k = cardinalities[i];
    const double inv_m = 1.0 / static_cast<double>(replication[i]);
    for (int c = 0; c < replication[i]; ++c) {
      const int ext = static_cast<int>(out.copy_offset[i]) + c;
      const std::uint64_t copy_key = mix64(sample_key ^ mix64(static_cast<std::uint64_t>(ext)));
      std::vector<double> raw(static_cast<std::size_t>(k));
      std::vector<double> scaled(static_cast<std::size_t>(k));
      for (int x = 0; x < k; ++x) {
        raw[static_cast<std::size_t>(x)] = gumbel_from_uniform(uniform_at(copy_key ^ mix64(static_cast<std::uint64_t>(x) + 0x51ed27ULL)));
        scaled[static_cast<std::size_t>(x)] = raw[static_cast<std::size_t>(x)] * inv_m;
      }
      for (auto* set : {&out.raw, &out.scaled}) {
        set->subsets.push_back({ext});
        set->local_cards.push_back({k});
      }
      out.raw.tables.push_back(std::move(raw));
      out.scaled.tables.push_back(std::move(scaled));
    }
  }
  return out;
}

}  // namespace perturbmax
