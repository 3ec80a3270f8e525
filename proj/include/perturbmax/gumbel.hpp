#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "perturbmax/model.hpp"
#include "perturbmax/rng.hpp"

namespace perturbmax {

inline constexpr double kEulerGamma = std::numbers::egamma;
inline constexpr double kGumbelVariance = std::numbers::pi * std::numbers::pi / 6.0;
inline const double kGumbelStdDev = std::sqrt(kGumbelVariance);

/// Zero-mean Gumbel by inversion of G(t) = exp(-exp(-(t + c))).
inline double gumbel_from_uniform(double u) { return -std::log(-std::log(u)) - kEulerGamma; }

inline double gumbel_cdf(double t) { return std::exp(-std::exp(-(t + kEulerGamma))); }

inline double sample_gumbel(CounterRng& rng) { return gumbel_from_uniform(rng.uniform_open()); }

using SubsetFamily = std::vector<std::vector<int>>;

SubsetFamily singleton_subsets(int n);
SubsetFamily full_subset(int n);

/// Realized perturbation gamma_alpha(x_alpha) for a family of variable
/// subsets. Each table is row-major over the subset's variables in the order
/// listed (last fastest).
struct PerturbationSet {
  SubsetFamily subsets;
  std::vector<std::vector<int>> local_cards;  // |X_v| for each v in the subset
  std::vector<std::vector<double>> tables;
  std::uint64_t base_seed = 0;
  std::uint64_t sample_index = 0;

  /// sum_alpha gamma_alpha(x_alpha)
  double value(std::span<const int> x) const;
  bool singletons_only() const;
  std::size_t value_count() const;
};

/// Draws i.i.d. zero-mean Gumbel values for every (alpha, x_alpha). Value
/// (alpha ordinal s, local state l) comes from the lineage
/// (seed, index, s, l), so any sample is reproducible in isolation.
PerturbationSet sample_perturbation(const PairwiseModel& model, const SubsetFamily& subsets, std::uint64_t seed,
                                    std::uint64_t index);

/// Perturbation of the replicated model: one independent Gumbel table per copy
/// (i, k). `raw` holds gamma_{i,k} over the extended variables as singletons;
/// `scaled` holds the same values divided by M_i, the form they take in the
/// extended objective sum_i (1/M_i) sum_k gamma_{i,k}(x_{i,k}).
struct ExtendedPerturbation {
  std::vector<int> replication;
  std::vector<std::size_t> copy_offset;  // first extended index of each base variable
  PerturbationSet raw;
  PerturbationSet scaled;

  /// gamma~_i(x~_i) = (1/M_i) sum_k gamma_{i,k}(x_{i,k}) for one base variable.
  double averaged(int i, std::span<const int> copy_states) const;
};

ExtendedPerturbation averaged_copy_perturbation(std::span<const int> cardinalities, std::span<const int> replication,
                                                std::uint64_t seed, std::uint64_t index);

}  // namespace perturbmax
