#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "perturbmax/bounds.hpp"
#include "perturbmax/oracle.hpp"

namespace perturbmax {

/// Mean over M draws of sum_alpha gamma_alpha(x^gamma_alpha), where x^gamma is
/// the perturbed argmax. Draw k uses the same perturbation as draw k of
/// upper_bound_logz with the same seed.
BoundEstimate entropy_upper_bound(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                                  std::uint64_t seed, const BoundOptions& options = {});

/// The same quantity read as the uncertainty measure U(p).
BoundEstimate uncertainty_measure(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                                  std::uint64_t seed, const BoundOptions& options = {});

inline constexpr std::uint64_t kDistributionCap = std::uint64_t{1} << 16;

struct ArgmaxDistribution {
  std::vector<std::uint64_t> counts;  // per configuration index
  std::size_t samples = 0;

  std::vector<double> frequencies() const;
};

/// Frequency table of the perturbed argmax over M draws. Needs |X| <= 2^16.
/// Full-dimensional perturbations ({0..n-1} as one subset) are solved by a
/// direct scan of the joint table.
ArgmaxDistribution perturbmax_distribution(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                                           std::uint64_t seed, const BoundOptions& options = {});

/// -sum p log p over the nonzero entries of a probability vector.
double shannon_entropy(std::span<const double> p);

/// Plug-in entropy of a count table plus the Miller-Madow term (K - 1) / (2N),
/// with K the number of occupied cells.
double plugin_entropy_miller_madow(std::span<const std::uint64_t> counts);

/// sum_i H(p_i) over per-variable marginals.
double marginal_entropy_bound(const std::vector<std::vector<double>>& marginals);
double marginal_entropy_bound(const ExactSummary& summary);

/// Per-variable marginals of a count table over configuration indices.
std::vector<std::vector<double>> empirical_marginals(const PairwiseModel& model, const ArgmaxDistribution& dist);

}  // namespace perturbmax
