#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "perturbmax/model.hpp"

namespace perturbmax {

/// Largest slice (grid column) state space the transfer-matrix oracle accepts.
inline constexpr std::uint64_t kSliceCap = std::uint64_t{1} << 20;

struct ExactSummary {
  double log_partition = 0.0;
  std::vector<std::vector<double>> marginals;  // per variable, per state
  double entropy = 0.0;                        // nats
  /// Gibbs probability per configuration index (lexicographic, last variable
  /// fastest); only filled by the enumerating oracle.
  std::optional<std::vector<double>> gibbs_table;
};

/// Max-shifted log-sum-exp; kNegInf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

/// Exact summary by enumerating every feasible configuration.
ExactSummary exact_bruteforce(const PairwiseModel& model);

/// Exact summary for grid models by slice-wise elimination in the log domain.
/// Slices run along the longer grid side, so each slice holds min(h, w)
/// variables. Entropy is log Z - E_p[theta], with E_p[theta] carried through
/// the forward pass; marginals come from a backward pass over slice messages.
ExactSummary exact_transfer_matrix(const PairwiseModel& model);

/// i.i.d. exact Gibbs samples for a grid model: forward slice messages, then
/// backward sequential sampling of one slice at a time. Sample k uses the
/// stream (seed, k).
std::vector<Configuration> exact_gibbs_sample(const PairwiseModel& model, std::size_t count, std::uint64_t seed);

/// Transfer matrix when the model is a grid with a small enough slice,
/// otherwise enumeration when under the cap. Throws CapacityError when neither
/// applies.
ExactSummary exact_summary(const PairwiseModel& model);

/// Total-variation distance between two distributions on the same support.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace perturbmax
