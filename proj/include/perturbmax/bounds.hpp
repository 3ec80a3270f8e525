#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perturbmax/gumbel.hpp"
#include "perturbmax/model.hpp"
#include "perturbmax/solvers.hpp"

namespace perturbmax {

enum class BoundKind { upper, lower, exact_mc };
std::string to_string(BoundKind kind);

struct BoundEstimate {
  BoundKind kind = BoundKind::upper;
  double mean = 0.0;
  std::size_t samples = 0;
  std::vector<double> per_sample;
  double std_error = 0.0;         // sample standard deviation / sqrt(M)
  double deviation_radius = 0.0;  // log-Sobolev radius with a = sqrt(|A|)
  double delta = 0.05;
  SubsetFamily subsets;
  /// Probability that a lower bound fails; +inf when epsilon = 0.
  std::optional<double> failure_probability;
};

/// Throws ContractError unless the subsets are non-empty, in range and cover
/// every variable.
void require_cover(const PairwiseModel& model, const SubsetFamily& subsets);

/// Sample standard deviation of v divided by sqrt(|v|); 0 for fewer than two values.
double sample_std_error(std::span<const double> v, double mean);

struct BoundOptions {
  Strategy strategy = Strategy::automatic;
  double delta = 0.05;
  int jobs = 1;
};

/// Mean over M perturbations of max_x {theta(x) + sum_alpha gamma_alpha(x_alpha)}.
/// Sample k uses sample_perturbation(model, subsets, seed, k).
BoundEstimate upper_bound_logz(const PairwiseModel& model, const SubsetFamily& subsets, std::size_t M,
                               std::uint64_t seed, const BoundOptions& options = {});

/// Monte-Carlo estimate of E max over x_{j+1..n} of theta(prefix, x) plus
/// singleton perturbations on the free variables. With a full prefix the
/// result is theta(prefix) exactly. Sample k perturbs the clamped suffix model
/// with stream (seed, k), so callers get common random numbers across prefixes
/// of equal length by passing the same seed.
double partial_phi(const PairwiseModel& model, std::span<const int> prefix, std::size_t M, std::uint64_t seed,
                   Strategy strategy = Strategy::automatic);

/// Nested estimate E_{g1} max_{x1} ... E_{gn} max_{xn} {theta(x) + sum_i g_i(x_i)}
/// with M_inner draws per expectation; for binary models with n <= 6.
double sequential_logz(const PairwiseModel& model, std::size_t M_inner, std::uint64_t seed);

/// Replicated model: copy k of variable i is extended variable
/// copy_offset[i] + k. Unary tables are divided by M_i and every copy pair of
/// an edge (i, j) carries the edge table divided by M_i M_j.
struct ExtendedModel {
  PairwiseModel model;
  std::vector<int> replication;
  std::vector<std::size_t> copy_offset;

  int extended_index(int i, int k) const { return static_cast<int>(copy_offset[static_cast<std::size_t>(i)]) + k; }
  /// Configuration with every copy of variable i set to x_i.
  Configuration replicate(std::span<const int> x) const;
};

inline constexpr std::size_t kExtendedCap = 100000;

ExtendedModel build_extended_model(const PairwiseModel& model, std::span<const int> replication);

/// Uniform replication count m for every variable.
std::vector<int> uniform_replication(const PairwiseModel& model, int m);

/// sum_i pi^2 prod_{j=2}^{i} |X_{j-1}| / (6 M_i epsilon^2), +inf at epsilon = 0.
double lower_bound_failure_probability(const PairwiseModel& model, std::span<const int> replication, double epsilon);

/// One MAP of the extended model under averaged-copy perturbations, minus
/// epsilon n. Binary attractive models are solved by a min-cut network built
/// directly from the base model; anything else goes through the materialized
/// extended model and the generic solver.
BoundEstimate lower_bound_logz(const PairwiseModel& model, std::span<const int> replication, std::uint64_t seed,
                               double epsilon = 0.0, Strategy strategy = Strategy::automatic);

/// Extended objective theta^(x~) + sum_i gamma~_i(x~_i) evaluated from per-copy
/// states, without materializing the extended model.
double extended_objective(const PairwiseModel& model, const ExtendedPerturbation& perturbation,
                          std::span<const int> extended_states);

}  // namespace perturbmax
