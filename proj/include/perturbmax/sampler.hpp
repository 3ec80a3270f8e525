#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "perturbmax/model.hpp"
#include "perturbmax/solvers.hpp"

namespace perturbmax {

struct SamplerConfig {
  std::size_t M_phi = 200;          // Monte-Carlo draws per phi estimate
  std::size_t max_restarts = 10000;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::automatic;
  /// Reuse each prefix's phi estimates across restarts and samples. When off,
  /// every attempt draws fresh perturbation streams.
  bool memoize_phi = true;
  /// Use the closed form phi = log sum_x exp theta(prefix, x) when a single
  /// free variable remains instead of its Monte-Carlo estimate.
  bool closed_form_tail = true;
};

struct SamplerTrace {
  bool accepted = false;
  std::optional<Configuration> sample;
  std::size_t restarts = 0;
  /// p_j(r) for every round of the final attempt (after clamping).
  std::vector<double> reject_probs;
  std::size_t map_calls = 0;
  /// Rounds whose estimated reject probability came out negative.
  std::size_t clamped_rounds = 0;
};

/// Sequential rejection sampler. Round j draws x_j with probability
/// exp(phi_j(x_1..x_j) - phi_{j-1}(x_1..x_{j-1})) or rejects with the
/// remaining mass, where phi_j is the expected perturbed max over the free
/// suffix. All candidates of one round share the same perturbation draws.
class GibbsSampler {
 public:
  GibbsSampler(const PairwiseModel& model, SamplerConfig config);

  /// One sample with restarts. Sample k draws from stream (seed, k).
  SamplerTrace sample(std::uint64_t index);
  /// A single pass through the rounds without restarting.
  SamplerTrace attempt(std::uint64_t index);

  /// Estimated phi_0, the expected max of the fully perturbed model.
  double phi0();
  std::size_t map_calls() const { return map_calls_; }
  std::size_t clamped_rounds() const { return clamped_; }
  const SamplerConfig& config() const { return config_; }

 private:
  bool run(CounterRng& rng, std::uint64_t nonce, SamplerTrace& trace, Configuration& x);
  const std::vector<double>& candidates(const Configuration& prefix, std::uint64_t nonce);
  double root(std::uint64_t nonce);

  const PairwiseModel* model_;
  SamplerConfig config_;
  std::map<Configuration, std::vector<double>> cache_;
  std::optional<double> phi0_;
  std::size_t map_calls_ = 0;
  std::size_t clamped_ = 0;
};

SamplerTrace gibbs_sample(const PairwiseModel& model, const SamplerConfig& config, std::uint64_t index = 0);

struct AcceptanceEstimate {
  double rate = 0.0;
  double lower = 0.0;  // 95% Wilson interval
  double upper = 0.0;
  std::size_t accepted = 0;
  std::size_t trials = 0;
  double phi0 = 0.0;
  std::size_t clamped_rounds = 0;
};

/// Fraction of single attempts that accept, over `trials` independent attempts.
AcceptanceEstimate acceptance_rate(const PairwiseModel& model, std::size_t trials, const SamplerConfig& config);

/// 95% Wilson score interval for k successes in n trials.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct ComplexityOptions {
  std::vector<GridShape> sizes;
  double field_range = 1.0;
  double coupling_range = 1.0;
  CouplingMode coupling_mode = CouplingMode::attractive;
  std::size_t seeds = 10;
  std::size_t M_upper = 100;
  int replication = 100;
  std::uint64_t seed = 0;
  bool with_oracle = true;
  /// When positive, also measure -log(acceptance) with this many attempts on
  /// instances small enough for the sampler.
  std::size_t acceptance_trials = 0;
  SamplerConfig sampler;
  int jobs = 1;
};

struct ComplexityRow {
  int height = 0;
  int width = 0;
  std::uint64_t instance_seed = 0;
  int n = 0;
  double upper = 0.0;
  double lower = 0.0;
  double gap = 0.0;
  double gap_per_variable = 0.0;
  std::optional<double> oracle_logz;
  std::optional<double> true_gap;           // upper - log Z
  std::optional<double> acceptance_gap;     // -log(empirical acceptance)
};

/// Instance seed for replicate `k` of grid size `size` in a profile run.
std::uint64_t profile_instance_seed(std::uint64_t seed, GridShape size, std::size_t k);

std::vector<ComplexityRow> complexity_profile(const ComplexityOptions& options);

}  // namespace perturbmax
