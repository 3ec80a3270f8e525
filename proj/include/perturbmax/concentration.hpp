#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "perturbmax/gumbel.hpp"
#include "perturbmax/model.hpp"

namespace perturbmax {

// Moment-generating-function multipliers for a function of Gumbel noise whose
// gradient norm is bounded by a. Both need 0 <= lambda * a < 1 and throw
// std::domain_error otherwise.

/// (1 + lambda a) / (1 - lambda a)
double mgf_bound_poincare(double lambda, double a);
/// exp(2 a^2 lambda^2 (5 - lambda a) / (1 - lambda a) + 8 a lambda log(1 - lambda a))
double mgf_bound_sobolev(double lambda, double a);

/// 2a (1 + sqrt(log(1/delta) / (2M)))^2
double deviation_radius_poincare(double a, double M, double delta);
/// a max(4 L / M, sqrt(32 L / M)) with L = log(1/delta)
double deviation_radius_sobolev(double a, double M, double delta);
double best_deviation(double a, double M, double delta);

struct ProductLemmaResult {
  double lhs = 1.0;      // truncated product over i < terms
  double log_lhs = 0.0;
  double rhs = 1.0;      // (2 + lambda a sqrt(C)) / (2 - lambda a sqrt(C))
  /// Upper bound on log(full product) - log_lhs from the omitted factors.
  double tail_log_bound = 0.0;
};

/// prod_{i >= 0} (1 - lambda^2 a^2 C / 4^(i+1))^(-2^i), truncated to `terms`
/// factors and evaluated in the log domain. Needs lambda a sqrt(C) < 2.
ProductLemmaResult product_lemma_check(double lambda, double a, double C, int terms);

/// Scalar test function of a noise vector; writes its gradient into `grad`.
using GradientFn = std::function<double(std::span<const double> noise, std::span<double> grad)>;

enum class PoincareFunction { coordinate, linear, max_of_k, log_sum_exp, perturbmax_value };
std::string to_string(PoincareFunction f);
PoincareFunction poincare_function_from_string(const std::string& s);

struct PoincareCheck {
  double variance = 0.0;
  double variance_se = 0.0;
  double gradient_term = 0.0;  // 4 E |grad f|^2
  double gradient_se = 0.0;
  std::size_t samples = 0;
  bool holds(double sigmas = 3.0) const;
};

/// Monte-Carlo estimate of Var f(g) and 4 E|grad f(g)|^2 for g a vector of
/// `dim` i.i.d. zero-mean Gumbels.
PoincareCheck empirical_poincare_check(const GradientFn& f, int dim, std::size_t samples, std::uint64_t seed);

/// Built-in test functions. `dim` is ignored for perturbmax_value, whose noise
/// dimension is the number of singleton perturbation values of `model`.
PoincareCheck empirical_poincare_check(PoincareFunction f, int dim, std::size_t samples, std::uint64_t seed,
                                       const PairwiseModel* model = nullptr);

enum class DeviationStatistic { logz_bound, entropy_bound };
std::string to_string(DeviationStatistic s);
DeviationStatistic deviation_statistic_from_string(const std::string& s);

struct DeviationHistogram {
  double reference_mean = 0.0;
  std::size_t reference_samples = 0;
  double a = 0.0;
  std::size_t samples_per_mean = 0;
  std::vector<double> deviations;     // |trial mean - reference| per trial
  std::vector<double> bin_edges;      // bins + 1 edges
  std::vector<std::size_t> counts;    // per bin
  /// Rows of the bound overlay: radius r, empirical P(dev > r), and the delta
  /// each bound assigns to r.
  struct Row {
    double radius;
    double exceedance;
    double delta_poincare;
    double delta_sobolev;
  };
  std::vector<Row> curve;

  double exceedance(double radius) const;
};

/// Deviations of M-sample means of a perturb-max statistic from a reference
/// mean computed with 100 M independent samples.
DeviationHistogram deviation_histogram(const PairwiseModel& model, const SubsetFamily& subsets,
                                       DeviationStatistic statistic, std::size_t samples_per_mean, std::size_t trials,
                                       std::uint64_t seed, int bins = 40, int jobs = 1);

}  // namespace perturbmax
