#include "perturbmax/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "perturbmax/errors.hpp"
#include "perturbmax/parallel.hpp"
#include "perturbmax/solvers.hpp"

namespace perturbmax {

namespace {

void check_mgf_domain(double lambda, double a) {
  if (!(a > 0.0)) throw std::domain_error("gradient bound a must be positive");
  if (!(lambda >= 0.0) || !(lambda * a < 1.0)) throw std::domain_error("MGF bounds need 0 <= lambda a < 1");
}

void check_radius_args(double a, double M, double delta) {
  require(a > 0.0, "gradient bound a must be positive");
  require(M >= 1.0, "sample count must be at least 1");
  require(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
}

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

Moments central_moments(const std::vector<double>& v) {
  Moments out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  for (double x : v) {
    const double d = (x - out.mean) * (x - out.mean);
    out.m2 += d;
    out.m4 += d * d;
  }
  out.m2 /= static_cast<double>(v.size());
  out.m4 /= static_cast<double>(v.size());
  return out;
}

}  // namespace

double mgf_bound_poincare(double lambda, double a) {
  check_mgf_domain(lambda, a);
  return (1.0 + lambda * a) / (1.0 - lambda * a);
}

double mgf_bound_sobolev(double lambda, double a) {
  check_mgf_domain(lambda, a);
  const double la = lambda * a;
  return std::exp(2.0 * a * a * lambda * lambda * (5.0 - la) / (1.0 - la) + 8.0 * la * std::log1p(-la));
}

double deviation_radius_poincare(double a, double M, double delta) {
  check_radius_args(a, M, delta);
  const double s = 1.0 + std::sqrt(std::log(1.0 / delta) / (2.0 * M));
  return 2.0 * a * s * s;
}

double deviation_radius_sobolev(double a, double M, double delta) {
  check_radius_args(a, M, delta);
  const double L = std::log(1.0 / delta);
  return a * std::max(4.0 * L / M, std::sqrt(32.0 * L / M));
}

double best_deviation(double a, double M, double delta) {
  return std::min(deviation_radius_poincare(a, M, delta), deviation_radius_sobolev(a, M, delta));
}

ProductLemmaResult product_lemma_check(double lambda, double a, double C, int terms) {
  require(terms >= 1, "product needs at least one factor");
  require(lambda >= 0.0 && a > 0.0 && C > 0.0, "product lemma needs lambda >= 0, a > 0, C > 0");
  const double t = lambda * a * std::sqrt(C);
  if (!(t < 2.0)) throw std::domain_error("product lemma needs lambda a sqrt(C) < 2");
  const double x = t * t;
  ProductLemmaResult out;
  double log_lhs = 0.0;
  double pow2 = 1.0;
  double pow4 = 4.0;
  for (int i = 0; i < terms; ++i) {
    log_lhs -= pow2 * std::log1p(-x / pow4);
    pow2 *= 2.0;
    pow4 *= 4.0;
  }
  out.log_lhs = log_lhs;
  out.lhs = std::exp(log_lhs);
  out.rhs = (2.0 + t) / (2.0 - t);
  // -log(1 - y) <= y / (1 - y) and the omitted y_i shrink geometrically.
  const double y_first = x / pow4;
  out.tail_log_bound = x * std::ldexp(1.0, -terms - 1) / (1.0 - y_first);
  return out;
}

std::string to_string(PoincareFunction f) {
  switch (f) {
    case PoincareFunction::coordinate:
      return "coordinate";
    case PoincareFunction::linear:
      return "linear";
    case PoincareFunction::max_of_k:
      return "max";
    case PoincareFunction::log_sum_exp:
      return "logsumexp";
    case PoincareFunction::perturbmax_value:
      return "perturbmax";
  }
  return "coordinate";
}

PoincareFunction poincare_function_from_string(const std::string& s) {
  for (auto f : {PoincareFunction::coordinate, PoincareFunction::linear, PoincareFunction::max_of_k,
                 PoincareFunction::log_sum_exp, PoincareFunction::perturbmax_value})
    if (to_string(f) == s) return f;
  throw ContractError("unknown test function '" + s + "'");
}

bool PoincareCheck::holds(double sigmas) const {
  return variance <= gradient_term + sigmas * std::hypot(variance_se, gradient_se);
}

PoincareCheck empirical_poincare_check(const GradientFn& f, int dim, std::size_t samples, std::uint64_t seed) {
  require(dim >= 1, "noise dimension must be positive");
  require(samples >= 2, "need at least two samples");
  CounterRng rng(stream_key({tag(StreamTag::poincare), seed}));
  std::vector<double> noise(static_cast<std::size_t>(dim)), grad(static_cast<std::size_t>(dim));
  std::vector<double> values(samples), grad_sq(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& g : noise) g = sample_gumbel(rng);
    std::fill(grad.begin(), grad.end(), 0.0);
    values[s] = f(noise, grad);
    double g2 = 0.0;
    for (double g : grad) g2 += g * g;
    grad_sq[s] = g2;
  }
  const auto mv = central_moments(values);
  const auto mg = central_moments(grad_sq);
  const double n = static_cast<double>(samples);
  PoincareCheck out;
  out.samples = samples;
  out.variance = mv.m2 * n / (n - 1.0);
  out.variance_se = std::sqrt(std::max(0.0, mv.m4 - mv.m2 * mv.m2) / n);
  out.gradient_term = 4.0 * mg.mean;
  out.gradient_se = 4.0 * std::sqrt(mg.m2 / n);
  return out;
}

PoincareCheck empirical_poincare_check(PoincareFunction f, int dim, std::size_t samples, std::uint64_t seed,
                                       const PairwiseModel* model) {
  switch (f) {
    case PoincareFunction::coordinate:
      return empirical_poincare_check(
          [](std::span<const double> g, std::span<double> grad) {
            grad[0] = 1.0;
            return g[0];
          },
          dim, samples, seed);
    case PoincareFunction::linear:
      return empirical_poincare_check(
          [](std::span<const double> g, std::span<double> grad) {
            double v = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
              grad[i] = static_cast<double>(i + 1) / static_cast<double>(g.size());
              v += grad[i] * g[i];
            }
            return v;
          },
          dim, samples, seed);
    case PoincareFunction::max_of_k:
      return empirical_poincare_check(
          [](std::span<const double> g, std::span<double> grad) {
            const auto it = std::max_element(g.begin(), g.end());
            grad[static_cast<std::size_t>(it - g.begin())] = 1.0;
            return *it;
          },
          dim, samples, seed);
    case PoincareFunction::log_sum_exp:
      return empirical_poincare_check(
          [](std::span<const double> g, std::span<double> grad) {
            const double m = *std::max_element(g.begin(), g.end());
            double z = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) z += (grad[i] = std::exp(g[i] - m));
            for (double& p : grad) p /= z;
            return m + std::log(z);
          },
          dim, samples, seed);
    case PoincareFunction::perturbmax_value: {
      require(model != nullptr, "the perturb-max test function needs a model");
      const auto subsets = singleton_subsets(model->num_variables());
      std::vector<std::size_t> base;
      int total = 0;
      for (int i = 0; i < model->num_variables(); ++i) {
        base.push_back(static_cast<std::size_t>(total));
        total += model->cardinality(i);
      }
      PerturbationSet pert;
      pert.subsets = subsets;
      for (int i = 0; i < model->num_variables(); ++i) {
        pert.local_cards.push_back({model->cardinality(i)});
        pert.tables.emplace_back(static_cast<std::size_t>(model->cardinality(i)));
      }
      return empirical_poincare_check(
          [&](std::span<const double> g, std::span<double> grad) {
            for (std::size_t i = 0; i < pert.tables.size(); ++i)
              std::copy_n(g.begin() + static_cast<std::ptrdiff_t>(base[i]), pert.tables[i].size(), pert.tables[i].begin());
            const auto r = solve(*model, &pert);
            for (std::size_t i = 0; i < base.size(); ++i) grad[base[i] + static_cast<std::size_t>(r.argmax[i])] = 1.0;
            return r.value;
          },
          total, samples, seed);
    }
  }
  throw ContractError("unknown test function");
}

std::string to_string(DeviationStatistic s) { return s == DeviationStatistic::logz_bound ? "logz" : "entropy"; }

DeviationStatistic deviation_statistic_from_string(const std::string& s) {
  if (s == "logz" || s == "logz_bound") return DeviationStatistic::logz_bound;
  if (s == "entropy" || s == "entropy_bound") return DeviationStatistic::entropy_bound;
  throw ContractError("unknown statistic '" + s + "'");
}

double DeviationHistogram::exceedance(double radius) const {
  if (deviations.empty()) return 0.0;
  const auto over = std::count_if(deviations.begin(), deviations.end(), [&](double d) { return d > radius; });
  return static_cast<double>(over) / static_cast<double>(deviations.size());
}

namespace {

// Smallest delta each bound certifies for radius r at M samples.
double poincare_delta(double a, double M, double r) {
  const double s = std::sqrt(r / (2.0 * a)) - 1.0;
  if (s <= 0.0) return 1.0;
  return std::min(1.0, std::exp(-2.0 * M * s * s));
}

double sobolev_delta(double a, double M, double r) {
  const double q = r / a;
  const double L = q >= 8.0 ? M * q / 4.0 : M * q * q / 32.0;
  return std::min(1.0, std::exp(-L));
}

}  // namespace

DeviationHistogram deviation_histogram(const PairwiseModel& model, const SubsetFamily& subsets,
                                       DeviationStatistic statistic, std::size_t samples_per_mean, std::size_t trials,
                                       std::uint64_t seed, int bins, int jobs) {
  require(samples_per_mean >= 1 && trials >= 1, "histogram needs at least one trial and one sample per mean");
  require(bins >= 1, "histogram needs at least one bin");
  auto draw = [&](std::uint64_t stream, std::size_t k) {
    const auto pert = sample_perturbation(model, subsets, stream, k);
    const auto r = solve(model, &pert);
    return statistic == DeviationStatistic::logz_bound ? r.value : pert.value(r.argmax);
  };

  DeviationHistogram out;
  out.samples_per_mean = samples_per_mean;
  out.a = std::sqrt(static_cast<double>(subsets.size()));
  out.reference_samples = 100 * samples_per_mean;
  const std::uint64_t ref_stream = stream_key({seed, 0});
  const auto ref = parallel_map(out.reference_samples, jobs, [&](std::size_t k) { return draw(ref_stream, k); });
  for (double v : ref) out.reference_mean += v;
  out.reference_mean /= static_cast<double>(ref.size());

  out.deviations = parallel_map(trials, jobs, [&](std::size_t t) {
    const std::uint64_t stream = stream_key({seed, t + 1});
    double mean = 0.0;
    for (std::size_t k = 0; k < samples_per_mean; ++k) mean += draw(stream, k);
    return std::abs(mean / static_cast<double>(samples_per_mean) - out.reference_mean);
  });

  const double top = std::max(*std::max_element(out.deviations.begin(), out.deviations.end()), 1e-12);
  out.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) out.bin_edges[static_cast<std::size_t>(b)] = top * b / bins;
  out.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double d : out.deviations) {
    auto b = static_cast<std::size_t>(d / top * bins);
    out.counts[std::min(b, static_cast<std::size_t>(bins) - 1)]++;
  }
  const auto M = static_cast<double>(samples_per_mean);
  for (int b = 0; b <= bins; ++b) {
    const double r = out.bin_edges[static_cast<std::size_t>(b)];
    out.curve.push_back({r, out.exceedance(r), poincare_delta(out.a, M, r), sobolev_delta(out.a, M, r)});
  }
  return out;
}

}  // namespace perturbmax
