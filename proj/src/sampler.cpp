#include "perturbmax/sampler.hpp"

#include <cmath>

#include "perturbmax/bounds.hpp"
#include "perturbmax/errors.hpp"
#include "perturbmax/oracle.hpp"
#include "perturbmax/parallel.hpp"

namespace perturbmax {

namespace {

std::uint64_t prefix_key(const Configuration& prefix) {
  std::uint64_t h = mix64(prefix.size());
  for (int v : prefix) h = mix64(h ^ mix64(static_cast<std::uint64_t>(v) + 1));
  return h;
}

// E max_x {theta(prefix, x) + gamma(x)} over the one remaining variable.
double tail_phi(const PairwiseModel& model, Configuration prefix) {
  const int last = model.num_variables() - 1;
  std::vector<double> values(static_cast<std::size_t>(model.cardinality(last)));
  prefix.push_back(0);
  for (int x = 0; x < model.cardinality(last); ++x) {
    prefix.back() = x;
    values[static_cast<std::size_t>(x)] = model.evaluate(prefix);
  }
  return log_sum_exp(values);
}

}  // namespace

GibbsSampler::GibbsSampler(const PairwiseModel& model, SamplerConfig config) : model_(&model), config_(config) {
  require(config_.M_phi >= 1, "M_phi must be at least 1");
  require(config_.max_restarts >= 1, "max_restarts must be at least 1");
  require(model.num_variables() >= 1, "sampler needs at least one variable");
}

double GibbsSampler::root(std::uint64_t nonce) {
  if (config_.memoize_phi && phi0_) return *phi0_;
  if (config_.closed_form_tail && model_->num_variables() == 1) {
    phi0_ = tail_phi(*model_, {});
    return *phi0_;
  }
  const std::uint64_t stream = stream_key({tag(StreamTag::sampler_phi), config_.seed, nonce, prefix_key({})});
  const double v = partial_phi(*model_, {}, config_.M_phi, stream, config_.strategy);
  map_calls_ += config_.M_phi;
  if (config_.memoize_phi) phi0_ = v;
  return v;
}

double GibbsSampler::phi0() { return root(0); }

const std::vector<double>& GibbsSampler::candidates(const Configuration& prefix, std::uint64_t nonce) {
  if (config_.memoize_phi) {
    if (auto it = cache_.find(prefix); it != cache_.end()) return it->second;
  } else {
    cache_.clear();
  }
  const int var = static_cast<int>(prefix.size());
  const int k = model_->cardinality(var);
  const bool last = var + 1 == model_->num_variables();
  const bool tail = config_.closed_form_tail && var + 2 == model_->num_variables();
  // Every candidate uses the same stream, so their suffix perturbations coincide.
  const std::uint64_t stream = stream_key({tag(StreamTag::sampler_phi), config_.seed, nonce, prefix_key(prefix)});
  std::vector<double> values(static_cast<std::size_t>(k));
  Configuration extended = prefix;
  extended.push_back(0);
  for (int x = 0; x < k; ++x) {
    extended.back() = x;
    if (tail) {
      values[static_cast<std::size_t>(x)] = tail_phi(*model_, extended);
    } else {
      values[static_cast<std::size_t>(x)] = partial_phi(*model_, extended, config_.M_phi, stream, config_.strategy);
      if (!last) map_calls_ += config_.M_phi;
    }
  }
  return cache_.emplace(prefix, std::move(values)).first->second;
}

bool GibbsSampler::run(CounterRng& rng, std::uint64_t nonce, SamplerTrace& trace, Configuration& x) {
  x.clear();
  trace.reject_probs.clear();
  double parent = root(nonce);
  for (int j = 0; j < model_->num_variables(); ++j) {
    const auto& cand = candidates(x, nonce);
    std::vector<double> p(cand.size());
    double total = 0.0;
    for (std::size_t s = 0; s < cand.size(); ++s) total += (p[s] = std::exp(cand[s] - parent));
    double reject = 1.0 - total;
    if (reject < 0.0) {
      for (double& v : p) v /= total;
      reject = 0.0;
      ++trace.clamped_rounds;
      ++clamped_;
    }
    trace.reject_probs.push_back(reject);
    double u = rng.uniform();
    std::size_t chosen = p.size();
    for (std::size_t s = 0; s < p.size(); ++s) {
      if (u < p[s]) {
        chosen = s;
        break;
      }
      u -= p[s];
    }
    if (chosen == p.size()) return false;
    parent = cand[chosen];
    x.push_back(static_cast<int>(chosen));
  }
  return true;
}

SamplerTrace GibbsSampler::attempt(std::uint64_t index) {
  const std::size_t calls_before = map_calls_;
  SamplerTrace trace;
  CounterRng rng(stream_key({tag(StreamTag::sampler_draw), config_.seed, index}));
  Configuration x;
  const std::uint64_t nonce = config_.memoize_phi ? 0 : stream_key({index, 0});
  trace.accepted = run(rng, nonce, trace, x);
  if (trace.accepted) trace.sample = x;
  trace.map_calls = map_calls_ - calls_before;
  return trace;
}

SamplerTrace GibbsSampler::sample(std::uint64_t index) {
  const std::size_t calls_before = map_calls_;
  SamplerTrace trace;
  CounterRng rng(stream_key({tag(StreamTag::sampler_draw), config_.seed, index}));
  Configuration x;
  for (std::size_t r = 0; r < config_.max_restarts; ++r) {
    const std::uint64_t nonce = config_.memoize_phi ? 0 : stream_key({index, r + 1});
    if (run(rng, nonce, trace, x)) {
      trace.accepted = true;
      trace.sample = x;
      break;
    }
    ++trace.restarts;
  }
  trace.map_calls = map_calls_ - calls_before;
  return trace;
}

SamplerTrace gibbs_sample(const PairwiseModel& model, const SamplerConfig& config, std::uint64_t index) {
  GibbsSampler sampler(model, config);
  return sampler.sample(index);
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

AcceptanceEstimate acceptance_rate(const PairwiseModel& model, std::size_t trials, const SamplerConfig& config) {
  require(trials >= 1, "need at least one trial");
  GibbsSampler sampler(model, config);
  AcceptanceEstimate out;
  out.trials = trials;
  out.phi0 = sampler.phi0();
  for (std::size_t t = 0; t < trials; ++t)
    if (sampler.attempt(t).accepted) ++out.accepted;
  out.rate = static_cast<double>(out.accepted) / static_cast<double>(trials);
  std::tie(out.lower, out.upper) = wilson_interval(out.accepted, trials);
  out.clamped_rounds = sampler.clamped_rounds();
  return out;
}

std::uint64_t profile_instance_seed(std::uint64_t seed, GridShape size, std::size_t k) {
  return stream_key({tag(StreamTag::model), seed, static_cast<std::uint64_t>(size.height),
                     static_cast<std::uint64_t>(size.width), k});
}

std::vector<ComplexityRow> complexity_profile(const ComplexityOptions& options) {
  require(!options.sizes.empty(), "profile needs at least one grid size");
  require(options.seeds >= 1, "profile needs at least one seed");
  std::vector<std::pair<GridShape, std::size_t>> jobs;
  for (const auto& s : options.sizes)
    for (std::size_t k = 0; k < options.seeds; ++k) jobs.emplace_back(s, k);

  return parallel_map(jobs.size(), options.jobs, [&](std::size_t idx) {
    const auto [shape, k] = jobs[idx];
    SpinGlassSpec spec;
    spec.height = shape.height;
    spec.width = shape.width;
    spec.field_range = options.field_range;
    spec.coupling_range = options.coupling_range;
    spec.coupling_mode = options.coupling_mode;
    spec.seed = profile_instance_seed(options.seed, shape, k);
    const auto model = generate_spin_glass(spec);

    ComplexityRow row;
    row.height = shape.height;
    row.width = shape.width;
    row.instance_seed = spec.seed;
    row.n = model.num_variables();
    row.upper = upper_bound_logz(model, singleton_subsets(row.n), options.M_upper, spec.seed).mean;
    row.lower = lower_bound_logz(model, uniform_replication(model, options.replication), spec.seed).mean;
    row.gap = row.upper - row.lower;
    row.gap_per_variable = row.gap / row.n;
    if (options.with_oracle && std::min(shape.height, shape.width) <= 20) {
      row.oracle_logz = exact_summary(model).log_partition;
      row.true_gap = row.upper - *row.oracle_logz;
    }
    if (options.acceptance_trials > 0 && row.n <= 16) {
      SamplerConfig cfg = options.sampler;
      cfg.seed = spec.seed;
      const auto acc = acceptance_rate(model, options.acceptance_trials, cfg);
      if (acc.accepted > 0) row.acceptance_gap = -std::log(acc.rate);
    }
    return row;
  });
}

}  // namespace perturbmax
