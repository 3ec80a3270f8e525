#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "perturbmax/bounds.hpp"
#include "perturbmax/concentration.hpp"
#include "perturbmax/entropy.hpp"
#include "perturbmax/learning.hpp"
#include "perturbmax/oracle.hpp"
#include "perturbmax/rng.hpp"
#include "perturbmax/sampler.hpp"
#include "perturbmax/solvers.hpp"

using namespace perturbmax;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PairwiseModel glass(int h, int w, double f, double c, CouplingMode mode, std::uint64_t criterion, std::uint64_t k) {
  SpinGlassSpec spec;
  spec.height = h;
  spec.width = w;
  spec.field_range = f;
  spec.coupling_range = c;
  spec.coupling_mode = mode;
  spec.seed = stream_key({0xacce, criterion, k});
  return generate_spin_glass(spec);
}

// Small models with at most 64 (or 16) joint configurations, cycling through shapes and regimes.
PairwiseModel small_model(std::uint64_t criterion, std::uint64_t k, bool tiny) {
  static const GridShape big[] = {{2, 3}, {1, 6}, {3, 2}, {2, 2}, {1, 5}};
  static const GridShape small[] = {{2, 2}, {1, 4}, {1, 3}};
  const GridShape s = tiny ? small[k % 3] : big[k % 5];
  const double f = 0.5 + 0.25 * static_cast<double>(k % 4);
  const double c = 0.5 + 0.5 * static_cast<double>(k % 3);
  const auto mode = k % 2 ? CouplingMode::mixed : CouplingMode::attractive;
  return glass(s.height, s.width, f, c, mode, criterion, k);
}

Outcome criterion1() {
  const double tol = 4.0 * (std::numbers::pi / std::sqrt(6.0)) / std::sqrt(2000.0);
  int within = 0;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto m = small_model(1, k, false);
    const double logz = exact_summary(m).log_partition;
    const auto b = upper_bound_logz(m, full_subset(m.num_variables()), 2000, stream_key({1, k}));
    const double err = std::abs(b.mean - logz);
    worst = std::max(worst, err);
    within += err <= tol ? 1 : 0;
  }
  return {within >= 19, fmt("%d/20 instances within %.4f of log Z (worst %.4f)", within, tol, worst)};
}

Outcome criterion2() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto m = small_model(2, k, true);
    const auto d = perturbmax_distribution(m, full_subset(m.num_variables()), 100000, stream_key({2, k}));
    worst = std::max(worst, total_variation(d.frequencies(), *exact_bruteforce(m).gibbs_table));
  }
  return {worst <= 0.02, fmt("max TV over 10 models = %.4f (limit 0.02)", worst)};
}

Outcome criterion3() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto m = small_model(3, k, true);
    const auto b = entropy_upper_bound(m, full_subset(m.num_variables()), 100000, stream_key({3, k}));
    worst = std::max(worst, std::abs(b.mean - exact_summary(m).entropy));
  }
  return {worst <= 0.03, fmt("max |mean gamma - H| over 10 models = %.4f (limit 0.03)", worst)};
}

Outcome criterion4() {
  double worst_logz = 0.0;
  double worst_fd = 0.0;
  const double h = 1e-5;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const int rows = 2 + static_cast<int>(k % 3);
    const int cols = 2 + static_cast<int>((k / 3) % 3);
    const auto mode = k % 2 ? CouplingMode::mixed : CouplingMode::attractive;
    const auto m = glass(rows, cols, 1.0, 0.5 + 0.1 * static_cast<double>(k % 10), mode, 4, k);
    const auto tm = exact_transfer_matrix(m);
    worst_logz = std::max(worst_logz, std::abs(exact_bruteforce(m).log_partition - tm.log_partition));

    double diff2 = 0.0, norm2 = 0.0;
    for (int i = 0; i < m.num_variables(); ++i)
      for (int x = 0; x < m.cardinality(i); ++x) {
        auto up = m, down = m;
        up.add_unary(i, x, h);
        down.add_unary(i, x, -h);
        const double fd = (exact_transfer_matrix(up).log_partition - exact_transfer_matrix(down).log_partition) / (2 * h);
        const double mu = tm.marginals[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)];
        diff2 += (fd - mu) * (fd - mu);
        norm2 += mu * mu;
      }
    worst_fd = std::max(worst_fd, std::sqrt(diff2 / norm2));
  }
  return {worst_logz <= 1e-9 && worst_fd < 1e-4,
          fmt("max |brute - transfer| = %.2e (limit 1e-9), max marginal finite-difference rel. error = %.2e (limit 1e-4)",
              worst_logz, worst_fd)};
}

Outcome criterion5() {
  double worst = 0.0;
  int graphcut_runs = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const int rows = 2 + static_cast<int>(k % 3);
    const int cols = 2 + static_cast<int>((k / 3) % 3);
    const auto m = glass(rows, cols, 1.0, 0.5 + 0.05 * static_cast<double>(k % 60), CouplingMode::attractive, 5, k);
    const auto pert = sample_perturbation(m, singleton_subsets(m.num_variables()), stream_key({5, k}), 0);
    const auto gc = solve_graphcut(m, &pert);
    graphcut_runs += gc.solver == SolverKind::graphcut ? 1 : 0;
    worst = std::max(worst, std::abs(gc.value - solve_bruteforce(m, &pert).value));
  }
  return {worst <= 1e-9 && graphcut_runs == 100,
          fmt("max |graph cut - brute force| = %.2e over %d graph-cut solves (limit 1e-9)", worst, graphcut_runs)};
}

Outcome criterion6() {
  int total = 0, upper_ok = 0, lower_ok = 0;
  std::string cells;
  for (double f : {0.1, 1.0})
    for (int ci = 0; ci <= 8; ++ci) {
      const double c = 0.5 * ci;
      int u = 0, l = 0;
      for (std::uint64_t k = 0; k < 20; ++k) {
        const auto m = glass(10, 10, f, c, CouplingMode::attractive, 6, (static_cast<std::uint64_t>(f * 10) * 100 + ci) * 100 + k);
        const double logz = exact_transfer_matrix(m).log_partition;
        const std::uint64_t s = stream_key({6, static_cast<std::uint64_t>(ci), k, static_cast<std::uint64_t>(f * 10)});
        u += upper_bound_logz(m, singleton_subsets(100), 100, s).mean >= logz ? 1 : 0;
        l += lower_bound_logz(m, uniform_replication(m, 100), s).mean <= logz ? 1 : 0;
      }
      total += 20;
      upper_ok += u;
      lower_ok += l;
      cells += fmt(" (f=%.1f,c=%.1f):%d/%d", f, c, u, l);
    }
  const double ru = static_cast<double>(upper_ok) / total;
  const double rl = static_cast<double>(lower_ok) / total;
  return {ru >= 0.95 && rl >= 0.95,
          fmt("upper >= log Z on %.1f%%, lower <= log Z on %.1f%% of %d instances (need 95%% each); per cell upper/lower:",
              100 * ru, 100 * rl, total) +
              cells};
}

Outcome criterion7() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto m = glass(3, 3, 1.0, 1.0, CouplingMode::attractive, 7, k);
    const auto oracle = exact_bruteforce(m);
    SamplerConfig cfg;
    cfg.M_phi = 200;
    cfg.seed = stream_key({7, k});
    GibbsSampler sampler(m, cfg);
    const auto cards = m.cardinalities();
    std::vector<double> freq(oracle.gibbs_table->size(), 0.0);
    std::size_t attempts = 0;
    const std::size_t N = 10000;
    for (std::size_t s = 0; s < N; ++s) {
      const auto t = sampler.sample(s);
      attempts += t.restarts + 1;
      freq[configuration_index(cards, *t.sample)] += 1.0 / N;
    }
    const double tv = total_variation(freq, *oracle.gibbs_table);
    const double acc_gap = -std::log(static_cast<double>(N) / static_cast<double>(attempts));
    const double bound_gap =
        upper_bound_logz(m, singleton_subsets(9), 10000, stream_key({7, k, 1})).mean - oracle.log_partition;
    const bool inst_ok = tv <= 0.05 && std::abs(acc_gap - bound_gap) <= 0.2;
    ok = ok && inst_ok;
    detail += fmt(" [TV %.3f, -log acc %.3f, U - log Z %.3f]", tv, acc_gap, bound_gap);
  }
  return {ok, "per model (limits TV 0.05, gap difference 0.2):" + detail};
}

Outcome criterion8() {
  ComplexityOptions o;
  o.sizes = {{4, 4}, {6, 6}, {8, 8}, {10, 10}};
  o.seeds = 10;
  o.M_upper = 100;
  o.replication = 100;
  o.seed = 8;
  o.with_oracle = false;
  std::map<int, double> mean;
  for (const auto& r : complexity_profile(o)) mean[r.height] += r.gap_per_variable / 10.0;
  bool ok = true;
  std::string detail;
  double prev = INFINITY;
  for (const auto& [side, g] : mean) {
    ok = ok && g <= prev;
    prev = g;
    detail += fmt(" %dx%d:%.4f", side, side, g);
  }
  return {ok, "mean gap per variable by size:" + detail};
}

Outcome criterion9() {
  bool every = true;
  double worst_margin = INFINITY;
  std::string majority;
  bool majority_ok = true;
  for (int ci = 0; ci <= 8; ++ci) {
    const double c = 0.5 * ci;
    int wins = 0;
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto m = glass(4, 4, 0.1, c, CouplingMode::attractive, 9, static_cast<std::uint64_t>(ci) * 100 + k);
      const auto subsets = singleton_subsets(16);
      const std::uint64_t s = stream_key({9, static_cast<std::uint64_t>(ci), k});
      const auto bound = entropy_upper_bound(m, subsets, 1000, s);
      const auto dist = perturbmax_distribution(m, subsets, 10000, stream_key({s, 1}));
      const double margin = bound.mean + 3 * bound.std_error - plugin_entropy_miller_madow(dist.counts);
      worst_margin = std::min(worst_margin, margin);
      every = every && margin >= 0.0;
      wins += bound.mean < marginal_entropy_bound(exact_summary(m)) ? 1 : 0;
    }
    if (c >= 2.0) {
      majority_ok = majority_ok && wins > 10;
      majority += fmt(" c=%.1f:%d/20", c, wins);
    }
  }
  return {every && majority_ok,
          fmt("bound + 3 se - empirical entropy >= 0 on every instance: %s (min margin %.4f); perturb-max < marginal bound:",
              every ? "yes" : "no", worst_margin) +
              majority};
}

bool close(double x, double ref) { return std::abs(x - ref) <= 1e-12 * std::max(1.0, std::abs(ref)); }

Outcome criterion10() {
  int checks = 0, bad = 0;
  auto expect = [&](bool b) {
    ++checks;
    bad += b ? 0 : 1;
  };
  for (double a : {0.25, 0.5, 1.0, 2.0, 10.0})
    for (int step = 0; step < 20; ++step) {
      const double lambda = (0.05 * step) / a;
      const double t = lambda * a;
      expect(close(mgf_bound_poincare(lambda, a), (1 + t) / (1 - t)));
      const double beta = std::exp(2 * a * a * lambda * lambda * (5 - t) / (1 - t)) * std::pow(1 - t, 8 * t);
      expect(close(mgf_bound_sobolev(lambda, a), beta));
    }
  expect(mgf_bound_poincare(0.0, 1.0) == 1.0 && mgf_bound_sobolev(0.0, 1.0) == 1.0);
  for (double a : {0.5, 1.0, 3.0}) expect(mgf_bound_poincare(0.95 / a, a) < mgf_bound_sobolev(0.95 / a, a));

  for (double a : {0.5, 1.0, 10.0})
    for (double M : {1.0, 10.0, 100.0, 1e4})
      for (double delta : {0.01, 0.05, 0.1, 0.5, 1.0}) {
        const double L = -std::log(delta);
        const double p = 2 * a * std::pow(1 + std::sqrt(L / (2 * M)), 2);
        const double s = a * std::max(4 * L / M, std::sqrt(32 * L / M));
        expect(close(deviation_radius_poincare(a, M, delta), p));
        expect(close(deviation_radius_sobolev(a, M, delta), s));
        expect(close(best_deviation(a, M, delta), std::min(p, s)));
      }

  int sweep = 0, sweep_ok = 0;
  for (double a : {0.5, 1.0, 2.0})
    for (double C : {1.0, 2.0, 4.0, 9.0})
      for (int step = 0; step < 50; ++step) {
        const double lambda = (0.02 * step) * 2.0 / (a * std::sqrt(C));
        const int terms = 60;
        const auto r = product_lemma_check(lambda, a, C, terms);
        const double x = lambda * lambda * a * a * C;
        double log_lhs = 0.0;
        for (int i = terms - 1; i >= 0; --i) log_lhs += -std::pow(2.0, i) * std::log1p(-x / std::pow(4.0, i + 1));
        expect(close(r.log_lhs, log_lhs));
        const double t = std::sqrt(x);
        expect(close(r.rhs, (2 + t) / (2 - t)));
        ++sweep;
        sweep_ok += r.log_lhs + r.tail_log_bound <= std::log(r.rhs) + 1e-12 ? 1 : 0;
      }
  return {bad == 0 && sweep_ok == sweep,
          fmt("%d/%d formula checks within 1e-12; product lemma lhs <= rhs on %d/%d sweep points", checks - bad, checks,
              sweep_ok, sweep)};
}

Outcome criterion11() {
  const auto m = glass(10, 10, 1.0, 1.0, CouplingMode::attractive, 11, 0);
  bool ok = true;
  std::string detail;
  for (std::size_t M : {1, 5, 10}) {
    const auto h = deviation_histogram(m, singleton_subsets(100), DeviationStatistic::logz_bound, M, 500, stream_key({11, M}));
    const double r = best_deviation(std::sqrt(100.0), static_cast<double>(M), 0.1);
    const double e = h.exceedance(r);
    ok = ok && e <= 0.1;
    detail += fmt(" M=%zu: r=%.3f exceedance=%.3f", M, r, e);
  }
  return {ok, "limit 0.1;" + detail};
}

Outcome criterion12() {
  double perturbed = 0.0, plain = 0.0;
  std::string detail;
  for (std::uint64_t s = 0; s < 5; ++s) {
    DatasetSpec spec;
    spec.seed = s;
    const auto data = make_silhouette_dataset(spec);
    TrainOptions o;
    o.seed = s;
    const double ep = mean_pixel_error(train(data, o), data.test);
    o.M = 0;
    const double e0 = mean_pixel_error(train(data, o), data.test);
    perturbed += ep / 5;
    plain += e0 / 5;
    detail += fmt(" seed %llu: %.4f vs %.4f;", static_cast<unsigned long long>(s), ep, e0);
  }
  return {perturbed < plain,
          fmt("mean test error perturbed %.4f < unperturbed %.4f required;", perturbed, plain) + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for perturbmax"};
  std::vector<int> criteria;
  app.add_option("--criterion", criteria, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty())
    for (int n = 1; n <= 12; ++n) criteria.push_back(n);

  Outcome (*const table[])() = {criterion1, criterion2, criterion3,  criterion4,  criterion5,  criterion6,
                                criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
  bool all = true;
  for (int n : criteria) {
    const auto start = std::chrono::steady_clock::now();
    const auto out = table[n - 1]();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", n, out.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
