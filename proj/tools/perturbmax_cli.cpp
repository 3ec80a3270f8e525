// perturbmax command-line driver. Every subcommand writes its tables to
// --out-dir, each next to a <name>.manifest.json describing the run.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perturbmax/bounds.hpp"
#include "perturbmax/concentration.hpp"
#include "perturbmax/entropy.hpp"
#include "perturbmax/errors.hpp"
#include "perturbmax/io.hpp"
#include "perturbmax/learning.hpp"
#include "perturbmax/oracle.hpp"
#include "perturbmax/sampler.hpp"
#include "perturbmax/solvers.hpp"

#ifndef PERTURBMAX_VERSION
#define PERTURBMAX_VERSION "0.0.0"
#endif
#ifndef PERTURBMAX_GIT
#define PERTURBMAX_GIT "unknown"
#endif

namespace fs = std::filesystem;
using namespace perturbmax;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPrecondition = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitUsage = 64;

struct Common {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "out";
  std::string format = "csv";
};

GridShape parse_size(const std::string& s) {
  const auto x = s.find('x');
  require(x != std::string::npos, "size must look like HxW, got '" + s + "'");
  GridShape g{std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  require(g.height >= 1 && g.width >= 1, "grid sides must be positive");
  return g;
}

std::vector<GridShape> parse_sizes(const std::string& s) {
  std::vector<GridShape> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) out.push_back(parse_size(tok));
  require(!out.empty(), "size list is empty");
  return out;
}

// "lo:hi:n" gives n evenly spaced values; a plain number gives one value.
std::vector<double> parse_sweep(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
  if (parts.size() == 1) return {std::stod(parts[0])};
  require(parts.size() == 3, "sweep must be lo:hi:n, got '" + s + "'");
  const double lo = std::stod(parts[0]);
  const double hi = std::stod(parts[1]);
  const int n = std::stoi(parts[2]);
  require(n >= 1, "sweep needs at least one point");
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
  return v;
}

std::string config_text(std::span<const int> x) {
  std::string s;
  for (int v : x) s += static_cast<char>('0' + v);
  return s;
}

std::uint64_t content_hash(const std::string& s) {
  std::uint64_t h = 0;
  for (unsigned char c : s) h = mix64(h ^ c);
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex;
  o.width(16);
  o.fill('0');
  o << v;
  return o.str();
}

/// Oracle summary, memoized on disk under $PERTURBMAX_CACHE when set.
ExactSummary cached_summary(const PairwiseModel& model) {
  const char* dir = std::getenv("PERTURBMAX_CACHE");
  if (!dir || !*dir) return exact_summary(model);
  const fs::path path = fs::path(dir) / ("oracle_" + hex(content_hash(model_to_json(model).dump())) + ".json");
  if (fs::exists(path)) return summary_from_json(read_json(path));
  auto s = exact_summary(model);
  ExactSummary slim = s;
  slim.gibbs_table.reset();
  write_json(summary_to_json(slim), path);
  return s;
}

std::optional<ExactSummary> try_summary(const PairwiseModel& model) {
  try {
    return cached_summary(model);
  } catch (const CapacityError&) {
    return std::nullopt;
  } catch (const ContractError&) {
    return std::nullopt;
  }
}

Json cell_value(const std::string& s) {
  if (s.empty()) return nullptr;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
  return s;
}

class Run {
 public:
  Run(std::string command, const Common& common, Json config)
      : command_(std::move(command)), common_(common), config_(std::move(config)),
        start_(std::chrono::steady_clock::now()) {
    require(common_.format == "csv" || common_.format == "json", "format must be csv or json");
    require(common_.jobs >= 1, "jobs must be at least 1");
  }

  /// Writes a table as <name>.csv or <name>.json plus <name>.manifest.json.
  void emit(const std::string& name, const CsvWriter& table, std::vector<std::string> extra_outputs = {}) {
    const fs::path dir(common_.out_dir);
    fs::path main;
    std::string body;
    if (common_.format == "csv") {
      main = dir / (name + ".csv");
      body = table.str();
      table.write(main);
    } else {
      main = dir / (name + ".json");
      Json rows = Json::array();
      for (const auto& fields : table.data()) {
        Json row;
        for (std::size_t k = 0; k < fields.size(); ++k) row[table.header()[k]] = cell_value(fields[k]);
        rows.push_back(std::move(row));
      }
      body = rows.dump(2);
      write_json(rows, main);
    }
    Json outputs = Json::array();
    outputs.push_back({{"path", main.filename().string()}, {"content_hash", hex(content_hash(body))}});
    for (const auto& e : extra_outputs) outputs.push_back({{"path", e}});
    Json m;
    m["command"] = command_;
    m["config"] = config_;
    m["seeds"] = {{"seed", common_.seed}};
    m["version"] = std::string("perturbmax ") + PERTURBMAX_VERSION + " (" + PERTURBMAX_GIT + ")";
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["outputs"] = std::move(outputs);
    write_json(m, dir / (name + ".manifest.json"));
    std::cout << "wrote " << main.string() << " (" << table.rows() << " rows)\n";
  }

 private:
  std::string command_;
  Common common_;
  Json config_;
  std::chrono::steady_clock::time_point start_;
};

PairwiseModel instance(GridShape shape, double f, double c, CouplingMode mode, std::uint64_t seed, std::size_t k,
                       std::uint64_t* instance_seed = nullptr) {
  SpinGlassSpec spec;
  spec.height = shape.height;
  spec.width = shape.width;
  spec.field_range = f;
  spec.coupling_range = c;
  spec.coupling_mode = mode;
  spec.seed = stream_key({profile_instance_seed(seed, shape, k), static_cast<std::uint64_t>(std::llround(c * 1e6)),
                          static_cast<std::uint64_t>(std::llround(f * 1e6))});
  if (instance_seed) *instance_seed = spec.seed;
  return generate_spin_glass(spec);
}

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::string size = "4x4";
  double f = 1.0;
  double c = 1.0;
  std::string mode = "attractive";
  std::size_t count = 1;
};

int run_gen(const Common& common, const GenOptions& o) {
  const auto shape = parse_size(o.size);
  const auto mode = coupling_mode_from_string(o.mode);
  Run run("gen", common, {{"size", o.size}, {"f", o.f}, {"c", o.c}, {"mode", o.mode}, {"count", o.count}});
  CsvWriter table({"instance", "seed", "height", "width", "f", "c", "mode", "path"});
  std::vector<std::string> files;
  for (std::size_t k = 0; k < o.count; ++k) {
    std::uint64_t s = 0;
    const auto model = instance(shape, o.f, o.c, mode, common.seed, k, &s);
    const std::string file = "model_" + std::to_string(k) + ".json";
    save_model(model, fs::path(common.out_dir) / file);
    files.push_back(file);
    table.cell(k).cell(static_cast<unsigned long long>(s)).cell(shape.height).cell(shape.width).cell(o.f).cell(o.c)
        .cell(o.mode).cell(file);
    table.end_row();
  }
  run.emit("models", table, files);
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyOptions {
  std::string size = "3x3";
  std::size_t instances = 20;
  double f = 1.0;
  double c = 1.0;
};

int run_verify(const Common& common, const VerifyOptions& o) {
  const auto shape = parse_size(o.size);
  Run run("verify", common, {{"size", o.size}, {"instances", o.instances}, {"f", o.f}, {"c", o.c}});
  CsvWriter table({"instance", "seed", "check", "error", "tolerance", "pass"});
  std::map<std::string, std::pair<std::size_t, double>> summary;  // failures, max error
  std::size_t violations = 0;
  auto record = [&](std::size_t k, std::uint64_t s, const std::string& check, double err, double tol) {
    const bool pass = std::isfinite(err) && err <= tol;
    table.cell(k).cell(static_cast<unsigned long long>(s)).cell(check).cell(err).cell(tol).cell(pass ? 1 : 0);
    table.end_row();
    auto& [fails, worst] = summary[check];
    if (!pass) ++fails, ++violations;
    worst = std::max(worst, err);
  };

  for (std::size_t k = 0; k < o.instances; ++k) {
    std::uint64_t s = 0;
    const auto model = instance(shape, o.f, o.c, CouplingMode::mixed, common.seed, k, &s);
    const auto brute = exact_bruteforce(model);
    const auto tm = exact_transfer_matrix(model);
    record(k, s, "logz_dual_oracle", std::abs(brute.log_partition - tm.log_partition), 1e-9);
    record(k, s, "entropy_dual_oracle", std::abs(brute.entropy - tm.entropy), 1e-9);
    double merr = 0.0;
    for (std::size_t i = 0; i < brute.marginals.size(); ++i)
      for (std::size_t x = 0; x < brute.marginals[i].size(); ++x)
        merr = std::max(merr, std::abs(brute.marginals[i][x] - tm.marginals[i][x]));
    record(k, s, "marginals_dual_oracle", merr, 1e-9);

    // d log Z / d theta_i(1) equals the marginal p_i(1).
    double fd = 0.0;
    const double h = 1e-5;
    for (int i = 0; i < model.num_variables(); ++i) {
      auto plus = model;
      auto minus = model;
      plus.add_unary(i, 1, h);
      minus.add_unary(i, 1, -h);
      const double d = (exact_transfer_matrix(plus).log_partition - exact_transfer_matrix(minus).log_partition) / (2 * h);
      const double m = tm.marginals[static_cast<std::size_t>(i)][1];
      fd = std::max(fd, std::abs(d - m) / std::max(m, 1e-12));
    }
    record(k, s, "marginal_finite_difference", fd, 1e-4);

    const auto attractive = instance(shape, o.f, o.c, CouplingMode::attractive, common.seed, k);
    const auto pert = sample_perturbation(attractive, singleton_subsets(attractive.num_variables()), s, 0);
    const double gc = solve_graphcut(attractive, &pert).value;
    const double bf = solve_bruteforce(attractive, &pert).value;
    record(k, s, "graphcut_map", std::abs(gc - bf), 1e-9);

    const auto round = model_from_json(model_to_json(model));
    double rt = 0.0;
    ConfigurationCursor cursor(model);
    while (cursor.next()) rt = std::max(rt, std::abs(round.evaluate(cursor.current()) - model.evaluate(cursor.current())));
    record(k, s, "json_round_trip", rt, 0.0);
  }
  run.emit("verify", table);
  Json report = Json::object();
  for (const auto& [check, v] : summary) report[check] = {{"failures", v.first}, {"max_error", v.second}};
  report["violations"] = violations;
  write_json(report, fs::path(common.out_dir) / "verify_report.json");
  std::cout << report.dump(2) << '\n';
  return violations == 0 ? kExitOk : kExitInvariant;
}

// ---------------------------------------------------------------- bounds

struct BoundsOptions {
  std::string size = "10x10";
  std::string c_sweep = "0:4:9";
  std::string f_sweep = "1";
  std::string mode = "attractive";
  std::size_t instances = 20;
  std::size_t M = 100;
  int replication = 100;
  double epsilon = 0.0;
  std::string profile;
  std::size_t acceptance_trials = 0;
};

int run_bounds(const Common& common, const BoundsOptions& o) {
  Json config = {{"size", o.size}, {"c_sweep", o.c_sweep}, {"f_sweep", o.f_sweep}, {"mode", o.mode},
                 {"instances", o.instances}, {"M", o.M}, {"replication", o.replication}, {"epsilon", o.epsilon}};
  if (!o.profile.empty()) {
    config["profile"] = o.profile;
    config["acceptance_trials"] = o.acceptance_trials;
    Run run("bounds", common, config);
    ComplexityOptions opt;
    opt.sizes = parse_sizes(o.profile);
    opt.field_range = parse_sweep(o.f_sweep).front();
    opt.coupling_range = parse_sweep(o.c_sweep).front();
    opt.coupling_mode = coupling_mode_from_string(o.mode);
    opt.seeds = o.instances;
    opt.M_upper = o.M;
    opt.replication = o.replication;
    opt.seed = common.seed;
    opt.acceptance_trials = o.acceptance_trials;
    opt.jobs = common.jobs;
    CsvWriter table({"height", "width", "seed", "n", "upper", "lower", "gap", "gap_per_variable", "oracle_logz",
                     "true_gap", "acceptance_gap"});
    for (const auto& r : complexity_profile(opt)) {
      table.cell(r.height).cell(r.width).cell(static_cast<unsigned long long>(r.instance_seed)).cell(r.n).cell(r.upper)
          .cell(r.lower).cell(r.gap).cell(r.gap_per_variable);
      r.oracle_logz ? table.cell(*r.oracle_logz) : table.empty();
      r.true_gap ? table.cell(*r.true_gap) : table.empty();
      r.acceptance_gap ? table.cell(*r.acceptance_gap) : table.empty();
      table.end_row();
    }
    run.emit("profile", table);
    return kExitOk;
  }

  Run run("bounds", common, config);
  const auto shape = parse_size(o.size);
  const auto mode = coupling_mode_from_string(o.mode);
  CsvWriter table({"instance_seed", "c", "f", "instance", "n", "oracle_logz", "upper_mean", "upper_dev", "upper_se",
                   "lower_value", "gap", "upper_error", "lower_error", "lower_failure_probability"});
  BoundOptions bo;
  bo.jobs = common.jobs;
  for (double f : parse_sweep(o.f_sweep))
    for (double c : parse_sweep(o.c_sweep))
      for (std::size_t k = 0; k < o.instances; ++k) {
        std::uint64_t s = 0;
        const auto model = instance(shape, f, c, mode, common.seed, k, &s);
        const auto oracle = try_summary(model);
        const auto up = upper_bound_logz(model, singleton_subsets(model.num_variables()), o.M, s, bo);
        const auto lo = lower_bound_logz(model, uniform_replication(model, o.replication), s, o.epsilon);
        table.cell(static_cast<unsigned long long>(s)).cell(c).cell(f).cell(k).cell(model.num_variables());
        oracle ? table.cell(oracle->log_partition) : table.empty();
        table.cell(up.mean).cell(up.deviation_radius).cell(up.std_error).cell(lo.mean).cell(up.mean - lo.mean);
        oracle ? table.cell(up.mean - oracle->log_partition) : table.empty();
        oracle ? table.cell(lo.mean - oracle->log_partition) : table.empty();
        table.cell(lo.failure_probability.value_or(0.0));
        table.end_row();
      }
  run.emit("bounds", table);
  return kExitOk;
}

// ---------------------------------------------------------------- sample

struct SampleOptions {
  std::string size = "3x3";
  double f = 1.0;
  double c = 1.0;
  std::string mode = "attractive";
  std::size_t count = 1000;
  std::size_t M_phi = 200;
  std::size_t max_restarts = 10000;
  std::string model_path;
};

int run_sample(const Common& common, const SampleOptions& o) {
  Run run("sample", common,
          {{"size", o.size}, {"f", o.f}, {"c", o.c}, {"mode", o.mode}, {"count", o.count}, {"M_phi", o.M_phi},
           {"max_restarts", o.max_restarts}, {"model", o.model_path}});
  const auto model = o.model_path.empty()
                         ? instance(parse_size(o.size), o.f, o.c, coupling_mode_from_string(o.mode), common.seed, 0)
                         : load_model(o.model_path);
  SamplerConfig cfg;
  cfg.M_phi = o.M_phi;
  cfg.max_restarts = o.max_restarts;
  cfg.seed = common.seed;
  GibbsSampler sampler(model, cfg);
  CsvWriter samples({"index", "accepted", "restarts", "configuration"});
  std::vector<std::uint64_t> counts;
  const bool small = model.config_count() && *model.config_count() <= kDistributionCap;
  if (small) counts.assign(*model.config_count(), 0);
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  for (std::size_t k = 0; k < o.count; ++k) {
    const auto t = sampler.sample(k);
    attempts += t.restarts + (t.accepted ? 1 : 0);
    samples.cell(k).cell(t.accepted ? 1 : 0).cell(t.restarts).cell(t.sample ? config_text(*t.sample) : "");
    samples.end_row();
    if (t.accepted) {
      ++accepted;
      if (small) ++counts[configuration_index(model.cardinalities(), *t.sample)];
    }
  }
  run.emit("samples", samples);

  CsvWriter stats({"samples", "accepted", "attempts", "acceptance_rate", "phi0", "clamped_rounds", "oracle_logz",
                   "phi0_minus_logz", "neg_log_acceptance", "tv_to_gibbs"});
  const double rate = attempts ? static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0;
  stats.cell(o.count).cell(accepted).cell(attempts).cell(rate).cell(sampler.phi0()).cell(sampler.clamped_rounds());
  std::optional<ExactSummary> oracle;
  if (small) oracle = exact_bruteforce(model);
  if (oracle) {
    stats.cell(oracle->log_partition).cell(sampler.phi0() - oracle->log_partition).cell(-std::log(rate));
    std::vector<double> freq(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) freq[i] = static_cast<double>(counts[i]) / std::max<std::size_t>(accepted, 1);
    stats.cell(total_variation(freq, *oracle->gibbs_table));
  } else {
    stats.empty().empty().cell(-std::log(rate)).empty();
  }
  stats.end_row();
  run.emit("sample_stats", stats);
  return kExitOk;
}

// ---------------------------------------------------------------- entropy

struct EntropyOptions {
  std::string size = "4x4";
  std::string c_sweep = "0:4:9";
  std::string f_sweep = "0.1";
  std::string mode = "attractive";
  std::size_t instances = 20;
  std::size_t M = 1000;
  std::size_t M_distribution = 10000;
};

int run_entropy(const Common& common, const EntropyOptions& o) {
  Run run("entropy", common,
          {{"size", o.size}, {"c_sweep", o.c_sweep}, {"f_sweep", o.f_sweep}, {"mode", o.mode},
           {"instances", o.instances}, {"M", o.M}, {"M_distribution", o.M_distribution}});
  const auto shape = parse_size(o.size);
  const auto mode = coupling_mode_from_string(o.mode);
  CsvWriter table({"seed", "c", "f", "instance", "oracle_entropy", "perturbmax_bound", "perturbmax_bound_se",
                   "marginal_bound", "empirical_pm_entropy"});
  BoundOptions bo;
  bo.jobs = common.jobs;
  for (double f : parse_sweep(o.f_sweep))
    for (double c : parse_sweep(o.c_sweep))
      for (std::size_t k = 0; k < o.instances; ++k) {
        std::uint64_t s = 0;
        const auto model = instance(shape, f, c, mode, common.seed, k, &s);
        const auto subsets = singleton_subsets(model.num_variables());
        const auto oracle = try_summary(model);
        const auto bound = entropy_upper_bound(model, subsets, o.M, s, bo);
        table.cell(static_cast<unsigned long long>(s)).cell(c).cell(f).cell(k);
        oracle ? table.cell(oracle->entropy) : table.empty();
        table.cell(bound.mean).cell(bound.std_error);
        oracle ? table.cell(marginal_entropy_bound(*oracle)) : table.empty();
        if (model.config_count() && *model.config_count() <= kDistributionCap) {
          const auto dist = perturbmax_distribution(model, subsets, o.M_distribution, stream_key({s, 1}), bo);
          table.cell(plugin_entropy_miller_madow(dist.counts));
        } else {
          table.empty();
        }
        table.end_row();
      }
  run.emit("entropy", table);
  return kExitOk;
}

// ---------------------------------------------------------------- concentration

struct ConcentrationOptions {
  double a = 1.0;
  int lambda_steps = 20;
  std::string M_list = "1,5,10,50,100,500,1000";
  std::string delta_list = "0.5,0.1,0.05,0.01";
  bool histogram = true;
  std::string size = "10x10";
  double f = 1.0;
  double c = 1.0;
  std::string statistic = "logz";
  std::string M_per_mean = "1,5,10";
  std::size_t trials = 500;
  int bins = 40;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) v.push_back(std::stod(tok));
  require(!v.empty(), "list is empty");
  return v;
}

int run_concentration(const Common& common, const ConcentrationOptions& o) {
  require(o.a > 0.0, "a must be positive");
  require(o.lambda_steps >= 1, "lambda-steps must be at least 1");
  Run run("concentration", common,
          {{"a", o.a}, {"lambda_steps", o.lambda_steps}, {"M_list", o.M_list}, {"delta_list", o.delta_list},
           {"histogram", o.histogram}, {"size", o.size}, {"f", o.f}, {"c", o.c}, {"statistic", o.statistic},
           {"M_per_mean", o.M_per_mean}, {"trials", o.trials}, {"bins", o.bins}});

  CsvWriter mgf({"lambda", "lambda_a", "alpha", "beta"});
  for (int k = 0; k < o.lambda_steps; ++k) {
    const double la = static_cast<double>(k) / o.lambda_steps;
    mgf.cell(la / o.a).cell(la).cell(mgf_bound_poincare(la / o.a, o.a)).cell(mgf_bound_sobolev(la / o.a, o.a));
    mgf.end_row();
  }
  run.emit("mgf", mgf);

  CsvWriter radius({"a", "M", "delta", "poincare", "sobolev", "best"});
  for (double d : parse_list(o.delta_list))
    for (double M : parse_list(o.M_list)) {
      radius.cell(o.a).cell(M).cell(d).cell(deviation_radius_poincare(o.a, M, d))
          .cell(deviation_radius_sobolev(o.a, M, d)).cell(best_deviation(o.a, M, d));
      radius.end_row();
    }
  run.emit("radius", radius);

  CsvWriter product({"lambda_a_sqrt_c", "terms", "lhs", "rhs", "tail_log_bound", "holds"});
  for (int k = 1; k <= 19; ++k) {
    const double x = 0.1 * k;
    const auto r = product_lemma_check(x, 1.0, 1.0, 60);
    product.cell(x).cell(60).cell(r.lhs).cell(r.rhs).cell(r.tail_log_bound).cell(r.lhs <= r.rhs ? 1 : 0);
    product.end_row();
  }
  run.emit("product_lemma", product);

  if (o.histogram) {
    const auto model = instance(parse_size(o.size), o.f, o.c, CouplingMode::attractive, common.seed, 0);
    const auto subsets = singleton_subsets(model.num_variables());
    const auto stat = deviation_statistic_from_string(o.statistic);
    for (double Md : parse_list(o.M_per_mean)) {
      const auto M = static_cast<std::size_t>(Md);
      require(M >= 1, "M-per-mean values must be at least 1");
      const auto h = deviation_histogram(model, subsets, stat, M, o.trials, common.seed, o.bins, common.jobs);
      CsvWriter table({"bin_lo", "bin_hi", "count", "radius", "exceedance", "delta_poincare", "delta_sobolev"});
      for (std::size_t b = 0; b < h.counts.size(); ++b) {
        table.cell(h.bin_edges[b]).cell(h.bin_edges[b + 1]).cell(h.counts[b]);
        if (b < h.curve.size()) {
          const auto& r = h.curve[b];
          table.cell(r.radius).cell(r.exceedance).cell(r.delta_poincare).cell(r.delta_sobolev);
        } else {
          table.empty().empty().empty().empty();
        }
        table.end_row();
      }
      run.emit("histogram_M" + std::to_string(M), table);
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- learn

struct LearnOptions {
  int height = 20;
  int width = 20;
  std::size_t train = 10;
  std::size_t test = 10;
  double noise = 0.1;
  int iterations = 30;
  std::size_t M = 5;
  double step = 1.0;
  double regularizer = 1.0;
  std::string data_dir;
  std::string params_path;
};

std::vector<DenoisingExample> read_split(const fs::path& dir, int& h, int& w) {
  std::vector<fs::path> observed;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.size() > 13 && name.ends_with("_observed.pgm")) observed.push_back(e.path());
  }
  std::sort(observed.begin(), observed.end());
  require(!observed.empty(), "no *_observed.pgm files in " + dir.string());
  std::vector<DenoisingExample> out;
  for (const auto& p : observed) {
    auto clean_path = p.string();
    clean_path.replace(clean_path.size() - 13, 13, "_clean.pgm");
    int h1 = 0, w1 = 0, h2 = 0, w2 = 0;
    DenoisingExample ex{read_image(p, h1, w1), read_image(clean_path, h2, w2)};
    require(h1 == h2 && w1 == w2, "observed and clean sizes differ for " + p.string());
    if (h == 0) h = h1, w = w1;
    require(h == h1 && w == w1, "all images must share one size");
    out.push_back(std::move(ex));
  }
  return out;
}

int run_learn(const Common& common, const LearnOptions& o) {
  Run run("learn", common,
          {{"height", o.height}, {"width", o.width}, {"train", o.train}, {"test", o.test}, {"noise", o.noise},
           {"iterations", o.iterations}, {"M", o.M}, {"step", o.step}, {"regularizer", o.regularizer},
           {"data_dir", o.data_dir}, {"params", o.params_path}});
  const fs::path out(common.out_dir);
  DenoisingDataset data;
  std::vector<std::string> files;
  if (o.data_dir.empty()) {
    DatasetSpec spec{o.height, o.width, o.train, o.test, o.noise, common.seed};
    data = make_silhouette_dataset(spec);
    auto dump = [&](const std::vector<DenoisingExample>& split, const std::string& name) {
      for (std::size_t k = 0; k < split.size(); ++k) {
        const std::string stem = "images/" + name + "/" + std::to_string(k);
        write_image(split[k].observed, data.height, data.width, out / (stem + "_observed.pgm"));
        write_image(split[k].clean, data.height, data.width, out / (stem + "_clean.pgm"));
        files.push_back(stem + "_observed.pgm");
        files.push_back(stem + "_clean.pgm");
      }
    };
    dump(data.train, "train");
    dump(data.test, "test");
  } else {
    data.train = read_split(fs::path(o.data_dir) / "train", data.height, data.width);
    data.test = read_split(fs::path(o.data_dir) / "test", data.height, data.width);
  }

  LearnedParams params;
  if (!o.params_path.empty()) {
    params = params_from_json(read_json(o.params_path));
    require(params.height == data.height && params.width == data.width, "parameter and image sizes differ");
  } else {
    TrainOptions t;
    t.iterations = o.iterations;
    t.M = o.M;
    t.step = o.step;
    t.regularizer = o.regularizer;
    t.seed = common.seed;
    t.jobs = common.jobs;
    params = train(data, t);
    write_json(params_to_json(params), out / "params.json");
    files.push_back("params.json");
  }

  CsvWriter trace({"iteration", "objective", "step", "halvings", "accepted"});
  for (const auto& r : params.trace) {
    trace.cell(r.iteration).cell(r.objective).cell(r.step).cell(r.halvings).cell(r.accepted ? 1 : 0);
    trace.end_row();
  }
  run.emit("trace", trace, files);

  CsvWriter eval({"split", "index", "pixel_error", "observed_error"});
  for (const auto* split : {&data.train, &data.test}) {
    const std::string name = split == &data.train ? "train" : "test";
    for (std::size_t k = 0; k < split->size(); ++k) {
      const auto& ex = (*split)[k];
      const auto pred = predict(params, ex.observed);
      if (split == &data.test) write_image(pred, data.height, data.width, out / ("predictions/" + std::to_string(k) + ".pgm"));
      eval.cell(name).cell(k).cell(pixel_error(pred, ex.clean)).cell(pixel_error(ex.observed, ex.clean));
      eval.end_row();
    }
  }
  run.emit("evaluation", eval);
  std::cout << "mean test pixel error " << mean_pixel_error(params, data.test) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbmax: perturb-and-MAP bounds, sampling and learning experiments"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Root seed for every random stream");
    sub->add_option("--jobs", common.jobs, "Worker threads (results do not depend on it)");
    sub->add_option("--out-dir", common.out_dir, "Output directory");
    sub->add_option("--format", common.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  };

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate spin-glass models as JSON");
  add_common(g);
  g->add_option("--size", gen.size, "Grid size HxW");
  g->add_option("--f", gen.f, "Field range");
  g->add_option("--c", gen.c, "Coupling range");
  g->add_option("--mode", gen.mode, "attractive or mixed");
  g->add_option("--count", gen.count, "Number of models");

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "Cross-check the oracles and solvers");
  add_common(v);
  v->add_option("--size", ver.size, "Grid size HxW");
  v->add_option("--instances", ver.instances, "Number of random instances");
  v->add_option("--f", ver.f, "Field range");
  v->add_option("--c", ver.c, "Coupling range");

  BoundsOptions bnd;
  auto* b = app.add_subcommand("bounds", "Upper and lower log-partition bounds over a coupling sweep");
  add_common(b);
  b->add_option("--size", bnd.size, "Grid size HxW");
  b->add_option("--c-sweep", bnd.c_sweep, "Coupling values lo:hi:n or a single value");
  b->add_option("--f", bnd.f_sweep, "Field values lo:hi:n or a single value");
  b->add_option("--mode", bnd.mode, "attractive or mixed");
  b->add_option("--instances", bnd.instances, "Instances per (f, c)");
  b->add_option("--M", bnd.M, "Perturbations per upper bound");
  b->add_option("--replication", bnd.replication, "Copies per variable in the lower bound");
  b->add_option("--epsilon", bnd.epsilon, "Lower-bound slack per variable");
  b->add_option("--profile", bnd.profile, "Comma list of sizes; writes the gap profile instead of the sweep");
  b->add_option("--acceptance-trials", bnd.acceptance_trials, "Sampler attempts per profile instance");

  SampleOptions smp;
  auto* s = app.add_subcommand("sample", "Draw Gibbs samples with the sequential rejection sampler");
  add_common(s);
  s->add_option("--size", smp.size, "Grid size HxW");
  s->add_option("--f", smp.f, "Field range");
  s->add_option("--c", smp.c, "Coupling range");
  s->add_option("--mode", smp.mode, "attractive or mixed");
  s->add_option("--count", smp.count, "Number of samples");
  s->add_option("--M-phi", smp.M_phi, "Perturbations per phi estimate");
  s->add_option("--max-restarts", smp.max_restarts, "Restarts before giving up on a sample");
  s->add_option("--model", smp.model_path, "Model JSON instead of a generated grid");

  EntropyOptions ent;
  auto* e = app.add_subcommand("entropy", "Perturb-max and marginal entropy bounds");
  add_common(e);
  e->add_option("--size", ent.size, "Grid size HxW");
  e->add_option("--c-sweep", ent.c_sweep, "Coupling values lo:hi:n or a single value");
  e->add_option("--f", ent.f_sweep, "Field values lo:hi:n or a single value");
  e->add_option("--mode", ent.mode, "attractive or mixed");
  e->add_option("--instances", ent.instances, "Instances per (f, c)");
  e->add_option("--M", ent.M, "Perturbations per entropy bound");
  e->add_option("--M-distribution", ent.M_distribution, "Draws for the empirical perturb-max entropy");

  ConcentrationOptions con;
  auto* c = app.add_subcommand("concentration", "MGF, radius and deviation-histogram tables");
  add_common(c);
  c->add_option("--a", con.a, "Gradient bound");
  c->add_option("--lambda-steps", con.lambda_steps, "Grid points on lambda a in [0, 1)");
  c->add_option("--M-list", con.M_list, "Comma list of sample counts for the radius table");
  c->add_option("--delta-list", con.delta_list, "Comma list of failure probabilities");
  c->add_flag("!--no-histogram", con.histogram, "Skip the deviation histograms");
  c->add_option("--size", con.size, "Grid size for the histograms");
  c->add_option("--f", con.f, "Field range for the histogram model");
  c->add_option("--c", con.c, "Coupling range for the histogram model");
  c->add_option("--statistic", con.statistic, "logz or entropy");
  c->add_option("--M-per-mean", con.M_per_mean, "Comma list of samples per mean");
  c->add_option("--trials", con.trials, "Means per histogram");
  c->add_option("--bins", con.bins, "Histogram bins");

  LearnOptions lrn;
  auto* l = app.add_subcommand("learn", "Train a denoising model with perturbed subgradients");
  add_common(l);
  l->add_option("--height", lrn.height, "Image height");
  l->add_option("--width", lrn.width, "Image width");
  l->add_option("--train", lrn.train, "Training images");
  l->add_option("--test", lrn.test, "Test images");
  l->add_option("--noise", lrn.noise, "Pixel flip rate");
  l->add_option("--iterations", lrn.iterations, "Subgradient iterations");
  l->add_option("--M", lrn.M, "Perturbations per gradient; 0 trains the unperturbed ablation");
  l->add_option("--step", lrn.step, "Initial step size");
  l->add_option("--regularizer", lrn.regularizer, "Weight of |theta|^2");
  l->add_option("--data-dir", lrn.data_dir, "Directory with train/ and test/ image pairs");
  l->add_option("--params", lrn.params_path, "Evaluate these parameters instead of training");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*g) return run_gen(common, gen);
    if (*v) return run_verify(common, ver);
    if (*b) return run_bounds(common, bnd);
    if (*s) return run_sample(common, smp);
    if (*e) return run_entropy(common, ent);
    if (*c) return run_concentration(common, con);
    if (*l) return run_learn(common, lrn);
  } catch (const ContractError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitPrecondition;
  } catch (const CapacityError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitPrecondition;
  } catch (const SolverRejected& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitPrecondition;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitPrecondition;
  } catch (const std::out_of_range& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitPrecondition;
  } catch (const std::domain_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitPrecondition;
  }
  return kExitUsage;
}
