#include "perturbmax/model.hpp"

#include <cmath>
#include <sstream>

#include "perturbmax/errors.hpp"
#include "perturbmax/rng.hpp"

namespace perturbmax {

PairwiseModel::PairwiseModel(std::vector<int> cardinalities) : card_(std::move(cardinalities)) {
  unary_offset_.reserve(card_.size() + 1);
  std::size_t total = 0;
  for (int k : card_) {
    require(k >= 2, "variable cardinality must be at least 2");
    unary_offset_.push_back(total);
    total += static_cast<std::size_t>(k);
  }
  unary_offset_.push_back(total);
  unary_values_.assign(total, 0.0);
}

void PairwiseModel::set_unary(int i, std::span<const double> values) {
  require(i >= 0 && i < num_variables(), "unary index out of range");
  require(values.size() == static_cast<std::size_t>(cardinality(i)), "unary table size mismatch");
  for (double v : values) require(std::isfinite(v), "unary entries must be finite");
  std::copy(values.begin(), values.end(), unary_values_.begin() + static_cast<std::ptrdiff_t>(unary_offset_[static_cast<std::size_t>(i)]));
}

void PairwiseModel::add_unary(int i, int state, double value) {
  require(i >= 0 && i < num_variables(), "unary index out of range");
  require(state >= 0 && state < cardinality(i), "unary state out of range");
  unary_values_[unary_offset_[static_cast<std::size_t>(i)] + static_cast<std::size_t>(state)] += value;
}

std::span<const double> PairwiseModel::unary(int i) const {
  const auto b = unary_offset_[static_cast<std::size_t>(i)];
  return {unary_values_.data() + b, static_cast<std::size_t>(cardinality(i))};
}

std::size_t PairwiseModel::add_edge(int i, int j, std::span<const double> table) {
  require(i >= 0 && j < num_variables(), "edge endpoint out of range");
  require(i < j, "edges must satisfy i < j");
  const auto key = edge_key(i, j);
  require(!edge_index_.contains(key), "duplicate edge");
  require(table.size() == static_cast<std::size_t>(cardinality(i) * cardinality(j)), "edge table size mismatch");
  for (double v : table) require(std::isfinite(v), "edge entries must be finite");
  const std::size_t e = edges_.size();
  edges_.push_back({i, j, pair_values_.size()});
  pair_values_.insert(pair_values_.end(), table.begin(), table.end());
  edge_index_.emplace(key, e);
  return e;
}

void PairwiseModel::add_pair(int i, int j, int xi, int xj, double value) {
  if (i > j) {
    std::swap(i, j);
    std::swap(xi, xj);
  }
  auto e = find_edge(i, j);
  if (!e) {
    std::vector<double> zeros(static_cast<std::size_t>(cardinality(i) * cardinality(j)), 0.0);
    e = add_edge(i, j, zeros);
  }
  const Edge& ed = edges_[*e];
  pair_values_[ed.offset + static_cast<std::size_t>(xi * cardinality(j) + xj)] += value;
}

std::span<const double> PairwiseModel::pair_table(std::size_t e) const {
  const Edge& ed = edges_[e];
  return {pair_values_.data() + ed.offset, static_cast<std::size_t>(cardinality(ed.i) * cardinality(ed.j))};
}

std::optional<std::size_t> PairwiseModel::find_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = edge_index_.find(edge_key(i, j));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

void PairwiseModel::set_grid(GridShape shape) {
  require(shape.height >= 1 && shape.width >= 1, "grid dimensions must be positive");
  require(shape.height * shape.width == num_variables(), "grid shape does not match variable count");
  grid_ = shape;
}

double PairwiseModel::evaluate_unchecked(std::span<const int> x) const {
  double total = offset_;
  for (std::size_t i = 0; i < card_.size(); ++i) total += unary_values_[unary_offset_[i] + static_cast<std::size_t>(x[i])];
  for (const Edge& ed : edges_) {
    total += pair_values_[ed.offset + static_cast<std::size_t>(x[static_cast<std::size_t>(ed.i)] * card_[static_cast<std::size_t>(ed.j)] +
                                                               x[static_cast<std::size_t>(ed.j)])];
  }
  return total;
}

double PairwiseModel::evaluate(std::span<const int> x) const {
  if (x.size() != card_.size()) {
    throw ContractError("configuration has " + std::to_string(x.size()) + " entries, model has " +
                        std::to_string(card_.size()) + " variables");
  }
  for (std::size_t i = 0; i < card_.size(); ++i) {
    require(x[i] >= 0 && x[i] < card_[i], "configuration state out of range at variable " + std::to_string(i));
  }
  if (!feasible(x)) return kNegInf;
  return evaluate_unchecked(x);
}

std::optional<std::uint64_t> PairwiseModel::config_count() const {
  std::uint64_t total = 1;
  for (int k : card_) {
    const auto kk = static_cast<std::uint64_t>(k);
    if (total > (std::uint64_t{1} << 63) / kk) return std::nullopt;
    total *= kk;
  }
  return total;
}

bool PairwiseModel::is_binary() const {
  for (int k : card_)
    if (k != 2) return false;
  return true;
}

std::uint64_t configuration_index(std::span<const int> cardinalities, std::span<const int> x) {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < cardinalities.size(); ++i) idx = idx * static_cast<std::uint64_t>(cardinalities[i]) + static_cast<std::uint64_t>(x[i]);
  return idx;
}

Configuration configuration_from_index(std::span<const int> cardinalities, std::uint64_t index) {
  Configuration x(cardinalities.size(), 0);
  for (std::size_t i = cardinalities.size(); i-- > 0;) {
    const auto k = static_cast<std::uint64_t>(cardinalities[i]);
    x[i] = static_cast<int>(index % k);
    index /= k;
  }
  return x;
}

std::uint64_t checked_config_count(const PairwiseModel& model, std::uint64_t cap) {
  auto count = model.config_count();
  if (!count || *count > cap) {
    std::ostringstream os;
    os << "joint state space of " << model.num_variables() << " variables ";
    if (count) {
      os << "has " << *count << " configurations";
    } else {
      os << "exceeds 2^63 configurations";
    }
    os << ", above the enumeration cap of " << cap;
    throw CapacityError(os.str());
  }
  return *count;
}

ConfigurationCursor::ConfigurationCursor(const PairwiseModel& model, std::uint64_t cap)
    : model_(&model), x_(static_cast<std::size_t>(model.num_variables()), 0), total_(checked_config_count(model, cap)) {}

bool ConfigurationCursor::step() {
  if (!started_) {
    started_ = true;
    index_ = 0;
    return true;
  }
  for (std::size_t i = x_.size(); i-- > 0;) {
    if (++x_[i] < model_->cardinality(static_cast<int>(i))) {
      ++index_;
      return true;
    }
    x_[i] = 0;
  }
  return false;
}

bool ConfigurationCursor::next() {
  if (done_) return false;
  while (step()) {
    if (model_->feasible(x_)) return true;
  }
  done_ = true;
  return false;
}

std::vector<Configuration> enumerate_configurations(const PairwiseModel& model, std::uint64_t cap) {
  ConfigurationCursor cursor(model, cap);
  std::vector<Configuration> out;
  while (cursor.next()) out.emplace_back(cursor.current().begin(), cursor.current().end());
  return out;
}

PairwiseModel generate_spin_glass(const SpinGlassSpec& spec) {
  require(spec.height >= 1 && spec.width >= 1, "grid dimensions must be positive");
  require(spec.field_range >= 0.0 && spec.coupling_range >= 0.0, "field and coupling ranges must be nonnegative");
  const int n = spec.height * spec.width;
  PairwiseModel model(std::vector<int>(static_cast<std::size_t>(n), 2));
  CounterRng rng(stream_key({tag(StreamTag::model), spec.seed}));

  for (int v = 0; v < n; ++v) {
    const double field = rng.uniform(-spec.field_range, spec.field_range);
    const double table[2] = {-field, field};
    model.set_unary(v, table);
  }
  const double lo = spec.coupling_mode == CouplingMode::attractive ? 0.0 : -spec.coupling_range;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const int v = r * spec.width + c;
      auto couple = [&](int u) {
        const double w = rng.uniform(lo, spec.coupling_range);
        const double table[4] = {w, -w, -w, w};
        model.add_edge(v, u, table);
      };
      if (c + 1 < spec.width) couple(v + 1);
      if (r + 1 < spec.height) couple(v + spec.width);
    }
  }
  model.set_grid({spec.height, spec.width});
  std::ostringstream meta;
  meta << R"({"height":)" << spec.height << R"(,"width":)" << spec.width << R"(,"field_range":)" << spec.field_range
       << R"(,"coupling_range":)" << spec.coupling_range << R"(,"coupling_mode":")" << to_string(spec.coupling_mode)
       << R"(","seed":)" << spec.seed << "}";
  model.set_meta(meta.str());
  return model;
}

std::string to_string(CouplingMode mode) { return mode == CouplingMode::attractive ? "attractive" : "mixed"; }

CouplingMode coupling_mode_from_string(const std::string& s) {
  if (s == "attractive") return CouplingMode::attractive;
  if (s == "mixed") return CouplingMode::mixed;
  throw ContractError("unknown coupling mode '" + s + "'");
}

PairwiseModel add_models(const PairwiseModel& a, const PairwiseModel& b) {
  require(std::equal(a.cardinalities().begin(), a.cardinalities().end(), b.cardinalities().begin(), b.cardinalities().end()),
          "models have different variables");
  require(a.edges().size() == b.edges().size(), "models have different edge lists");
  PairwiseModel out(std::vector<int>(a.cardinalities().begin(), a.cardinalities().end()));
  for (int i = 0; i < a.num_variables(); ++i) {
    std::vector<double> u(a.unary(i).begin(), a.unary(i).end());
    for (std::size_t s = 0; s < u.size(); ++s) u[s] += b.unary(i)[s];
    out.set_unary(i, u);
  }
  for (std::size_t e = 0; e < a.edges().size(); ++e) {
    const auto& ea = a.edges()[e];
    const auto& eb = b.edges()[e];
    require(ea.i == eb.i && ea.j == eb.j, "models have different edge lists");
    std::vector<double> t(a.pair_table(e).begin(), a.pair_table(e).end());
    for (std::size_t s = 0; s < t.size(); ++s) t[s] += b.pair_table(e)[s];
    out.add_edge(ea.i, ea.j, t);
  }
  out.set_offset(a.offset() + b.offset());
  if (a.grid()) out.set_grid(*a.grid());
  return out;
}

PairwiseModel clamp_prefix(const PairwiseModel& model, std::span<const int> prefix) {
  const int n = model.num_variables();
  const int k = static_cast<int>(prefix.size());
  require(k <= n, "prefix longer than the model");
  require(!model.has_mask(), "clamping is not supported for masked models");
  for (int i = 0; i < k; ++i) require(prefix[static_cast<std::size_t>(i)] >= 0 && prefix[static_cast<std::size_t>(i)] < model.cardinality(i), "prefix state out of range");

  PairwiseModel out(std::vector<int>(model.cardinalities().begin() + k, model.cardinalities().end()));
  double offset = model.offset();
  for (int i = 0; i < k; ++i) offset += model.unary(i)[static_cast<std::size_t>(prefix[static_cast<std::size_t>(i)])];
  for (int i = k; i < n; ++i) out.set_unary(i - k, model.unary(i));
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const auto& ed = model.edges()[e];
    if (ed.j < k) {
      offset += model.pair(e, prefix[static_cast<std::size_t>(ed.i)], prefix[static_cast<std::size_t>(ed.j)]);
    } else if (ed.i < k) {
      const int xi = prefix[static_cast<std::size_t>(ed.i)];
      for (int xj = 0; xj < model.cardinality(ed.j); ++xj) out.add_unary(ed.j - k, xj, model.pair(e, xi, xj));
    } else {
      out.add_edge(ed.i - k, ed.j - k, model.pair_table(e));
    }
  }
  out.set_offset(offset);
  return out;
}

}  // namespace perturbmax
