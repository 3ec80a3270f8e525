#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace perturbmax {

/// Sentinel for configurations outside the model domain.
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Largest joint state space any enumerating routine will walk.
inline constexpr std::uint64_t kEnumerationCap = std::uint64_t{1} << 24;

using Configuration = std::vector<int>;

struct GridShape {
  int height = 0;
  int width = 0;
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Discrete pairwise potential
///   theta(x) = offset + sum_i theta_i(x_i) + sum_{(i,j)} theta_ij(x_i, x_j).
///
/// Tables are stored flat: unary tables back to back, pairwise tables row-major
/// in (x_i, x_j) with i < j. A model is built once and then shared read-only.
class PairwiseModel {
 public:
  struct Edge {
    int i;
    int j;
    std::size_t offset;  // start of the |X_i| x |X_j| table in pair storage
  };
  using DomainMask = std::function<bool(std::span<const int>)>;

  PairwiseModel() = default;
  explicit PairwiseModel(std::vector<int> cardinalities);

  void set_unary(int i, std::span<const double> values);
  void add_unary(int i, int state, double value);
  /// Adds an edge table (row-major |X_i| x |X_j|). Requires i < j and no
  /// duplicate edge. Returns the edge index.
  std::size_t add_edge(int i, int j, std::span<const double> table);
  /// Adds `value` to an existing edge's entry, creating a zero edge if absent.
  void add_pair(int i, int j, int xi, int xj, double value);
  void set_offset(double offset) { offset_ = offset; }
  void set_grid(GridShape shape);
  void set_domain_mask(DomainMask mask) { mask_ = std::move(mask); }
  void set_meta(std::string json) { meta_ = std::move(json); }

  int num_variables() const { return static_cast<int>(card_.size()); }
  int cardinality(int i) const { return card_[static_cast<std::size_t>(i)]; }
  std::span<const int> cardinalities() const { return card_; }
  std::span<const double> unary(int i) const;
  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const double> pair_table(std::size_t e) const;
  double pair(std::size_t e, int xi, int xj) const {
    const Edge& ed = edges_[e];
    return pair_values_[ed.offset + static_cast<std::size_t>(xi * card_[static_cast<std::size_t>(ed.j)] + xj)];
  }
  std::optional<std::size_t> find_edge(int i, int j) const;
  double offset() const { return offset_; }
  const std::optional<GridShape>& grid() const { return grid_; }
  bool has_mask() const { return static_cast<bool>(mask_); }
  bool feasible(std::span<const int> x) const { return !mask_ || mask_(x); }
  const std::string& meta() const { return meta_; }

  /// theta(x); kNegInf when x is masked out. Throws ContractError on a
  /// dimension mismatch or an out-of-range state.
  double evaluate(std::span<const int> x) const;
  /// theta(x) without validation or masking.
  double evaluate_unchecked(std::span<const int> x) const;

  /// Product of cardinalities, or nullopt when it exceeds 2^63.
  std::optional<std::uint64_t> config_count() const;
  bool is_binary() const;

 private:
  static std::uint64_t edge_key(int i, int j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) | static_cast<std::uint32_t>(j);
  }

  std::vector<int> card_;
  std::vector<std::size_t> unary_offset_;
  std::vector<double> unary_values_;
  std::vector<Edge> edges_;
  std::vector<double> pair_values_;
  std::unordered_map<std::uint64_t, std::size_t> edge_index_;
  double offset_ = 0.0;
  std::optional<GridShape> grid_;
  DomainMask mask_;
  std::string meta_;
};

/// Lexicographic rank of x with the last variable varying fastest.
std::uint64_t configuration_index(std::span<const int> cardinalities, std::span<const int> x);
Configuration configuration_from_index(std::span<const int> cardinalities, std::uint64_t index);

/// Walks every feasible configuration exactly once in lexicographic order
/// (last variable fastest). Construction throws CapacityError when the joint
/// space exceeds `cap`.
class ConfigurationCursor {
 public:
  explicit ConfigurationCursor(const PairwiseModel& model, std::uint64_t cap = kEnumerationCap);

  /// Advances to the next feasible configuration; false when exhausted. The
  /// first call positions the cursor on the first configuration.
  bool next();
  std::span<const int> current() const { return x_; }
  std::uint64_t index() const { return index_; }
  std::uint64_t total() const { return total_; }

 private:
  bool step();

  const PairwiseModel* model_;
  Configuration x_;
  std::uint64_t total_ = 0;
  std::uint64_t index_ = 0;
  bool started_ = false;
  bool done_ = false;
};

/// Materializes the cursor. Intended for tests and tiny models.
std::vector<Configuration> enumerate_configurations(const PairwiseModel& model,
                                                    std::uint64_t cap = kEnumerationCap);

/// Throws CapacityError with a size report if the joint space exceeds `cap`.
std::uint64_t checked_config_count(const PairwiseModel& model, std::uint64_t cap = kEnumerationCap);

enum class CouplingMode { attractive, mixed };

struct SpinGlassSpec {
  int height = 1;
  int width = 1;
  double field_range = 1.0;     // theta_i ~ U[-f, f]
  double coupling_range = 1.0;  // theta_ij ~ U[0, c] or U[-c, c]
  CouplingMode coupling_mode = CouplingMode::attractive;
  std::uint64_t seed = 0;
};

/// Grid spin glass theta(x) = sum_i theta_i s_i + sum_{(i,j)} theta_ij s_i s_j
/// with spins s in {-1,+1} stored as states {0,1}. Variables are row-major;
/// edges are emitted per site as (right, down). Draw order: all fields
/// row-major, then all couplings in edge order, from one counter stream.
PairwiseModel generate_spin_glass(const SpinGlassSpec& spec);

std::string to_string(CouplingMode mode);
CouplingMode coupling_mode_from_string(const std::string& s);

/// Model with the same structure where every table is the entrywise sum of a
/// and b. Requires identical variables and edge lists.
PairwiseModel add_models(const PairwiseModel& a, const PairwiseModel& b);

/// Conditions on x_0..x_{k-1} = prefix and returns the model over the
/// remaining variables (renumbered from 0). Clamped unaries and pairwise rows
/// fold into the suffix unaries and the offset, so
/// suffix.evaluate(rest) == model.evaluate(prefix ++ rest).
PairwiseModel clamp_prefix(const PairwiseModel& model, std::span<const int> prefix);

}  // namespace perturbmax
