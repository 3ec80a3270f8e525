#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <vector>

namespace perturbmax {

/// Boykov-Kolmogorov augmenting-path max-flow on a graph with source and sink
/// terminals, double capacities.
///
/// Residual capacities at or below `epsilon` count as saturated. After
/// maxflow(), a node is on the sink side iff it can still reach the sink
/// through residual arcs; every other node, including free ones, is on the
/// source side.
class MaxFlowGraph {
 public:
  explicit MaxFlowGraph(int num_nodes, double epsilon = 1e-12);

  void reserve_edges(std::size_t count);
  /// Adds i->j with capacity `cap` and j->i with capacity `rev_cap`.
  void add_edge(int i, int j, double cap, double rev_cap = 0.0);
  /// Adds s->i with `source_cap` and i->t with `sink_cap`.
  void add_terminal_weights(int i, double source_cap, double sink_cap);

  double maxflow();
  bool on_sink_side(int i) const;
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

 private:
  static constexpr int kNone = -1;
  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;
  static constexpr int kInfiniteDist = 1 << 30;

  struct Node {
    int first = kNone;
    int parent = kNone;
    int ts = 0;
    int dist = 0;
    bool is_sink = false;
    bool active = false;
    double tr_cap = 0.0;
  };
  struct Arc {
    int head;
    int next;
    double r_cap;
  };

  static int sister(int a) { return a ^ 1; }
  void set_active(int i);
  int next_active();
  void augment(int middle);
  void make_orphan(int i);
  void process_source_orphan(int i);
  void process_sink_orphan(int i);

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::deque<int> active_;
  std::vector<int> orphans_;
  double epsilon_;
  double flow_ = 0.0;
  int time_ = 0;
  bool solved_ = false;
};

}  // namespace perturbmax

namespace perturbmax {

/// Highest-label push-relabel max-flow with gap and global relabeling. Same
/// interface and labeling rule as MaxFlowGraph; preferred for dense networks
/// with many small parallel capacities, where augmenting paths saturate one
/// arc at a time.
class PushRelabelGraph {
 public:
  explicit PushRelabelGraph(int num_nodes, double epsilon = 1e-12);

  void reserve_edges(std::size_t count);
  void add_edge(int i, int j, double cap, double rev_cap = 0.0);
  void add_terminal_weights(int i, double source_cap, double sink_cap);

  /// Value of a maximum preflow, which equals the max-flow value.
  double maxflow();
  bool on_sink_side(int i) const { return sink_side_[static_cast<std::size_t>(i)] != 0; }
  int num_nodes() const { return n_; }

 private:
  struct Arc {
    int head;
    int rev;  // index of the reverse arc in arcs_
    double r_cap;
  };

  void global_relabel();
  void discharge(int u);
  void relabel(int u);
  void gap(int level);
  void activate(int u);

  int n_;
  double epsilon_;
  double constant_flow_ = 0.0;
  std::vector<double> tr_cap_;
  std::vector<std::array<int, 2>> edge_ends_;
  std::vector<std::array<double, 2>> edge_caps_;

  std::vector<std::size_t> first_;  // CSR offsets, n_ + 2 entries (sink is node n_)
  std::vector<Arc> arcs_;
  std::vector<std::size_t> current_;
  std::vector<double> excess_;
  std::vector<int> label_;
  std::vector<int> label_count_;
  std::vector<std::vector<int>> buckets_;
  int highest_ = 0;
  std::size_t work_since_relabel_ = 0;
  std::vector<char> sink_side_;
  bool solved_ = false;
};

}  // namespace perturbmax
