#include "perturbmax/maxflow.hpp"

#include <algorithm>

#include "perturbmax/errors.hpp"

namespace perturbmax {

MaxFlowGraph::MaxFlowGraph(int num_nodes, double epsilon) : nodes_(static_cast<std::size_t>(num_nodes)), epsilon_(epsilon) {
  require(num_nodes >= 0, "node count must be nonnegative");
}

void MaxFlowGraph::reserve_edges(std::size_t count) { arcs_.reserve(2 * count); }

void MaxFlowGraph::add_edge(int i, int j, double cap, double rev_cap) {
  require(i != j, "self loops are not allowed");
  require(cap >= 0.0 && rev_cap >= 0.0, "capacities must be nonnegative");
  const int a = static_cast<int>(arcs_.size());
  arcs_.push_back({j, nodes_[static_cast<std::size_t>(i)].first, cap});
  arcs_.push_back({i, nodes_[static_cast<std::size_t>(j)].first, rev_cap});
  nodes_[static_cast<std::size_t>(i)].first = a;
  nodes_[static_cast<std::size_t>(j)].first = a + 1;
}

void MaxFlowGraph::add_terminal_weights(int i, double source_cap, double sink_cap) {
  require(source_cap >= 0.0 && sink_cap >= 0.0, "terminal capacities must be nonnegative");
  Node& n = nodes_[static_cast<std::size_t>(i)];
  const double delta = n.tr_cap;
  if (delta > 0) {
    source_cap += delta;
  } else {
    sink_cap -= delta;
  }
  flow_ += std::min(source_cap, sink_cap);
  n.tr_cap = source_cap - sink_cap;
}

void MaxFlowGraph::set_active(int i) {
  Node& n = nodes_[static_cast<std::size_t>(i)];
  if (!n.active) {
    n.active = true;
    active_.push_back(i);
  }
}

int MaxFlowGraph::next_active() {
  while (!active_.empty()) {
    const int i = active_.front();
    active_.pop_front();
    nodes_[static_cast<std::size_t>(i)].active = false;
    if (nodes_[static_cast<std::size_t>(i)].parent != kNone) return i;
  }
  return kNone;
}

void MaxFlowGraph::make_orphan(int i) {
  nodes_[static_cast<std::size_t>(i)].parent = kOrphan;
  orphans_.push_back(i);
}

void MaxFlowGraph::augment(int middle) {
  // Bottleneck along source tree -> middle arc -> sink tree.
  double bottleneck = arcs_[static_cast<std::size_t>(middle)].r_cap;
  int i = arcs_[static_cast<std::size_t>(sister(middle))].head;
  for (;;) {
    const int a = nodes_[static_cast<std::size_t>(i)].parent;
    if (a == kTerminal) break;
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(sister(a))].r_cap);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, nodes_[static_cast<std::size_t>(i)].tr_cap);
  i = arcs_[static_cast<std::size_t>(middle)].head;
  for (;;) {
    const int a = nodes_[static_cast<std::size_t>(i)].parent;
    if (a == kTerminal) break;
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(a)].r_cap);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  bottleneck = std::min(bottleneck, -nodes_[static_cast<std::size_t>(i)].tr_cap);

  arcs_[static_cast<std::size_t>(sister(middle))].r_cap += bottleneck;
  arcs_[static_cast<std::size_t>(middle)].r_cap -= bottleneck;

  i = arcs_[static_cast<std::size_t>(sister(middle))].head;
  for (;;) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    const int a = n.parent;
    if (a == kTerminal) {
      n.tr_cap -= bottleneck;
      if (n.tr_cap <= epsilon_) make_orphan(i);
      break;
    }
    arcs_[static_cast<std::size_t>(a)].r_cap += bottleneck;
    arcs_[static_cast<std::size_t>(sister(a))].r_cap -= bottleneck;
    if (arcs_[static_cast<std::size_t>(sister(a))].r_cap <= epsilon_) make_orphan(i);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  i = arcs_[static_cast<std::size_t>(middle)].head;
  for (;;) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    const int a = n.parent;
    if (a == kTerminal) {
      n.tr_cap += bottleneck;
      if (n.tr_cap >= -epsilon_) make_orphan(i);
      break;
    }
    arcs_[static_cast<std::size_t>(sister(a))].r_cap += bottleneck;
    arcs_[static_cast<std::size_t>(a)].r_cap -= bottleneck;
    if (arcs_[static_cast<std::size_t>(a)].r_cap <= epsilon_) make_orphan(i);
    i = arcs_[static_cast<std::size_t>(a)].head;
  }
  flow_ += bottleneck;
}

void MaxFlowGraph::process_source_orphan(int i) {
  int best_arc = kNone;
  int best_dist = kInfiniteDist;
  for (int a0 = nodes_[static_cast<std::size_t>(i)].first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    if (arcs_[static_cast<std::size_t>(sister(a0))].r_cap <= epsilon_) continue;
    int j = arcs_[static_cast<std::size_t>(a0)].head;
    if (nodes_[static_cast<std::size_t>(j)].is_sink || nodes_[static_cast<std::size_t>(j)].parent == kNone) continue;
    // Trace j back to its root to confirm it still hangs off the source.
    int d = 0;
    for (;;) {
      Node& nj = nodes_[static_cast<std::size_t>(j)];
      if (nj.ts == time_) {
        d += nj.dist;
        break;
      }
      const int a = nj.parent;
      ++d;
      if (a == kTerminal) {
        nj.ts = time_;
        nj.dist = 1;
        break;
      }
      if (a == kOrphan) {
        d = kInfiniteDist;
        break;
      }
      j = arcs_[static_cast<std::size_t>(a)].head;
    }
    if (d < kInfiniteDist) {
      if (d < best_dist) {
        best_arc = a0;
        best_dist = d;
      }
      for (j = arcs_[static_cast<std::size_t>(a0)].head; nodes_[static_cast<std::size_t>(j)].ts != time_;
           j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
        nodes_[static_cast<std::size_t>(j)].ts = time_;
        nodes_[static_cast<std::size_t>(j)].dist = d--;
      }
    }
  }
  Node& n = nodes_[static_cast<std::size_t>(i)];
  n.parent = best_arc;
  if (best_arc != kNone) {
    n.ts = time_;
    n.dist = best_dist + 1;
    return;
  }
  n.parent = kNone;
  for (int a0 = n.first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    const int j = arcs_[static_cast<std::size_t>(a0)].head;
    Node& nj = nodes_[static_cast<std::size_t>(j)];
    const int a = nj.parent;
    if (nj.is_sink || a == kNone) continue;
    if (arcs_[static_cast<std::size_t>(sister(a0))].r_cap > epsilon_) set_active(j);
    if (a != kTerminal && a != kOrphan && arcs_[static_cast<std::size_t>(a)].head == i) make_orphan(j);
  }
}

void MaxFlowGraph::process_sink_orphan(int i) {
  int best_arc = kNone;
  int best_dist = kInfiniteDist;
  for (int a0 = nodes_[static_cast<std::size_t>(i)].first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    if (arcs_[static_cast<std::size_t>(a0)].r_cap <= epsilon_) continue;
    int j = arcs_[static_cast<std::size_t>(a0)].head;
    if (!nodes_[static_cast<std::size_t>(j)].is_sink || nodes_[static_cast<std::size_t>(j)].parent == kNone) continue;
    int d = 0;
    for (;;) {
      Node& nj = nodes_[static_cast<std::size_t>(j)];
      if (nj.ts == time_) {
        d += nj.dist;
        break;
      }
      const int a = nj.parent;
      ++d;
      if (a == kTerminal) {
        nj.ts = time_;
        nj.dist = 1;
        break;
      }
      if (a == kOrphan) {
        d = kInfiniteDist;
        break;
      }
      j = arcs_[static_cast<std::size_t>(a)].head;
    }
    if (d < kInfiniteDist) {
      if (d < best_dist) {
        best_arc = a0;
        best_dist = d;
      }
      for (j = arcs_[static_cast<std::size_t>(a0)].head; nodes_[static_cast<std::size_t>(j)].ts != time_;
           j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
        nodes_[static_cast<std::size_t>(j)].ts = time_;
        nodes_[static_cast<std::size_t>(j)].dist = d--;
      }
    }
  }
  Node& n = nodes_[static_cast<std::size_t>(i)];
  n.parent = best_arc;
  if (best_arc != kNone) {
    n.ts = time_;
    n.dist = best_dist + 1;
    return;
  }
  n.parent = kNone;
  for (int a0 = n.first; a0 != kNone; a0 = arcs_[static_cast<std::size_t>(a0)].next) {
    const int j = arcs_[static_cast<std::size_t>(a0)].head;
    Node& nj = nodes_[static_cast<std::size_t>(j)];
    const int a = nj.parent;
    if (!nj.is_sink || a == kNone) continue;
    if (arcs_[static_cast<std::size_t>(a0)].r_cap > epsilon_) set_active(j);
    if (a != kTerminal && a != kOrphan && arcs_[static_cast<std::size_t>(a)].head == i) make_orphan(j);
  }
}

double MaxFlowGraph::maxflow() {
  require(!solved_, "maxflow() may only be called once per graph");
  solved_ = true;
  time_ = 0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    Node& n = nodes_[k];
    n.ts = 0;
    if (n.tr_cap > epsilon_) {
      n.is_sink = false;
      n.parent = kTerminal;
      n.dist = 1;
      set_active(static_cast<int>(k));
    } else if (n.tr_cap < -epsilon_) {
      n.is_sink = true;
      n.parent = kTerminal;
      n.dist = 1;
      set_active(static_cast<int>(k));
    } else {
      n.parent = kNone;
    }
  }

  int current = kNone;
  for (;;) {
    int i = current;
    if (i != kNone && nodes_[static_cast<std::size_t>(i)].parent == kNone) i = kNone;
    if (i == kNone) {
      i = next_active();
      if (i == kNone) break;
    }

    int middle = kNone;
    Node& ni = nodes_[static_cast<std::size_t>(i)];
    if (!ni.is_sink) {
      for (int a = ni.first; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
        if (arcs_[static_cast<std::size_t>(a)].r_cap <= epsilon_) continue;
        const int j = arcs_[static_cast<std::size_t>(a)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (nj.parent == kNone) {
          nj.is_sink = false;
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
          set_active(j);
        } else if (nj.is_sink) {
          middle = a;
          break;
        } else if (nj.ts <= ni.ts && nj.dist > ni.dist) {
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
        }
      }
    } else {
      for (int a = ni.first; a != kNone; a = arcs_[static_cast<std::size_t>(a)].next) {
        if (arcs_[static_cast<std::size_t>(sister(a))].r_cap <= epsilon_) continue;
        const int j = arcs_[static_cast<std::size_t>(a)].head;
        Node& nj = nodes_[static_cast<std::size_t>(j)];
        if (nj.parent == kNone) {
          nj.is_sink = true;
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
          set_active(j);
        } else if (!nj.is_sink) {
          middle = sister(a);
          break;
        } else if (nj.ts <= ni.ts && nj.dist > ni.dist) {
          nj.parent = sister(a);
          nj.ts = ni.ts;
          nj.dist = ni.dist + 1;
        }
      }
    }

    ++time_;
    if (middle == kNone) {
      current = kNone;
      continue;
    }
    current = i;
    augment(middle);
    while (!orphans_.empty()) {
      const int o = orphans_.back();
      orphans_.pop_back();
      if (nodes_[static_cast<std::size_t>(o)].is_sink) {
        process_sink_orphan(o);
      } else {
        process_source_orphan(o);
      }
    }
  }
  return flow_;
}

bool MaxFlowGraph::on_sink_side(int i) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  return n.parent != kNone && n.is_sink;
}

}  // namespace perturbmax

namespace perturbmax {

PushRelabelGraph::PushRelabelGraph(int num_nodes, double epsilon)
    : n_(num_nodes), epsilon_(epsilon), tr_cap_(static_cast<std::size_t>(std::max(num_nodes, 0)), 0.0) {
  require(num_nodes >= 0, "node count must be nonnegative");
}

void PushRelabelGraph::reserve_edges(std::size_t count) {
  edge_ends_.reserve(count);
  edge_caps_.reserve(count);
}

void PushRelabelGraph::add_edge(int i, int j, double cap, double rev_cap) {
  require(i != j, "self loops are not allowed");
  require(i >= 0 && j >= 0 && i < n_ && j < n_, "edge endpoint out of range");
  require(cap >= 0.0 && rev_cap >= 0.0, "capacities must be nonnegative");
  edge_ends_.push_back({i, j});
  edge_caps_.push_back({cap, rev_cap});
}

void PushRelabelGraph::add_terminal_weights(int i, double source_cap, double sink_cap) {
  require(source_cap >= 0.0 && sink_cap >= 0.0, "terminal capacities must be nonnegative");
  constant_flow_ += std::min(source_cap, sink_cap);
  tr_cap_[static_cast<std::size_t>(i)] += source_cap - sink_cap;
}

void PushRelabelGraph::activate(int u) {
  const int d = label_[static_cast<std::size_t>(u)];
  buckets_[static_cast<std::size_t>(d)].push_back(u);
  highest_ = std::max(highest_, d);
}

void PushRelabelGraph::global_relabel() {
  const int total = n_ + 1;
  std::fill(label_.begin(), label_.end(), total);
  std::fill(label_count_.begin(), label_count_.end(), 0);
  for (auto& b : buckets_) b.clear();
  highest_ = 0;
  std::vector<int> queue;
  queue.reserve(static_cast<std::size_t>(total));
  label_[static_cast<std::size_t>(n_)] = 0;
  queue.push_back(n_);
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int u = queue[q];
    const int du = label_[static_cast<std::size_t>(u)];
    for (std::size_t a = first_[static_cast<std::size_t>(u)]; a < first_[static_cast<std::size_t>(u) + 1]; ++a) {
      const int v = arcs_[a].head;
      // v reaches u through the reverse arc v -> u.
      if (label_[static_cast<std::size_t>(v)] == total && arcs_[static_cast<std::size_t>(arcs_[a].rev)].r_cap > epsilon_) {
        label_[static_cast<std::size_t>(v)] = du + 1;
        queue.push_back(v);
      }
    }
  }
  for (int u = 0; u < n_; ++u) {
    const auto us = static_cast<std::size_t>(u);
    current_[us] = first_[us];
    if (label_[us] < total) {
      label_count_[static_cast<std::size_t>(label_[us])]++;
      if (excess_[us] > epsilon_) activate(u);
    }
  }
  work_since_relabel_ = 0;
}

void PushRelabelGraph::gap(int level) {
  const int total = n_ + 1;
  for (int u = 0; u < n_; ++u) {
    int& d = label_[static_cast<std::size_t>(u)];
    if (d > level && d < total) {
      label_count_[static_cast<std::size_t>(d)]--;
      d = total;
    }
  }
}

void PushRelabelGraph::relabel(int u) {
  const auto us = static_cast<std::size_t>(u);
  const int total = n_ + 1;
  const int old = label_[us];
  int best = total;
  std::size_t best_arc = first_[us];
  for (std::size_t a = first_[us]; a < first_[us + 1]; ++a) {
    if (arcs_[a].r_cap > epsilon_ && label_[static_cast<std::size_t>(arcs_[a].head)] + 1 < best) {
      best = label_[static_cast<std::size_t>(arcs_[a].head)] + 1;
      best_arc = a;
    }
  }
  work_since_relabel_ += first_[us + 1] - first_[us] + 12;
  label_count_[static_cast<std::size_t>(old)]--;
  label_[us] = best;
  current_[us] = best_arc;
  if (best < total) label_count_[static_cast<std::size_t>(best)]++;
  if (label_count_[static_cast<std::size_t>(old)] == 0) {
    gap(old);
    if (label_[us] > old) label_[us] = total;
  }
}

void PushRelabelGraph::discharge(int u) {
  const auto us = static_cast<std::size_t>(u);
  const int total = n_ + 1;
  while (excess_[us] > epsilon_) {
    if (current_[us] == first_[us + 1]) {
      relabel(u);
      if (label_[us] >= total) return;
      continue;
    }
    Arc& arc = arcs_[current_[us]];
    const auto vs = static_cast<std::size_t>(arc.head);
    if (arc.r_cap > epsilon_ && label_[us] == label_[vs] + 1) {
      const double delta = std::min(excess_[us], arc.r_cap);
      arc.r_cap -= delta;
      arcs_[static_cast<std::size_t>(arc.rev)].r_cap += delta;
      excess_[us] -= delta;
      const bool was_idle = excess_[vs] <= epsilon_;
      excess_[vs] += delta;
      if (was_idle && arc.head != n_ && excess_[vs] > epsilon_) activate(arc.head);
    } else {
      ++current_[us];
    }
  }
}

double PushRelabelGraph::maxflow() {
  require(!solved_, "maxflow() may only be called once per graph");
  solved_ = true;
  const int total = n_ + 1;
  const auto N = static_cast<std::size_t>(total);

  // Compressed adjacency: edges, then node -> sink arcs.
  std::vector<std::size_t> degree(N, 0);
  for (const auto& e : edge_ends_) {
    degree[static_cast<std::size_t>(e[0])]++;
    degree[static_cast<std::size_t>(e[1])]++;
  }
  for (int u = 0; u < n_; ++u)
    if (tr_cap_[static_cast<std::size_t>(u)] < 0) {
      degree[static_cast<std::size_t>(u)]++;
      degree[N - 1]++;
    }
  first_.assign(N + 1, 0);
  for (std::size_t u = 0; u < N; ++u) first_[u + 1] = first_[u] + degree[u];
  arcs_.assign(first_[N], Arc{0, 0, 0.0});
  std::vector<std::size_t> fill(first_.begin(), first_.end() - 1);
  auto link = [&](int i, int j, double cap, double rev_cap) {
    const std::size_t a = fill[static_cast<std::size_t>(i)]++;
    const std::size_t b = fill[static_cast<std::size_t>(j)]++;
    arcs_[a] = {j, static_cast<int>(b), cap};
    arcs_[b] = {i, static_cast<int>(a), rev_cap};
  };
  for (std::size_t e = 0; e < edge_ends_.size(); ++e) link(edge_ends_[e][0], edge_ends_[e][1], edge_caps_[e][0], edge_caps_[e][1]);
  for (int u = 0; u < n_; ++u)
    if (tr_cap_[static_cast<std::size_t>(u)] < 0) link(u, n_, -tr_cap_[static_cast<std::size_t>(u)], 0.0);
  edge_ends_ = {};
  edge_caps_ = {};

  excess_.assign(N, 0.0);
  for (int u = 0; u < n_; ++u) excess_[static_cast<std::size_t>(u)] = std::max(0.0, tr_cap_[static_cast<std::size_t>(u)]);
  current_.assign(N, 0);
  label_.assign(N, total);
  label_count_.assign(N + 1, 0);
  buckets_.assign(N + 1, {});
  global_relabel();

  const std::size_t relabel_period = 6 * N + arcs_.size() / 2;
  while (highest_ >= 0) {
    auto& bucket = buckets_[static_cast<std::size_t>(highest_)];
    if (bucket.empty()) {
      --highest_;
      continue;
    }
    const int u = bucket.back();
    bucket.pop_back();
    const auto us = static_cast<std::size_t>(u);
    if (label_[us] != highest_ || excess_[us] <= epsilon_) continue;
    discharge(u);
    if (excess_[us] > epsilon_ && label_[us] < total) activate(u);
    if (work_since_relabel_ > relabel_period) global_relabel();
  }

  // Sink side: nodes that still reach the sink through residual arcs.
  sink_side_.assign(N, 0);
  std::vector<int> queue{n_};
  sink_side_[N - 1] = 1;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int u = queue[q];
    for (std::size_t a = first_[static_cast<std::size_t>(u)]; a < first_[static_cast<std::size_t>(u) + 1]; ++a) {
      const int v = arcs_[a].head;
      if (!sink_side_[static_cast<std::size_t>(v)] && arcs_[static_cast<std::size_t>(arcs_[a].rev)].r_cap > epsilon_) {
        sink_side_[static_cast<std::size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  return constant_flow_ + excess_[N - 1];
}

}  // namespace perturbmax
