#include "perturbmax/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "perturbmax/errors.hpp"
#include "perturbmax/maxflow.hpp"

namespace perturbmax {

std::string to_string(SolverKind kind) { return kind == SolverKind::graphcut ? "graphcut" : "bruteforce"; }

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::automatic:
      return "auto";
    case Strategy::bruteforce:
      return "bruteforce";
    case Strategy::graphcut:
      return "graphcut";
  }
  return "auto";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "auto" || s == "automatic") return Strategy::automatic;
  if (s == "bruteforce") return Strategy::bruteforce;
  if (s == "graphcut") return Strategy::graphcut;
  throw ContractError("unknown solver strategy '" + s + "'");
}

namespace {

void check_perturbation(const PairwiseModel& model, const PerturbationSet* perturbation) {
  if (!perturbation) return;
  for (const auto& alpha : perturbation->subsets)
    for (int v : alpha) require(v >= 0 && v < model.num_variables(), "perturbation refers to a variable outside the model");
}

}  // namespace

MapResult solve_bruteforce(const PairwiseModel& model, const PerturbationSet* perturbation) {
  check_perturbation(model, perturbation);
  ConfigurationCursor cursor(model);
  MapResult best;
  best.solver = SolverKind::bruteforce;
  while (cursor.next()) {
    const auto x = cursor.current();
    double v = model.evaluate_unchecked(x);
    if (perturbation) v += perturbation->value(x);
    if (v > best.value) {
      best.value = v;
      best.argmax.assign(x.begin(), x.end());
    }
  }
  if (best.argmax.empty() && model.num_variables() > 0) throw ContractError("model has no feasible configuration");
  return best;
}

std::optional<std::string> graphcut_rejection(const PairwiseModel& model, const PerturbationSet* perturbation) {
  if (!model.is_binary()) return "graph cuts need binary variables";
  if (model.has_mask()) return "graph cuts do not support domain masks";
  if (perturbation && !perturbation->singletons_only()) return "graph cuts need singleton perturbations";
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const auto t = model.pair_table(e);
    const double scale = std::max({1.0, std::abs(t[0]), std::abs(t[1]), std::abs(t[2]), std::abs(t[3])});
    if (t[0] + t[3] - t[1] - t[2] < -1e-12 * scale) {
      const auto& ed = model.edges()[e];
      return "edge (" + std::to_string(ed.i) + "," + std::to_string(ed.j) + ") is not supermodular";
    }
  }
  return std::nullopt;
}

MapResult solve_graphcut(const PairwiseModel& model, const PerturbationSet* perturbation) {
  check_perturbation(model, perturbation);
  if (auto why = graphcut_rejection(model, perturbation)) throw SolverRejected(*why);

  const int n = model.num_variables();
  // Minimize E = -(theta + gamma). cost1/cost0 are the unary energies after
  // folding the linear parts of each pairwise term.
  std::vector<double> cost0(static_cast<std::size_t>(n)), cost1(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cost0[static_cast<std::size_t>(i)] = -model.unary(i)[0];
    cost1[static_cast<std::size_t>(i)] = -model.unary(i)[1];
  }
  if (perturbation) {
    for (std::size_t s = 0; s < perturbation->subsets.size(); ++s) {
      const auto v = static_cast<std::size_t>(perturbation->subsets[s][0]);
      cost0[v] -= perturbation->tables[s][0];
      cost1[v] -= perturbation->tables[s][1];
    }
  }

  double scale = 1.0;
  for (int i = 0; i < n; ++i) scale = std::max({scale, std::abs(cost0[static_cast<std::size_t>(i)]), std::abs(cost1[static_cast<std::size_t>(i)])});
  std::vector<double> weights(model.edges().size());
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const auto& ed = model.edges()[e];
    const auto t = model.pair_table(e);
    const double a = -t[0], b = -t[1], c = -t[2], d = -t[3];
    // E_ij = a + (c - a) x_i + (d - c) x_j + (b + c - a - d)(1 - x_i) x_j
    cost1[static_cast<std::size_t>(ed.i)] += c - a;
    cost1[static_cast<std::size_t>(ed.j)] += d - c;
    weights[e] = std::max(0.0, b + c - a - d);
    scale = std::max(scale, weights[e]);
  }

  MaxFlowGraph graph(n, 1e-12 * scale);
  graph.reserve_edges(model.edges().size());
  for (int i = 0; i < n; ++i) {
    const double delta = cost1[static_cast<std::size_t>(i)] - cost0[static_cast<std::size_t>(i)];
    // label 1 = sink side: paying delta > 0 means cutting s->i.
    if (delta > 0) {
      graph.add_terminal_weights(i, delta, 0.0);
    } else if (delta < 0) {
      graph.add_terminal_weights(i, 0.0, -delta);
    }
  }
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    if (weights[e] > 0) graph.add_edge(model.edges()[e].i, model.edges()[e].j, weights[e], 0.0);
  }
  graph.maxflow();

  MapResult result;
  result.solver = SolverKind::graphcut;
  result.argmax.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) result.argmax[static_cast<std::size_t>(i)] = graph.on_sink_side(i) ? 1 : 0;
  result.value = model.evaluate_unchecked(result.argmax);
  if (perturbation) result.value += perturbation->value(result.argmax);
  return result;
}

SolverKind select_solver(const PairwiseModel& model, const PerturbationSet* perturbation, Strategy strategy) {
  switch (strategy) {
    case Strategy::graphcut:
      return SolverKind::graphcut;
    case Strategy::bruteforce:
      return SolverKind::bruteforce;
    case Strategy::automatic:
      break;
  }
  const auto why = graphcut_rejection(model, perturbation);
  if (!why) return SolverKind::graphcut;
  const auto count = model.config_count();
  if (count && *count <= kEnumerationCap) return SolverKind::bruteforce;
  throw SolverRejected("no exact solver: " + *why + " and the joint state space exceeds the enumeration cap");
}

MapResult solve(const PairwiseModel& model, const PerturbationSet* perturbation, Strategy strategy) {
  return select_solver(model, perturbation, strategy) == SolverKind::graphcut ? solve_graphcut(model, perturbation)
                                                                              : solve_bruteforce(model, perturbation);
}

}  // namespace perturbmax
