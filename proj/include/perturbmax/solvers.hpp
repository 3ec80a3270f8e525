#pragma once

#include <optional>
#include <string>

#include "perturbmax/gumbel.hpp"
#include "perturbmax/model.hpp"

namespace perturbmax {

enum class SolverKind { bruteforce, graphcut };
enum class Strategy { automatic, bruteforce, graphcut };

std::string to_string(SolverKind kind);
std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& s);

struct MapResult {
  Configuration argmax;
  double value = kNegInf;  // theta(x*) + perturbation(x*)
  SolverKind solver = SolverKind::bruteforce;
  bool exact = true;
};

/// Exact maximizer of theta(x) + sum_alpha gamma_alpha(x_alpha) by enumeration.
/// Ties go to the lexicographically smallest configuration.
MapResult solve_bruteforce(const PairwiseModel& model, const PerturbationSet* perturbation = nullptr);

/// Reason the graph-cut reduction does not apply, or nullopt when it does:
/// binary variables, no domain mask, singleton perturbations, and every
/// pairwise table supermodular (theta00 + theta11 >= theta01 + theta10).
std::optional<std::string> graphcut_rejection(const PairwiseModel& model, const PerturbationSet* perturbation = nullptr);

/// Exact MAP for attractive binary models via min-cut. Singleton perturbations
/// fold into the unaries before the network is built. Among optimal labelings
/// the one with the fewest 1s is returned: a variable gets state 1 only if it
/// can reach the sink in the final residual graph.
MapResult solve_graphcut(const PairwiseModel& model, const PerturbationSet* perturbation = nullptr);

/// Routes to graph cuts when its preconditions hold, else to enumeration when
/// the joint space is under the cap. Throws SolverRejected otherwise.
SolverKind select_solver(const PairwiseModel& model, const PerturbationSet* perturbation, Strategy strategy);

MapResult solve(const PairwiseModel& model, const PerturbationSet* perturbation = nullptr,
                Strategy strategy = Strategy::automatic);

}  // namespace perturbmax
