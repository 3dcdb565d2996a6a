#pragma once

#include "spibb/model.hpp"

namespace spibb {

/// Exact policy evaluation: the fixed point of
///   Q(x,a) = R(x,a) + gamma * sum_x' P(x'|x,a) * sum_a' pi(a'|x') Q(x',a')
/// with terminal states contributing zero continuation (their rows are 0).
/// Solved through the state-value linear system (direct dense solve when
/// |X| * |A| <= 1e4, otherwise fixed-point iteration to residual <= 1e-12).
QTable policy_evaluation_q(const Mdp& mdp, const PolicyTable& policy);

/// rho(pi) = sum_a pi(a|x0) Q(x0,a): expected discounted return from the
/// initial state.
double policy_value(const Mdp& mdp, const PolicyTable& policy);

/// Value of a policy at every state (V(x) = sum_a pi(a|x) Q(x,a)).
std::vector<double> policy_state_values(const Mdp& mdp, const PolicyTable& policy);

struct OptimalSolution {
    PolicyTable policy;  // deterministic greedy rows
    QTable q;            // optimal action values
};

/// Optimal deterministic policy by value iteration (sup-norm residual
/// <= 1e-12); greedy ties broken by lowest action index.
OptimalSolution solve_optimal(const Mdp& mdp);

/// Discounted visit matrix D with D.at(y, x) = expected discounted number of
/// visits to y starting from x under pi, i.e. ((I - gamma P_pi)^{-1})^T.
/// Terminal states have zero continuation, so each column sum lies in
/// [1, 1/(1-gamma)].
Matrix discounted_visit_matrix(const Mdp& mdp, const PolicyTable& policy);

}  // namespace spibb
