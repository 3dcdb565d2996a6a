#pragma once

#include <cstdint>
#include <vector>

#include "spibb/model.hpp"
#include "spibb/rng.hpp"

namespace spibb::testutil {

/// Empty MDP shell with sized tensors; dynamics filled by the caller.
inline Mdp make_mdp(int n_states, int n_actions, double gamma = 0.95, double r_max = 1.0) {
    Mdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.r_max = r_max;
    mdp.terminal.assign(static_cast<size_t>(n_states), 0);
    mdp.reward.assign(static_cast<size_t>(n_states) * n_actions, 0.0);
    mdp.transition.assign(static_cast<size_t>(n_states) * n_actions * n_states, 0.0);
    return mdp;
}

/// Dense random MDP: Dirichlet transition rows, uniform rewards in
/// [0, r_max], optional terminal states (their rows become self-loops with
/// zero reward so validation passes).
inline Mdp random_dense_mdp(Rng& rng, int n_states, int n_actions, double gamma,
                            const std::vector<int>& terminal_states = {}) {
    Mdp mdp = make_mdp(n_states, n_actions, gamma);
    for (int t : terminal_states) mdp.terminal[static_cast<size_t>(t)] = 1;
    for (int x = 0; x < n_states; ++x) {
        for (int a = 0; a < n_actions; ++a) {
            if (mdp.is_terminal(x)) {
                mdp.p(x, a, x) = 1.0;
                continue;
            }
            std::vector<double> row = rng.dirichlet(n_states);
            for (int y = 0; y < n_states; ++y) mdp.p(x, a, y) = row[static_cast<size_t>(y)];
            mdp.r(x, a) = rng.uniform(0.0, mdp.r_max);
        }
    }
    mdp.validate();
    return mdp;
}

/// Random stochastic policy with Dirichlet rows.
inline PolicyTable random_policy(Rng& rng, int n_states, int n_actions) {
    PolicyTable policy(n_states, n_actions);
    for (int x = 0; x < n_states; ++x) {
        std::vector<double> row = rng.dirichlet(n_actions);
        for (int a = 0; a < n_actions; ++a) policy.at(x, a) = row[static_cast<size_t>(a)];
    }
    return policy;
}

}  // namespace spibb::testutil
