#pragma once

#include "spibb/model.hpp"

namespace spibb {

/// Membership table of state-action pairs with too little data:
/// B[x][a] = (N(x,a) < n_wedge).
struct BootstrappedSet {
    int n_states = 0;
    int n_actions = 0;
    std::vector<std::uint8_t> membership;

    bool contains(int x, int a) const {
        return membership[static_cast<size_t>(x) * n_actions + a] != 0;
    }
};

BootstrappedSet bootstrapped_set(const CountTable& counts, long long n_wedge);

/// Plain greedy batch RL: the optimal policy of the MLE model, self-loop
/// defaults and all.
PolicyTable basic_rl(const Mdp& mle);

/// Reward-adjusted MDP RL: solves the MLE model with
/// R'(x,a) = R(x,a) - kappa_adj / sqrt(N(x,a)); unobserved pairs are pinned
/// to the minimum adjusted reward -r_max (the adjustment's divergent limit).
PolicyTable ramdp(const Mdp& mle, const CountTable& counts, double kappa_adj);

/// Baseline-bootstrapping policy iteration: each improvement row copies the
/// baseline on bootstrapped pairs and gives all remaining mass to the best
/// non-bootstrapped action. Rows where every action is bootstrapped stay
/// fully baseline. Guard and stopping rule shared with the soft variants.
PolicyTable pi_b_spibb(const Mdp& mle, const PolicyTable& baseline, const CountTable& counts,
                       long long n_wedge);

/// Capped greedy variant: improvement rows fill mass in descending-Q order,
/// capping bootstrapped actions at their baseline probability and leaving
/// the rest uncapped (ties to the lowest action index).
PolicyTable pi_leq_b_spibb(const Mdp& mle, const PolicyTable& baseline, const CountTable& counts,
                           long long n_wedge);

}  // namespace spibb
