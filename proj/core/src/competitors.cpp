#include "spibb/competitors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spibb/dp.hpp"
#include "spibb/soft_spibb.hpp"

namespace spibb {

namespace {

void check_counts_shape(const Mdp& mle, const CountTable& counts) {
    if (counts.n_states != mle.n_states || counts.n_actions != mle.n_actions) {
        throw std::invalid_argument("count table shape does not match the model");
    }
}

}  // namespace

BootstrappedSet bootstrapped_set(const CountTable& counts, long long n_wedge) {
    if (n_wedge < 0) throw std::invalid_argument("bootstrapped_set: n_wedge must be nonnegative");
    BootstrappedSet set;
    set.n_states = counts.n_states;
    set.n_actions = counts.n_actions;
    set.membership.resize(counts.values.size());
    for (size_t i = 0; i < counts.values.size(); ++i) {
        set.membership[i] = counts.values[i] < n_wedge ? 1 : 0;
    }
    return set;
}

PolicyTable basic_rl(const Mdp& mle) { return solve_optimal(mle).policy; }

PolicyTable ramdp(const Mdp& mle, const CountTable& counts, double kappa_adj) {
    mle.validate();
    check_counts_shape(mle, counts);
    if (!(kappa_adj >= 0.0)) throw std::invalid_argument("ramdp: kappa_adj must be nonnegative");
    if (kappa_adj == 0.0) return solve_optimal(mle).policy;

    Mdp adjusted = mle;
    double biggest = mle.r_max;
    for (int x = 0; x < mle.n_states; ++x) {
        for (int a = 0; a < mle.n_actions; ++a) {
            long long n = counts.at(x, a);
            double r = n > 0 ? mle.r(x, a) - kappa_adj / std::sqrt(static_cast<double>(n))
                             : -mle.r_max;
            adjusted.r(x, a) = r;
            biggest = std::max(biggest, std::abs(r));
        }
    }
    adjusted.r_max = biggest;
    return solve_optimal(adjusted).policy;
}

PolicyTable pi_b_spibb(const Mdp& mle, const PolicyTable& baseline, const CountTable& counts,
                       long long n_wedge) {
    check_counts_shape(mle, counts);
    BootstrappedSet boot = bootstrapped_set(counts, n_wedge);

    RowImprover improve = [&](std::span<const double> q_row, int x) {
        std::vector<double> row(baseline.row(x).begin(), baseline.row(x).end());
        int best = -1;
        double free_mass = 0.0;
        for (int a = 0; a < mle.n_actions; ++a) {
            if (boot.contains(x, a)) continue;
            free_mass += row[static_cast<size_t>(a)];
            if (best < 0 || q_row[static_cast<size_t>(a)] > q_row[static_cast<size_t>(best)]) best = a;
        }
        if (best < 0) return row;  // every action is bootstrapped
        for (int a = 0; a < mle.n_actions; ++a) {
            if (!boot.contains(x, a)) row[static_cast<size_t>(a)] = 0.0;
        }
        row[static_cast<size_t>(best)] = free_mass;
        return row;
    };
    return run_guarded_policy_iteration(mle, baseline, improve, 1000, 1e-10, false).policy;
}

PolicyTable pi_leq_b_spibb(const Mdp& mle, const PolicyTable& baseline, const CountTable& counts,
                           long long n_wedge) {
    check_counts_shape(mle, counts);
    BootstrappedSet boot = bootstrapped_set(counts, n_wedge);

    RowImprover improve = [&](std::span<const double> q_row, int x) {
        const int na = mle.n_actions;
        std::vector<int> order(static_cast<size_t>(na));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
            return q_row[static_cast<size_t>(i)] > q_row[static_cast<size_t>(j)];
        });
        std::vector<double> row(static_cast<size_t>(na), 0.0);
        double remaining = 1.0;
        for (int a : order) {
            double cap = boot.contains(x, a) ? baseline.at(x, a) : remaining;
            double take = std::min(cap, remaining);
            row[static_cast<size_t>(a)] = take;
            remaining -= take;
            if (remaining <= 0.0) break;
        }
        return row;
    };
    return run_guarded_policy_iteration(mle, baseline, improve, 1000, 1e-10, false).policy;
}

}  // namespace spibb
