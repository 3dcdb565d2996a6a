#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace spibb {

/// Dense row-major matrix helper used for visit matrices and similar results.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

/// Tabular MDP: transition tensor P[x][a][x'], reward table R[x][a], discount,
/// terminal flags and a designated initial state. Terminal states end the
/// episode on entry; their transition/reward rows are ignored by evaluation.
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.95;
    double r_max = 1.0;
    int initial_state = 0;
    std::vector<std::uint8_t> terminal;  // size n_states
    std::vector<double> reward;          // size n_states * n_actions
    std::vector<double> transition;      // size n_states * n_actions * n_states

    double r(int x, int a) const { return reward[static_cast<size_t>(x) * n_actions + a]; }
    double& r(int x, int a) { return reward[static_cast<size_t>(x) * n_actions + a]; }
    double p(int x, int a, int y) const {
        return transition[(static_cast<size_t>(x) * n_actions + a) * n_states + y];
    }
    double& p(int x, int a, int y) {
        return transition[(static_cast<size_t>(x) * n_actions + a) * n_states + y];
    }
    std::span<const double> transition_row(int x, int a) const {
        return {transition.data() + (static_cast<size_t>(x) * n_actions + a) * n_states,
                static_cast<size_t>(n_states)};
    }
    bool is_terminal(int x) const { return terminal[static_cast<size_t>(x)] != 0; }

    /// Upper bound on any discounted return: r_max / (1 - gamma).
    double v_max() const { return r_max / (1.0 - gamma); }

    /// Checks all structural invariants (row sums, reward bounds, index
    /// ranges). Throws std::invalid_argument on the first violation.
    void validate() const;
};

/// Shape metadata of an Mdp: everything except dynamics and rewards. Used to
/// build estimates from data without touching the true model.
struct MdpShape {
    int n_states = 0;
    int n_actions = 0;
    int initial_state = 0;
    std::vector<std::uint8_t> terminal;

    static MdpShape of(const Mdp& mdp) {
        return MdpShape{mdp.n_states, mdp.n_actions, mdp.initial_state, mdp.terminal};
    }
    bool is_terminal(int x) const { return terminal[static_cast<size_t>(x)] != 0; }
    void validate() const;
};

/// One logged environment step.
struct Transition {
    int trajectory_id = 0;
    int step = 0;
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
};

/// Ordered batch of transitions grouped into trajectories.
struct Dataset {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Transition> transitions;

    /// Index ranges and strictly increasing steps within each trajectory.
    /// Throws std::invalid_argument on violation.
    void validate() const;
};

/// State-action visit counts N(x,a).
struct CountTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<long long> values;  // size n_states * n_actions

    CountTable() = default;
    CountTable(int ns, int na) : n_states(ns), n_actions(na), values(static_cast<size_t>(ns) * na, 0) {}

    long long at(int x, int a) const { return values[static_cast<size_t>(x) * n_actions + a]; }
    long long& at(int x, int a) { return values[static_cast<size_t>(x) * n_actions + a]; }
    /// N(x) = sum_a N(x,a).
    long long state_count(int x) const {
        long long total = 0;
        for (int a = 0; a < n_actions; ++a) total += at(x, a);
        return total;
    }
};

/// Stochastic policy pi(a|x); every row is a distribution over actions.
struct PolicyTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> probs;  // size n_states * n_actions

    PolicyTable() = default;
    PolicyTable(int ns, int na, double fill = 0.0)
        : n_states(ns), n_actions(na), probs(static_cast<size_t>(ns) * na, fill) {}

    /// Uniform policy over all actions.
    static PolicyTable uniform(int ns, int na) { return PolicyTable(ns, na, 1.0 / na); }

    double at(int x, int a) const { return probs[static_cast<size_t>(x) * n_actions + a]; }
    double& at(int x, int a) { return probs[static_cast<size_t>(x) * n_actions + a]; }
    std::span<const double> row(int x) const {
        return {probs.data() + static_cast<size_t>(x) * n_actions, static_cast<size_t>(n_actions)};
    }
    std::span<double> row(int x) {
        return {probs.data() + static_cast<size_t>(x) * n_actions, static_cast<size_t>(n_actions)};
    }

    /// Rows must sum to 1 within `tolerance` with entries in [0,1].
    /// Throws std::invalid_argument otherwise.
    void validate(double tolerance = 1e-9) const;

    /// Adds the row's deviation from 1 to its largest entry until the
    /// floating-point sum is exactly 1.0 (a few ulps of adjustment at most).
    /// Policy constructions accumulate rounding drift; persisted policies are
    /// exactified so loaders see exact distributions.
    void exactify_row(int x);
    void exactify_rows();
};

/// Action-value table Q(x,a).
struct QTable {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> values;  // size n_states * n_actions

    QTable() = default;
    QTable(int ns, int na, double fill = 0.0)
        : n_states(ns), n_actions(na), values(static_cast<size_t>(ns) * na, fill) {}

    double at(int x, int a) const { return values[static_cast<size_t>(x) * n_actions + a]; }
    double& at(int x, int a) { return values[static_cast<size_t>(x) * n_actions + a]; }
    std::span<const double> row(int x) const {
        return {values.data() + static_cast<size_t>(x) * n_actions, static_cast<size_t>(n_actions)};
    }
};

/// Largest entry-wise absolute difference between two equally-shaped tables.
double max_abs_difference(const QTable& a, const QTable& b);

/// Frobenius norm of the entry-wise difference.
double frobenius_difference(const QTable& a, const QTable& b);

}  // namespace spibb
