#include "spibb/dp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spibb {

namespace {

constexpr double kResidualTol = 1e-12;
constexpr size_t kDirectSolveLimit = 10000;  // |X|*|A| above this switches to iteration
constexpr long kMaxSweeps = 20000000;

void check_pair(const Mdp& mdp, const PolicyTable& policy) {
    mdp.validate();
    policy.validate();
    if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions) {
        throw std::invalid_argument("policy shape does not match the MDP");
    }
}

// Compressed successor lists over non-terminal source states; terminal rows
// are dropped entirely (zero continuation, rows ignored by evaluation).
struct SparseModel {
    int n_states = 0;
    int n_actions = 0;
    std::vector<size_t> offsets;             // per (x,a), size n_states*n_actions + 1
    std::vector<std::pair<int, double>> arcs;  // (next_state, probability)

    explicit SparseModel(const Mdp& mdp) : n_states(mdp.n_states), n_actions(mdp.n_actions) {
        offsets.reserve(static_cast<size_t>(n_states) * n_actions + 1);
        offsets.push_back(0);
        for (int x = 0; x < n_states; ++x) {
            for (int a = 0; a < n_actions; ++a) {
                if (!mdp.is_terminal(x)) {
                    for (int y = 0; y < n_states; ++y) {
                        double pv = mdp.p(x, a, y);
                        if (pv != 0.0) arcs.emplace_back(y, pv);
                    }
                }
                offsets.push_back(arcs.size());
            }
        }
    }

    std::span<const std::pair<int, double>> row(int x, int a) const {
        size_t begin = offsets[static_cast<size_t>(x) * n_actions + a];
        size_t end = offsets[static_cast<size_t>(x) * n_actions + a + 1];
        return {arcs.data() + begin, end - begin};
    }
};

// State values V(x) = sum_a pi(a|x) Q(x,a) at the evaluation fixed point,
// with V = 0 at terminals.
std::vector<double> evaluate_state_values(const Mdp& mdp, const PolicyTable& policy) {
    const int n = mdp.n_states;
    const int na = mdp.n_actions;
    std::vector<double> v(static_cast<size_t>(n), 0.0);

    if (static_cast<size_t>(n) * na <= kDirectSolveLimit) {
        // Solve (I - gamma P_pi) V = R_pi over the state-value form; terminal
        // rows degenerate to V = 0.
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        for (int x = 0; x < n; ++x) {
            if (mdp.is_terminal(x)) continue;
            double reward_row = 0.0;
            for (int a = 0; a < na; ++a) {
                double pa = policy.at(x, a);
                if (pa == 0.0) continue;
                reward_row += pa * mdp.r(x, a);
                for (int y = 0; y < n; ++y) {
                    double pv = mdp.p(x, a, y);
                    if (pv != 0.0 && !mdp.is_terminal(y)) A(x, y) -= mdp.gamma * pa * pv;
                }
            }
            b(x) = reward_row;
        }
        Eigen::VectorXd sol = A.partialPivLu().solve(b);
        for (int x = 0; x < n; ++x) {
            if (!std::isfinite(sol(x))) throw std::runtime_error("policy evaluation: singular system");
            v[static_cast<size_t>(x)] = mdp.is_terminal(x) ? 0.0 : sol(x);
        }
        return v;
    }

    SparseModel sparse(mdp);
    std::vector<double> next(v.size(), 0.0);
    for (long sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double diff = 0.0;
        for (int x = 0; x < n; ++x) {
            if (mdp.is_terminal(x)) continue;
            double vx = 0.0;
            for (int a = 0; a < na; ++a) {
                double pa = policy.at(x, a);
                if (pa == 0.0) continue;
                double q = mdp.r(x, a);
                for (auto [y, pv] : sparse.row(x, a)) {
                    if (!mdp.is_terminal(y)) q += mdp.gamma * pv * v[static_cast<size_t>(y)];
                }
                vx += pa * q;
            }
            next[static_cast<size_t>(x)] = vx;
            diff = std::max(diff, std::abs(vx - v[static_cast<size_t>(x)]));
        }
        v.swap(next);
        if (diff <= kResidualTol) return v;
    }
    throw std::runtime_error("policy evaluation: fixed-point iteration did not converge");
}

QTable q_from_state_values(const Mdp& mdp, const std::vector<double>& v) {
    QTable q(mdp.n_states, mdp.n_actions, 0.0);
    for (int x = 0; x < mdp.n_states; ++x) {
        if (mdp.is_terminal(x)) continue;
        for (int a = 0; a < mdp.n_actions; ++a) {
            double value = mdp.r(x, a);
            for (int y = 0; y < mdp.n_states; ++y) {
                double pv = mdp.p(x, a, y);
                if (pv != 0.0 && !mdp.is_terminal(y)) value += mdp.gamma * pv * v[static_cast<size_t>(y)];
            }
            q.at(x, a) = value;
        }
    }
    return q;
}

}  // namespace

QTable policy_evaluation_q(const Mdp& mdp, const PolicyTable& policy) {
    check_pair(mdp, policy);
    return q_from_state_values(mdp, evaluate_state_values(mdp, policy));
}

std::vector<double> policy_state_values(const Mdp& mdp, const PolicyTable& policy) {
    check_pair(mdp, policy);
    return evaluate_state_values(mdp, policy);
}

double policy_value(const Mdp& mdp, const PolicyTable& policy) {
    check_pair(mdp, policy);
    return evaluate_state_values(mdp, policy)[static_cast<size_t>(mdp.initial_state)];
}

OptimalSolution solve_optimal(const Mdp& mdp) {
    mdp.validate();
    const int n = mdp.n_states;
    const int na = mdp.n_actions;
    SparseModel sparse(mdp);

    std::vector<double> v(static_cast<size_t>(n), 0.0);
    std::vector<double> next(v.size(), 0.0);
    bool settled = false;
    for (long sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double diff = 0.0;
        for (int x = 0; x < n; ++x) {
            if (mdp.is_terminal(x)) continue;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < na; ++a) {
                double q = mdp.r(x, a);
                for (auto [y, pv] : sparse.row(x, a)) {
                    if (!mdp.is_terminal(y)) q += mdp.gamma * pv * v[static_cast<size_t>(y)];
                }
                best = std::max(best, q);
            }
            next[static_cast<size_t>(x)] = best;
            diff = std::max(diff, std::abs(best - v[static_cast<size_t>(x)]));
        }
        v.swap(next);
        if (diff <= kResidualTol) {
            settled = true;
            break;
        }
    }
    if (!settled) throw std::runtime_error("solve_optimal: value iteration did not converge");

    QTable q = q_from_state_values(mdp, v);
    PolicyTable greedy(n, na, 0.0);
    for (int x = 0; x < n; ++x) {
        int best = 0;  // terminal rows and exact ties both land on action 0
        for (int a = 1; a < na; ++a) {
            if (q.at(x, a) > q.at(x, best)) best = a;
        }
        greedy.at(x, best) = 1.0;
    }
    return OptimalSolution{std::move(greedy), std::move(q)};
}

Matrix discounted_visit_matrix(const Mdp& mdp, const PolicyTable& policy) {
    check_pair(mdp, policy);
    const int n = mdp.n_states;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (int x = 0; x < n; ++x) {
        if (mdp.is_terminal(x)) continue;  // terminal: visit counted on entry, no continuation
        for (int a = 0; a < mdp.n_actions; ++a) {
            double pa = policy.at(x, a);
            if (pa == 0.0) continue;
            for (int y = 0; y < n; ++y) {
                double pv = mdp.p(x, a, y);
                if (pv != 0.0) A(x, y) -= mdp.gamma * pa * pv;
            }
        }
    }
    Eigen::MatrixXd inv = A.partialPivLu().inverse();

    // inv(x, y) = discounted visits to y from start x; expose start states as
    // columns: D.at(y, x) = d(y | x).
    Matrix d(n, n);
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            double value = inv(x, y);
            if (!std::isfinite(value)) {
                throw std::runtime_error("discounted_visit_matrix: singular system");
            }
            d.at(y, x) = value;
        }
    }
    return d;
}

}  // namespace spibb
