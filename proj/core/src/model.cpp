#include "spibb/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace spibb {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace

void Mdp::validate() const {
    require(n_states > 0, "Mdp: n_states must be positive");
    require(n_actions > 0, "Mdp: n_actions must be positive");
    require(gamma >= 0.0 && gamma < 1.0, "Mdp: gamma must lie in [0, 1)");
    require(r_max > 0.0 && std::isfinite(r_max), "Mdp: r_max must be a positive finite real");
    require(initial_state >= 0 && initial_state < n_states, "Mdp: initial_state out of range");
    require(terminal.size() == static_cast<size_t>(n_states), "Mdp: terminal flag size mismatch");
    require(reward.size() == static_cast<size_t>(n_states) * n_actions, "Mdp: reward table size mismatch");
    require(transition.size() == static_cast<size_t>(n_states) * n_actions * n_states,
            "Mdp: transition tensor size mismatch");
    for (int x = 0; x < n_states; ++x) {
        for (int a = 0; a < n_actions; ++a) {
            double rv = r(x, a);
            require(std::isfinite(rv) && std::abs(rv) <= r_max + 1e-12,
                    "Mdp: |reward| exceeds r_max at state " + std::to_string(x) + " action " +
                        std::to_string(a));
            if (is_terminal(x)) continue;  // terminal rows are ignored by evaluation
            double sum = 0.0;
            for (int y = 0; y < n_states; ++y) {
                double pv = p(x, a, y);
                require(pv >= 0.0 && std::isfinite(pv),
                        "Mdp: negative or non-finite transition probability at state " +
                            std::to_string(x) + " action " + std::to_string(a));
                sum += pv;
            }
            require(std::abs(sum - 1.0) <= 1e-12,
                    "Mdp: transition row does not sum to 1 at state " + std::to_string(x) +
                        " action " + std::to_string(a));
        }
    }
}

void MdpShape::validate() const {
    require(n_states > 0, "MdpShape: n_states must be positive");
    require(n_actions > 0, "MdpShape: n_actions must be positive");
    require(initial_state >= 0 && initial_state < n_states, "MdpShape: initial_state out of range");
    require(terminal.size() == static_cast<size_t>(n_states), "MdpShape: terminal flag size mismatch");
}

void Dataset::validate() const {
    require(n_states > 0 && n_actions > 0, "Dataset: shape metadata must be positive");
    std::unordered_map<int, int> last_step;
    for (size_t i = 0; i < transitions.size(); ++i) {
        const Transition& t = transitions[i];
        const std::string where = " at row " + std::to_string(i);
        require(t.state >= 0 && t.state < n_states, "Dataset: state out of range" + where);
        require(t.next_state >= 0 && t.next_state < n_states, "Dataset: next_state out of range" + where);
        require(t.action >= 0 && t.action < n_actions, "Dataset: action out of range" + where);
        require(t.trajectory_id >= 0, "Dataset: negative trajectory id" + where);
        require(t.step >= 0, "Dataset: negative step" + where);
        require(std::isfinite(t.reward), "Dataset: non-finite reward" + where);
        auto it = last_step.find(t.trajectory_id);
        if (it != last_step.end()) {
            require(t.step > it->second,
                    "Dataset: steps not strictly increasing within trajectory " +
                        std::to_string(t.trajectory_id) + where);
            it->second = t.step;
        } else {
            last_step.emplace(t.trajectory_id, t.step);
        }
    }
}

void PolicyTable::validate(double tolerance) const {
    require(n_states > 0 && n_actions > 0, "PolicyTable: shape must be positive");
    require(probs.size() == static_cast<size_t>(n_states) * n_actions, "PolicyTable: size mismatch");
    for (int x = 0; x < n_states; ++x) {
        double sum = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            double v = at(x, a);
            require(v >= 0.0 && v <= 1.0 && std::isfinite(v),
                    "PolicyTable: entry outside [0, 1] at state " + std::to_string(x));
            sum += v;
        }
        require(std::abs(sum - 1.0) <= tolerance,
                "PolicyTable: row does not sum to 1 at state " + std::to_string(x));
    }
}

void PolicyTable::exactify_row(int x) {
    auto row_sum = [&] {
        double sum = 0.0;
        for (int a = 0; a < n_actions; ++a) sum += at(x, a);
        return sum;
    };
    // Work through entries from largest to smallest: when the largest entry's
    // rounding grain is too coarse for the floating-point sum to land on 1.0
    // exactly, a smaller entry offers finer steps.
    std::vector<int> order(static_cast<size_t>(n_actions));
    for (int a = 0; a < n_actions; ++a) order[static_cast<size_t>(a)] = a;
    std::sort(order.begin(), order.end(), [&](int i, int j) { return at(x, i) > at(x, j); });

    for (int target : order) {
        for (int round = 0; round < 64; ++round) {
            double sum = row_sum();
            if (sum == 1.0) return;
            double delta = 1.0 - sum;
            double moved = at(x, target) + delta;
            if (moved == at(x, target)) {
                moved = std::nextafter(at(x, target),
                                       delta > 0.0 ? std::numeric_limits<double>::infinity()
                                                   : -std::numeric_limits<double>::infinity());
            }
            if (!(moved >= 0.0 && moved <= 1.0)) break;
            at(x, target) = moved;
        }
    }
}

void PolicyTable::exactify_rows() {
    for (int x = 0; x < n_states; ++x) exactify_row(x);
}

double max_abs_difference(const QTable& a, const QTable& b) {
    require(a.values.size() == b.values.size(), "QTable difference: size mismatch");
    double worst = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    }
    return worst;
}

double frobenius_difference(const QTable& a, const QTable& b) {
    require(a.values.size() == b.values.size(), "QTable difference: size mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        double d = a.values[i] - b.values[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

}  // namespace spibb
