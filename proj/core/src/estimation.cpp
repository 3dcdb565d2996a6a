#include "spibb/estimation.hpp"

#include <stdexcept>
#include <string>

namespace spibb {

CountTable count_visits(const Dataset& dataset) {
    dataset.validate();
    CountTable counts(dataset.n_states, dataset.n_actions);
    for (const Transition& t : dataset.transitions) ++counts.at(t.state, t.action);
    return counts;
}

MleResult estimate_mle(const Dataset& dataset, const MdpShape& shape, double gamma, double r_max) {
    shape.validate();
    if (dataset.n_states > shape.n_states || dataset.n_actions > shape.n_actions) {
        throw std::invalid_argument("estimate_mle: dataset indices exceed the requested shape");
    }
    Dataset sized = dataset;
    sized.n_states = shape.n_states;
    sized.n_actions = shape.n_actions;
    sized.validate();

    const int ns = shape.n_states;
    const int na = shape.n_actions;
    Mdp mdp;
    mdp.n_states = ns;
    mdp.n_actions = na;
    mdp.gamma = gamma;
    mdp.r_max = r_max;
    mdp.initial_state = shape.initial_state;
    mdp.terminal = shape.terminal;
    mdp.reward.assign(static_cast<size_t>(ns) * na, 0.0);
    mdp.transition.assign(static_cast<size_t>(ns) * na * ns, 0.0);

    CountTable counts(ns, na);
    for (const Transition& t : sized.transitions) {
        ++counts.at(t.state, t.action);
        mdp.r(t.state, t.action) += t.reward;
        mdp.p(t.state, t.action, t.next_state) += 1.0;
    }
    for (int x = 0; x < ns; ++x) {
        for (int a = 0; a < na; ++a) {
            long long n = counts.at(x, a);
            if (n > 0) {
                mdp.r(x, a) /= static_cast<double>(n);
                for (int y = 0; y < ns; ++y) mdp.p(x, a, y) /= static_cast<double>(n);
            } else {
                mdp.p(x, a, x) = 1.0;  // unobserved pairs: self-loop, reward 0
            }
        }
    }
    return MleResult{std::move(mdp), std::move(counts)};
}

QTable fitted_q_update(const Dataset& dataset, const MdpShape& shape, const PolicyTable& policy,
                       const QTable& q_prev, double gamma) {
    shape.validate();
    policy.validate();
    if (policy.n_states != shape.n_states || policy.n_actions != shape.n_actions ||
        q_prev.n_states != shape.n_states || q_prev.n_actions != shape.n_actions) {
        throw std::invalid_argument("fitted_q_update: table shapes do not match");
    }
    Dataset sized = dataset;
    sized.n_states = shape.n_states;
    sized.n_actions = shape.n_actions;
    sized.validate();

    const int ns = shape.n_states;
    const int na = shape.n_actions;

    // Continuation value of each state under the policy: 0 at terminals.
    std::vector<double> continuation(static_cast<size_t>(ns), 0.0);
    for (int x = 0; x < ns; ++x) {
        if (shape.is_terminal(x)) continue;
        double v = 0.0;
        for (int a = 0; a < na; ++a) v += policy.at(x, a) * q_prev.at(x, a);
        continuation[static_cast<size_t>(x)] = v;
    }

    QTable target(ns, na, 0.0);
    CountTable counts(ns, na);
    for (const Transition& t : sized.transitions) {
        ++counts.at(t.state, t.action);
        target.at(t.state, t.action) += t.reward + gamma * continuation[static_cast<size_t>(t.next_state)];
    }
    for (int x = 0; x < ns; ++x) {
        for (int a = 0; a < na; ++a) {
            long long n = counts.at(x, a);
            if (n > 0) {
                target.at(x, a) /= static_cast<double>(n);
            } else {
                // Self-loop default, keeping parity with estimate_mle.
                target.at(x, a) = gamma * continuation[static_cast<size_t>(x)];
            }
        }
    }
    return target;
}

}  // namespace spibb
