#include "spibb/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace spibb {

namespace {

void check_counts(const CountTable& counts) {
    if (counts.n_states <= 0 || counts.n_actions <= 0) {
        throw std::invalid_argument("error table: count table shape must be positive");
    }
    for (long long n : counts.values) {
        if (n < 0) throw std::invalid_argument("error table: negative count");
    }
}

}  // namespace

ErrorTable hoeffding_error(const CountTable& counts, double delta, ErrorKind kind) {
    check_counts(counts);
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("hoeffding_error: delta must lie in (0, 1]");
    }
    if (kind != ErrorKind::hoeffding_p && kind != ErrorKind::hoeffding_q) {
        throw std::invalid_argument("hoeffding_error: kind must be hoeffding_p or hoeffding_q");
    }
    const double ns = static_cast<double>(counts.n_states);
    const double na = static_cast<double>(counts.n_actions);
    // log(2 |X| |A| / delta), plus |X| log 2 for the transition-model variant
    // (its union bound runs over all 2^|X| next-state events).
    double log_term = std::log(2.0 * ns * na / delta);
    if (kind == ErrorKind::hoeffding_p) log_term += ns * std::log(2.0);

    ErrorTable table(counts.n_states, counts.n_actions, kind);
    for (size_t i = 0; i < counts.values.size(); ++i) {
        long long n = counts.values[i];
        table.values[i] = n > 0 ? std::sqrt(2.0 / static_cast<double>(n) * log_term) : error_sentinel;
    }
    return table;
}

ErrorTable inverse_sqrt_error(const CountTable& counts) {
    check_counts(counts);
    ErrorTable table(counts.n_states, counts.n_actions, ErrorKind::inverse_sqrt);
    for (size_t i = 0; i < counts.values.size(); ++i) {
        long long n = counts.values[i];
        table.values[i] = n > 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : error_sentinel;
    }
    return table;
}

ErrorTable spibb_equivalent_error(const CountTable& counts, long long n_wedge, double epsilon) {
    check_counts(counts);
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("spibb_equivalent_error: epsilon must be positive");
    }
    ErrorTable table(counts.n_states, counts.n_actions, ErrorKind::spibb_equivalent);
    for (size_t i = 0; i < counts.values.size(); ++i) {
        table.values[i] = counts.values[i] < n_wedge ? error_sentinel : epsilon / 2.0;
    }
    return table;
}

double estimate_kappa(const Mdp& mdp, const PolicyTable& baseline, const ErrorTable& errors,
                      long long* sentinel_violations) {
    mdp.validate();
    baseline.validate();
    if (baseline.n_states != mdp.n_states || baseline.n_actions != mdp.n_actions ||
        errors.n_states != mdp.n_states || errors.n_actions != mdp.n_actions) {
        throw std::invalid_argument("estimate_kappa: table shapes do not match the MDP");
    }

    const int n = mdp.n_states;
    const int na = mdp.n_actions;

    // Baseline-weighted error mass of each next state: sum_a' e(x',a') pi_b(a'|x').
    // Terminal states carry none (no continuation). Sentinel terms are tracked
    // so pairs reaching them can be reported.
    std::vector<double> state_error(static_cast<size_t>(n), 0.0);
    std::vector<std::uint8_t> state_has_sentinel(static_cast<size_t>(n), 0);
    for (int y = 0; y < n; ++y) {
        if (mdp.is_terminal(y)) continue;
        for (int a = 0; a < na; ++a) {
            double w = baseline.at(y, a);
            if (w == 0.0) continue;
            double e = errors.at(y, a);
            if (std::isinf(e)) {
                state_has_sentinel[static_cast<size_t>(y)] = 1;
            } else {
                state_error[static_cast<size_t>(y)] += w * e;
            }
        }
    }

    long long violations = 0;
    double kappa = -1.0;
    for (int x = 0; x < n; ++x) {
        if (mdp.is_terminal(x)) continue;
        for (int a = 0; a < na; ++a) {
            double own = errors.at(x, a);
            if (std::isinf(own) || own <= 0.0) continue;  // sentinel or zero denominators excluded
            double numerator = 0.0;
            bool hit_sentinel = false;
            for (int y = 0; y < n; ++y) {
                double pv = mdp.p(x, a, y);
                if (pv == 0.0) continue;
                numerator += pv * state_error[static_cast<size_t>(y)];
                if (state_has_sentinel[static_cast<size_t>(y)]) hit_sentinel = true;
            }
            if (hit_sentinel) ++violations;
            kappa = std::max(kappa, numerator / own);
        }
    }
    if (sentinel_violations != nullptr) *sentinel_violations = violations;
    if (kappa < 0.0) {
        throw std::invalid_argument("estimate_kappa: no pair with finite positive error");
    }
    return kappa;
}

BoundReport bound_report(double epsilon, double gamma, double v_max, double kappa,
                         const std::vector<long long>& visit_counts_per_state, double delta) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("bound_report: epsilon must be nonnegative");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("bound_report: gamma must lie in [0, 1)");
    if (!(v_max >= 0.0)) throw std::invalid_argument("bound_report: v_max must be nonnegative");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("bound_report: delta must lie in (0, 1]");
    if (!(kappa >= 0.0) || kappa * gamma >= 1.0) {
        throw std::invalid_argument("bound_report: requires 0 <= kappa with kappa * gamma < 1");
    }

    BoundReport report;
    report.kappa_hat = kappa;
    report.theorem1_bound = epsilon * v_max / (1.0 - gamma);
    report.theorem2_penalty =
        (1.0 + gamma) / ((1.0 - gamma) * (1.0 - gamma) * (1.0 - kappa * gamma)) * epsilon * v_max;

    const double n_states = static_cast<double>(visit_counts_per_state.size());
    const double log_term = n_states * std::log(2.0) - std::log(delta);
    report.visit_divergence_bound.reserve(visit_counts_per_state.size());
    for (long long n : visit_counts_per_state) {
        if (n < 0) throw std::invalid_argument("bound_report: negative visit count");
        report.visit_divergence_bound.push_back(
            n > 0 ? std::sqrt(2.0 / static_cast<double>(n) * log_term) / (1.0 - gamma)
                  : error_sentinel);
    }
    return report;
}

std::string error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::hoeffding_p: return "hoeffding-p";
        case ErrorKind::hoeffding_q: return "hoeffding-q";
        case ErrorKind::inverse_sqrt: return "inverse-sqrt";
        case ErrorKind::spibb_equivalent: return "spibb-equivalent";
    }
    throw std::invalid_argument("error_kind_name: unknown error kind");
}

ErrorKind error_kind_from_name(const std::string& name) {
    if (name == "hoeffding-p") return ErrorKind::hoeffding_p;
    if (name == "hoeffding-q") return ErrorKind::hoeffding_q;
    if (name == "inverse-sqrt") return ErrorKind::inverse_sqrt;
    if (name == "spibb-equivalent") return ErrorKind::spibb_equivalent;
    throw std::invalid_argument("unknown error kind name: " + name);
}

}  // namespace spibb
