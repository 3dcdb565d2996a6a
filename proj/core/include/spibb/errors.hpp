#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spibb/model.hpp"

namespace spibb {

/// +inf marks pairs whose model error is unbounded (no data, or bootstrapped
/// pairs in the SPIBB-equivalent configuration).
inline constexpr double error_sentinel = std::numeric_limits<double>::infinity();

enum class ErrorKind {
    hoeffding_p,      // concentration bound on the transition model
    hoeffding_q,      // concentration bound on action values
    inverse_sqrt,     // plain 1/sqrt(N) pseudo-count error
    spibb_equivalent  // inf on bootstrapped pairs, epsilon/2 elsewhere
};

/// Canonical kebab-case name of an error kind and its inverse; the inverse
/// throws std::invalid_argument on unknown names.
std::string error_kind_name(ErrorKind kind);
ErrorKind error_kind_from_name(const std::string& name);

/// Per-(x,a) model-uncertainty values e(x,a) >= 0, possibly +inf.
struct ErrorTable {
    int n_states = 0;
    int n_actions = 0;
    ErrorKind kind = ErrorKind::hoeffding_p;
    std::vector<double> values;  // size n_states * n_actions

    ErrorTable() = default;
    ErrorTable(int ns, int na, ErrorKind k, double fill = 0.0)
        : n_states(ns), n_actions(na), kind(k), values(static_cast<size_t>(ns) * na, fill) {}

    double at(int x, int a) const { return values[static_cast<size_t>(x) * n_actions + a]; }
    double& at(int x, int a) { return values[static_cast<size_t>(x) * n_actions + a]; }
    std::span<const double> row(int x) const {
        return {values.data() + static_cast<size_t>(x) * n_actions, static_cast<size_t>(n_actions)};
    }
};

/// Hoeffding-style error, kind selects the log factor:
///   hoeffding_p: e(x,a) = sqrt( 2/N * log(2 |X| |A| 2^|X| / delta) )
///   hoeffding_q: e(x,a) = sqrt( 2/N * log(2 |X| |A| / delta) )
/// N(x,a)=0 yields the +inf sentinel. Requires 0 < delta <= 1.
ErrorTable hoeffding_error(const CountTable& counts, double delta, ErrorKind kind);

/// e(x,a) = 1/sqrt(N), +inf where N=0.
ErrorTable inverse_sqrt_error(const CountTable& counts);

/// e(x,a) = +inf where N(x,a) < n_wedge, epsilon/2 elsewhere. With budget
/// epsilon this reproduces baseline-bootstrapping exactly (the policy is
/// frozen on low-count pairs and unconstrained elsewhere).
ErrorTable spibb_equivalent_error(const CountTable& counts, long long n_wedge, double epsilon);

/// Empirical contraction constant:
///   kappa_hat = max over (x,a) with finite e(x,a) > 0 of
///     sum_{x',a'} e(x',a') pi_b(a'|x') P(x'|x,a) / e(x,a)
/// Terminal next-states contribute 0 (no continuation, their model error
/// cannot propagate). Numerator terms whose e(x',a') is the sentinel with
/// positive weight are excluded from the sum and counted into
/// *sentinel_violations when provided. Pairs whose own e is the sentinel are
/// skipped as denominators. Throws std::invalid_argument if no pair has a
/// finite positive error.
double estimate_kappa(const Mdp& mdp, const PolicyTable& baseline, const ErrorTable& errors,
                      long long* sentinel_violations = nullptr);

/// Closed-form safety bounds for a policy-improvement run.
struct BoundReport {
    double theorem1_bound = 0.0;    // eps * v_max / (1 - gamma)
    double theorem2_penalty = 0.0;  // (1+gamma) / ((1-gamma)^2 (1-kappa*gamma)) * eps * v_max
    double kappa_hat = 0.0;         // the kappa the penalty was computed with
    std::vector<double> visit_divergence_bound;  // per-state, +inf where unvisited
};

/// Evaluates the three closed forms. visit_counts_per_state holds N_D(x); its
/// length is the state count |X| entering the 2^|X| factor:
///   visit_divergence_bound[x] = 1/(1-gamma) * sqrt( 2/N_D(x) * log(2^|X| / delta) )
/// Requires epsilon >= 0, 0 <= gamma < 1, kappa * gamma < 1, 0 < delta <= 1.
BoundReport bound_report(double epsilon, double gamma, double v_max, double kappa,
                         const std::vector<long long>& visit_counts_per_state, double delta);

}  // namespace spibb
