#include "spibb/soft_spibb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spibb/dp.hpp"
#include "spibb/lp.hpp"
#include "spibb/rng.hpp"

namespace spibb {

namespace {

void check_row_inputs(std::span<const double> q_row, std::span<const double> baseline_row,
                      std::span<const double> error_row, double epsilon) {
    if (q_row.size() != baseline_row.size() || q_row.size() != error_row.size() || q_row.empty()) {
        throw std::invalid_argument("improvement step: row sizes do not match");
    }
    if (!(epsilon >= 0.0)) throw std::invalid_argument("improvement step: epsilon must be nonnegative");
    double sum = 0.0;
    for (size_t a = 0; a < baseline_row.size(); ++a) {
        if (!std::isfinite(q_row[a])) throw std::invalid_argument("improvement step: non-finite Q value");
        if (!(baseline_row[a] >= 0.0)) {
            throw std::invalid_argument("improvement step: negative baseline probability");
        }
        if (std::isnan(error_row[a]) || error_row[a] < 0.0) {
            throw std::invalid_argument("improvement step: invalid error value");
        }
        sum += baseline_row[a];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("improvement step: baseline row is not stochastic");
    }
}

bool constant_row(std::span<const double> q_row) {
    for (size_t a = 1; a < q_row.size(); ++a) {
        if (q_row[a] != q_row[0]) return false;
    }
    return true;
}

double initial_state_value(const PolicyTable& policy, const QTable& q, int x0) {
    double v = 0.0;
    for (int a = 0; a < q.n_actions; ++a) v += policy.at(x0, a) * q.at(x0, a);
    return v;
}

// Mass allowed by the remaining budget against one error value: the budget
// charge of a transfer is split half per endpoint, a zero error is
// unconstrained and a sentinel allows nothing.
double budget_mass(double remaining, double error) {
    if (std::isinf(error)) return 0.0;
    if (error <= 0.0) return std::numeric_limits<double>::infinity();
    return remaining / (2.0 * error);
}

}  // namespace

std::vector<double> exact_improvement_state(std::span<const double> q_row,
                                            std::span<const double> baseline_row,
                                            std::span<const double> error_row, double epsilon) {
    check_row_inputs(q_row, baseline_row, error_row, epsilon);
    const int na = static_cast<int>(q_row.size());
    std::vector<double> out(baseline_row.begin(), baseline_row.end());
    if (epsilon <= 0.0 || constant_row(q_row)) return out;

    std::vector<int> free_actions;
    double pinned_mass = 0.0;
    for (int a = 0; a < na; ++a) {
        if (std::isinf(error_row[static_cast<size_t>(a)])) {
            pinned_mass += baseline_row[static_cast<size_t>(a)];
        } else {
            free_actions.push_back(a);
        }
    }
    if (free_actions.empty()) return out;
    const int nf = static_cast<int>(free_actions.size());
    const double free_mass = std::max(0.0, 1.0 - pinned_mass);

    // Variables: pi(f) for each finite-error action, then slack magnitudes
    // z(f) >= |pi(f) - pi_b(f)| enforced by two one-sided rows each.
    LinearProgram lp;
    lp.objective.assign(static_cast<size_t>(2 * nf), 0.0);
    for (int f = 0; f < nf; ++f) {
        lp.objective[static_cast<size_t>(f)] = q_row[static_cast<size_t>(free_actions[static_cast<size_t>(f)])];
    }

    LpConstraint simplex_row;
    simplex_row.coeffs.assign(static_cast<size_t>(2 * nf), 0.0);
    for (int f = 0; f < nf; ++f) simplex_row.coeffs[static_cast<size_t>(f)] = 1.0;
    simplex_row.rel = Relation::equal;
    simplex_row.rhs = free_mass;
    lp.constraints.push_back(std::move(simplex_row));

    for (int f = 0; f < nf; ++f) {
        double pb = baseline_row[static_cast<size_t>(free_actions[static_cast<size_t>(f)])];
        LpConstraint upper;  // pi - z <= pi_b
        upper.coeffs.assign(static_cast<size_t>(2 * nf), 0.0);
        upper.coeffs[static_cast<size_t>(f)] = 1.0;
        upper.coeffs[static_cast<size_t>(nf + f)] = -1.0;
        upper.rhs = pb;
        lp.constraints.push_back(std::move(upper));
        LpConstraint lower;  // -pi - z <= -pi_b
        lower.coeffs.assign(static_cast<size_t>(2 * nf), 0.0);
        lower.coeffs[static_cast<size_t>(f)] = -1.0;
        lower.coeffs[static_cast<size_t>(nf + f)] = -1.0;
        lower.rhs = -pb;
        lp.constraints.push_back(std::move(lower));
    }

    LpConstraint budget;  // sum_f e(f) z(f) <= epsilon
    budget.coeffs.assign(static_cast<size_t>(2 * nf), 0.0);
    for (int f = 0; f < nf; ++f) {
        budget.coeffs[static_cast<size_t>(nf + f)] = error_row[static_cast<size_t>(free_actions[static_cast<size_t>(f)])];
    }
    budget.rhs = epsilon;
    lp.constraints.push_back(std::move(budget));

    LpSolution solution = solve_lp(lp);
    if (solution.status != LpStatus::optimal) {
        // The baseline itself is feasible, so anything else is a solver failure.
        throw std::runtime_error("exact improvement: linear program did not solve");
    }

    double placed = 0.0;
    for (int f = 0; f < nf; ++f) {
        double v = std::clamp(solution.values[static_cast<size_t>(f)], 0.0, 1.0);
        out[static_cast<size_t>(free_actions[static_cast<size_t>(f)])] = v;
        placed += v;
    }
    if (std::abs(placed - free_mass) > 1e-9) {
        throw std::runtime_error("exact improvement: solution left the probability simplex");
    }
    return out;
}

std::vector<double> approx_improvement_state(std::span<const double> q_row,
                                             std::span<const double> baseline_row,
                                             std::span<const double> error_row, double epsilon) {
    check_row_inputs(q_row, baseline_row, error_row, epsilon);
    const int na = static_cast<int>(q_row.size());
    std::vector<double> out(baseline_row.begin(), baseline_row.end());
    if (epsilon <= 0.0) return out;

    std::vector<int> order(static_cast<size_t>(na));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return q_row[static_cast<size_t>(i)] < q_row[static_cast<size_t>(j)]; });
    int top = 0;  // lowest-index argmax of Q
    for (int a = 1; a < na; ++a) {
        if (q_row[static_cast<size_t>(a)] > q_row[static_cast<size_t>(top)]) top = a;
    }

    double remaining = epsilon;
    for (int donor : order) {
        if (donor == top) break;
        if (remaining <= 0.0) break;
        double donor_error = error_row[static_cast<size_t>(donor)];
        double give = std::min(out[static_cast<size_t>(donor)], budget_mass(remaining, donor_error));
        if (give <= 0.0) continue;

        // Receiver: best Q-gain per unit of error among strictly better
        // finite-error actions; zero error dominates; ties take the lowest index.
        int receiver = -1;
        double best_ratio = 0.0;
        for (int a = 0; a < na; ++a) {
            double err = error_row[static_cast<size_t>(a)];
            if (std::isinf(err)) continue;
            double gain = q_row[static_cast<size_t>(a)] - q_row[static_cast<size_t>(donor)];
            if (gain <= 0.0) continue;
            double ratio = err > 0.0 ? gain / err : std::numeric_limits<double>::infinity();
            if (ratio > best_ratio) {
                best_ratio = ratio;
                receiver = a;
            }
        }
        if (receiver < 0) continue;

        double receiver_error = error_row[static_cast<size_t>(receiver)];
        double moved = std::min(give, budget_mass(remaining, receiver_error));
        if (moved <= 0.0) continue;
        out[static_cast<size_t>(receiver)] += moved;
        out[static_cast<size_t>(donor)] -= moved;
        remaining = std::max(0.0, remaining - moved * (donor_error + receiver_error));
    }
    return out;
}

ImprovementResult run_guarded_policy_iteration(const Mdp& mle, const PolicyTable& baseline,
                                               const RowImprover& improve, int max_iterations,
                                               double stop_tolerance, bool one_step) {
    mle.validate();
    baseline.validate();
    if (baseline.n_states != mle.n_states || baseline.n_actions != mle.n_actions) {
        throw std::invalid_argument("policy iteration: baseline shape does not match the model");
    }
    if (max_iterations < 1) throw std::invalid_argument("policy iteration: max_iterations must be >= 1");
    if (!(stop_tolerance > 0.0)) throw std::invalid_argument("policy iteration: stop_tolerance must be > 0");

    ImprovementResult result;
    result.policy = baseline;
    result.q = policy_evaluation_q(mle, result.policy);
    result.value_trace.push_back(initial_state_value(result.policy, result.q, mle.initial_state));

    for (int iteration = 0; iteration < max_iterations; ++iteration) {
        PolicyTable candidate = result.policy;
        for (int x = 0; x < mle.n_states; ++x) {
            if (mle.is_terminal(x)) continue;
            std::vector<double> row = improve(result.q.row(x), x);
            double current = 0.0;
            double proposed = 0.0;
            for (int a = 0; a < mle.n_actions; ++a) {
                current += result.policy.at(x, a) * result.q.at(x, a);
                proposed += row[static_cast<size_t>(a)] * result.q.at(x, a);
            }
            if (proposed >= current) {
                std::copy(row.begin(), row.end(), candidate.row(x).begin());
                // Rows straight off the baseline keep their exact bits; fresh
                // improver output gets its rounding drift absorbed.
                std::span<const double> reference = baseline.row(x);
                if (!std::equal(row.begin(), row.end(), reference.begin(), reference.end())) {
                    candidate.exactify_row(x);
                }
            }
        }
        QTable q_next = policy_evaluation_q(mle, candidate);
        result.iterations_used = iteration + 1;
        double gap = frobenius_difference(q_next, result.q);
        result.policy = std::move(candidate);
        result.q = std::move(q_next);
        result.value_trace.push_back(initial_state_value(result.policy, result.q, mle.initial_state));
        if (one_step) {
            result.converged = true;
            break;
        }
        if (gap < stop_tolerance) {
            result.converged = true;
            break;
        }
    }
    return result;
}

ImprovementResult run_policy_iteration(const Mdp& mle, const PolicyTable& baseline,
                                       const ErrorTable& errors, const SoftSpibbConfig& config) {
    if (errors.n_states != mle.n_states || errors.n_actions != mle.n_actions) {
        throw std::invalid_argument("run_policy_iteration: error table shape does not match");
    }
    if (!(config.epsilon >= 0.0)) {
        throw std::invalid_argument("run_policy_iteration: epsilon must be nonnegative");
    }

    const bool exact = config.variant == SoftSpibbVariant::exact;
    RowImprover improver = [&](std::span<const double> q_row, int x) {
        return exact ? exact_improvement_state(q_row, baseline.row(x), errors.row(x), config.epsilon)
                     : approx_improvement_state(q_row, baseline.row(x), errors.row(x), config.epsilon);
    };
    ImprovementResult result = run_guarded_policy_iteration(
        mle, baseline, improver, config.max_iterations, config.stop_tolerance, config.one_step);

    result.per_state_budget_spent.assign(static_cast<size_t>(mle.n_states), 0.0);
    for (int x = 0; x < mle.n_states; ++x) {
        double spent = 0.0;
        for (int a = 0; a < mle.n_actions; ++a) {
            double deviation = std::abs(result.policy.at(x, a) - baseline.at(x, a));
            double e = errors.at(x, a);
            if (std::isinf(e)) {
                if (deviation > 1e-12) spent = error_sentinel;  // cannot happen for our improvers
            } else {
                spent += e * deviation;
            }
        }
        result.per_state_budget_spent[static_cast<size_t>(x)] = spent;
    }
    return result;
}

std::vector<ComplexityRow> measure_improvement_complexity(const std::vector<int>& n_actions_list,
                                                          int n_rows, int repetitions,
                                                          std::uint64_t seed) {
    if (n_rows <= 0 || repetitions <= 0) {
        throw std::invalid_argument("measure_improvement_complexity: need positive rows and repetitions");
    }
    using clock = std::chrono::steady_clock;
    std::vector<ComplexityRow> table;
    volatile double sink = 0.0;

    for (int na : n_actions_list) {
        if (na < 2) throw std::invalid_argument("measure_improvement_complexity: need at least 2 actions");
        Rng rng(derive_seed(seed, 0xC0, static_cast<std::uint64_t>(na)));
        std::vector<std::vector<double>> qs, baselines, errs;
        qs.reserve(static_cast<size_t>(n_rows));
        baselines.reserve(static_cast<size_t>(n_rows));
        errs.reserve(static_cast<size_t>(n_rows));
        for (int i = 0; i < n_rows; ++i) {
            std::vector<double> q(static_cast<size_t>(na)), e(static_cast<size_t>(na));
            for (int a = 0; a < na; ++a) {
                q[static_cast<size_t>(a)] = rng.next_double();
                e[static_cast<size_t>(a)] = rng.uniform(0.5, 2.0);
            }
            qs.push_back(std::move(q));
            baselines.push_back(rng.dirichlet(na));
            errs.push_back(std::move(e));
        }
        const double epsilon = 1.0;

        auto time_variant = [&](bool exact) {
            // one untimed pass to settle caches and branch predictors
            for (int i = 0; i < n_rows; ++i) {
                auto row = exact
                               ? exact_improvement_state(qs[static_cast<size_t>(i)], baselines[static_cast<size_t>(i)],
                                                         errs[static_cast<size_t>(i)], epsilon)
                               : approx_improvement_state(qs[static_cast<size_t>(i)], baselines[static_cast<size_t>(i)],
                                                          errs[static_cast<size_t>(i)], epsilon);
                sink = sink + row[0];
            }
            auto start = clock::now();
            for (int rep = 0; rep < repetitions; ++rep) {
                for (int i = 0; i < n_rows; ++i) {
                    auto row = exact
                                   ? exact_improvement_state(qs[static_cast<size_t>(i)], baselines[static_cast<size_t>(i)],
                                                             errs[static_cast<size_t>(i)], epsilon)
                                   : approx_improvement_state(qs[static_cast<size_t>(i)], baselines[static_cast<size_t>(i)],
                                                              errs[static_cast<size_t>(i)], epsilon);
                    sink = sink + row[0];
                }
            }
            auto elapsed = std::chrono::duration<double>(clock::now() - start).count();
            return elapsed / repetitions;
        };

        ComplexityRow row;
        row.n_actions = na;
        row.approx_seconds = time_variant(false);
        row.exact_seconds = time_variant(true);
        table.push_back(row);
    }
    (void)sink;
    return table;
}

}  // namespace spibb
