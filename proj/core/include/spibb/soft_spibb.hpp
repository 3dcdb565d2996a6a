#pragma once

#include <functional>
#include <span>
#include <vector>

#include "spibb/errors.hpp"
#include "spibb/model.hpp"

namespace spibb {

enum class SoftSpibbVariant { exact, approx };

struct SoftSpibbConfig {
    double epsilon = 1.0;  // per-state error budget, >= 0
    SoftSpibbVariant variant = SoftSpibbVariant::approx;
    bool one_step = false;      // stop after a single improvement pass
    int max_iterations = 1000;  // policy-iteration cap
    double stop_tolerance = 1e-10;  // Frobenius threshold on consecutive Q tables
};

struct ImprovementResult {
    PolicyTable policy;
    QTable q;  // evaluation of `policy` on the model that was improved against
    int iterations_used = 0;
    bool converged = false;
    std::vector<double> per_state_budget_spent;  // sum_a e|pi - pi_b| over finite-e actions
    std::vector<double> value_trace;  // rho(pi_i) per iteration, starting at the baseline
};

/// One state's exact improvement: the LP
///   maximize sum_a Q(a) pi(a)
///   s.t.     sum_a pi(a) = 1,  pi >= 0,
///            sum_a e(a) |pi(a) - pi_b(a)| <= epsilon
/// linearized with one auxiliary variable per action. Actions with sentinel
/// error keep exactly their baseline probability; a zero error means
/// unconstrained movement. epsilon = 0, an all-sentinel row or a constant Q
/// row short-circuit to the baseline.
std::vector<double> exact_improvement_state(std::span<const double> q_row,
                                            std::span<const double> baseline_row,
                                            std::span<const double> error_row, double epsilon);

/// One state's greedy budgeted improvement. Walks actions in increasing-Q
/// order; for each donor takes the largest mass allowed by its remaining
/// probability and half the leftover budget, moves it to the action with the
/// best Q-gain per unit of error (ties to the lowest index), and charges the
/// budget e(donor) + e(receiver) per unit moved. One transfer per donor;
/// stops at the argmax-Q action or when the budget is spent. Sentinel errors
/// allow no mass in either role.
std::vector<double> approx_improvement_state(std::span<const double> q_row,
                                             std::span<const double> baseline_row,
                                             std::span<const double> error_row, double epsilon);

/// Row improver for the generic guarded iteration: maps (q_row, state) to a
/// candidate policy row.
using RowImprover = std::function<std::vector<double>(std::span<const double> q_row, int state)>;

/// Guarded policy iteration shared by the soft and hard bootstrapping
/// algorithms: evaluate Q for the current policy, improve every non-terminal
/// state, and accept each candidate row only when it does not lower that
/// state's expected Q (ties accepted, so converged policies stay put). Stops
/// when the Frobenius norm of consecutive Q tables drops below
/// stop_tolerance, after max_iterations (converged=false), or after one pass
/// when one_step is set.
ImprovementResult run_guarded_policy_iteration(const Mdp& mle, const PolicyTable& baseline,
                                               const RowImprover& improve, int max_iterations,
                                               double stop_tolerance, bool one_step);

/// Soft-SPIBB policy iteration on the MLE model: per-state exact or approx
/// improvement under the error budget, with the guard and stopping rule
/// above. The result's budget accounting is filled against `baseline`.
ImprovementResult run_policy_iteration(const Mdp& mle, const PolicyTable& baseline,
                                       const ErrorTable& errors, const SoftSpibbConfig& config);

/// Mean wall-clock seconds of one full improvement pass (all rows once) per
/// action count, for both variants on identical synthetic instances.
struct ComplexityRow {
    int n_actions = 0;
    double approx_seconds = 0.0;
    double exact_seconds = 0.0;
};

std::vector<ComplexityRow> measure_improvement_complexity(const std::vector<int>& n_actions_list,
                                                          int n_rows = 2000, int repetitions = 20,
                                                          std::uint64_t seed = 12345);

}  // namespace spibb
