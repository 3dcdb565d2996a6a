#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spibb/errors.hpp"
#include "spibb/model.hpp"

namespace spibb {

enum class AlgoKind { basic_rl, ramdp, pi_b_spibb, pi_leq_b_spibb, exact_soft_spibb, approx_soft_spibb };

/// Canonical kebab-case name (one_step appends "-1step").
std::string algo_name(AlgoKind kind, bool one_step);
/// Inverse of algo_name; throws std::invalid_argument on unknown names.
AlgoKind algo_from_name(const std::string& name, bool* one_step = nullptr);

/// One algorithm column of the sweep: which trainer to run and the grid of
/// hyper-parameter values (epsilon for the soft variants, n_wedge for the
/// bootstrapping variants, kappa_adj for ramdp; basic_rl takes the single
/// placeholder value 0).
struct AlgorithmSpec {
    AlgoKind kind = AlgoKind::basic_rl;
    bool one_step = false;
    std::vector<double> hyperparameters{0.0};
};

/// How sampled transitions draw their reward:
///   goal_entry:   r = 1 when the next state is terminal, else 0 (the
///                  random-MDPs convention; rewards live on goal entry).
///   reward_table: r = R(x,a) deterministically (arbitrary MDPs).
enum class RewardConvention { goal_entry, reward_table };

struct BenchmarkConfig {
    int n_states = 50;
    int n_actions = 4;
    int connectivity = 4;
    double gamma = 0.95;
    std::vector<double> eta_list{0.9};       // baseline performance levels in (0,1)
    std::vector<int> dataset_sizes{10, 20, 50, 100, 200, 500, 1000, 2000};
    int n_seeds = 100;
    std::uint64_t master_seed = 0;
    std::vector<AlgorithmSpec> algorithms;
    int horizon_cap = 1000;
    // error model for the soft variants
    ErrorKind error_kind = ErrorKind::hoeffding_p;
    double delta = 1.0;
    // worker threads; 0 means hardware concurrency, always capped by the
    // SOFT_SPIBB_THREADS environment variable
    int n_threads = 0;

    void validate() const;
};

/// One training run's outcome; the unit of aggregation. `seed` is the
/// 0-based instance index under the config's master seed.
struct RunRecord {
    std::uint64_t seed = 0;
    double eta = 0.0;
    int n_trajectories = 0;
    std::string algorithm;
    double hyperparameter = 0.0;
    double raw_perf = 0.0;
    double normalized_perf = 0.0;
};

/// Random connectivity-limited MDP: every (x,a) row has exactly
/// `connectivity` nonzero successor probabilities (distinct uniform states,
/// Dirichlet weights). A single terminal goal state carries entry reward 1,
/// placed at the non-initial candidate minimizing the optimal value from the
/// initial state; rewards are stored in expectation, R(x,a) = P(goal|x,a).
Mdp generate_random_mdp(std::uint64_t seed, const BenchmarkConfig& config);

/// Baseline of target quality eta: value on `mdp` within 1% relative error
/// of eta*rho_opt + (1-eta)*rho_uniform. Softmax over optimal Q with the
/// inverse temperature found by bisection, then 100 accepted random mass
/// displacements (up to 10% of one action's mass), rejecting any move that
/// leaves the 1% band. Throws std::runtime_error when bisection or
/// randomization cannot reach the band (caller resamples the instance).
PolicyTable generate_baseline(const Mdp& mdp, double eta, std::uint64_t seed);

/// Marks one uniformly drawn non-goal, non-initial state as a second
/// terminal goal with entry reward 1 (expected-reward table updated).
Mdp add_second_goal(const Mdp& mdp, std::uint64_t seed);

/// n_trajectories episodes from the initial state under `policy`, truncated
/// at horizon_cap steps when no terminal is reached (truncations are not an
/// error; callers may count them via the returned trajectory lengths).
Dataset sample_dataset(const Mdp& mdp, const PolicyTable& policy, int n_trajectories,
                       int horizon_cap, std::uint64_t seed,
                       RewardConvention convention = RewardConvention::goal_entry);

/// Affine score placing the baseline at 0 and the optimum at 1. Requires
/// rho_optimal > rho_baseline + 1e-12.
double normalized_performance(double raw, double rho_baseline, double rho_optimal);

/// Mean of the ceil(level/100 * n) smallest values; level in (0, 100].
double cvar(std::vector<double> values, double level_percent);

/// Full sweep: per seed generate the MDP, add the second goal, per eta build
/// the baseline (on the single-goal MDP), per dataset size sample a batch on
/// the two-goal MDP, train every (algorithm, hyper-parameter) on the batch's
/// MLE, and score the trained policy by exact evaluation on the true
/// two-goal MDP. Individual run failures are logged to stderr and skipped.
/// Deterministic for a fixed config, independent of thread count.
std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config);

struct AggregateRow {
    double eta = 0.0;
    int n_trajectories = 0;
    std::string algorithm;
    double hyperparameter = 0.0;
    double mean = 0.0;
    std::vector<double> cvar_values;  // one per requested level
    long long n_runs = 0;
};

/// Groups records by (eta, n_trajectories, algorithm, hyperparameter) and
/// reduces normalized performance to mean and CVaR at the given levels.
std::vector<AggregateRow> aggregate_records(const std::vector<RunRecord>& records,
                                            const std::vector<double>& levels = {10.0, 1.0, 0.1});

}  // namespace spibb
