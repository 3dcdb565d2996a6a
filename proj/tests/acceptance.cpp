// Acceptance suite for the safe-policy-improvement toolkit. Each criterion
// prints exactly one [PASS]/[FAIL] line and carries a wall-clock budget; the
// process exits nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "spibb/competitors.hpp"
#include "spibb/dp.hpp"
#include "spibb/errors.hpp"
#include "spibb/estimation.hpp"
#include "spibb/experiment.hpp"
#include "spibb/model.hpp"
#include "spibb/rng.hpp"
#include "spibb/soft_spibb.hpp"
#include "test_util.hpp"

using namespace spibb;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Records the first failure; later ones are dropped to keep the line short.
void note(Outcome& out, bool ok, const std::string& what) {
    if (!ok && out.pass) {
        out.pass = false;
        out.detail = what;
    }
}

double dot(const std::vector<double>& row, const std::vector<double>& q) {
    double sum = 0.0;
    for (size_t i = 0; i < row.size(); ++i) sum += row[i] * q[i];
    return sum;
}

/// Fan instance: state 0 leads to one terminal per action, so Q(0, a) equals
/// the immediate reward a+1 under every policy.
Mdp fan_mdp(int n_actions) {
    Mdp mdp = testutil::make_mdp(1 + n_actions, n_actions, 0.95,
                                 static_cast<double>(n_actions));
    for (int a = 0; a < n_actions; ++a) {
        mdp.terminal[static_cast<size_t>(1 + a)] = 1;
        mdp.p(0, a, 1 + a) = 1.0;
        mdp.r(0, a) = static_cast<double>(a + 1);
        for (int b = 0; b < n_actions; ++b) mdp.p(1 + a, b, 1 + a) = 1.0;
    }
    mdp.validate();
    return mdp;
}

PolicyTable repeated_row_policy(int n_states, const std::vector<double>& row) {
    PolicyTable policy(n_states, static_cast<int>(row.size()));
    for (int x = 0; x < n_states; ++x) {
        for (size_t a = 0; a < row.size(); ++a) {
            policy.at(x, static_cast<int>(a)) = row[a];
        }
    }
    return policy;
}

// ---------------------------------------------------------------------------
// Criterion 1: the worked bootstrapping example reproduces exactly.

Outcome criterion_golden_rows() {
    Outcome out;
    Mdp fan = fan_mdp(4);
    PolicyTable baseline = repeated_row_policy(5, {0.1, 0.4, 0.3, 0.2});
    CountTable counts(5, 4);
    counts.at(0, 0) = 5;
    counts.at(0, 1) = 20;
    counts.at(0, 2) = 20;
    counts.at(0, 3) = 5;

    PolicyTable keep = pi_b_spibb(fan, baseline, counts, 10);
    PolicyTable cap = pi_leq_b_spibb(fan, baseline, counts, 10);
    const double expected_keep[4] = {0.1, 0.0, 0.7, 0.2};
    const double expected_cap[4] = {0.0, 0.0, 0.8, 0.2};
    for (int a = 0; a < 4; ++a) {
        note(out, std::abs(keep.at(0, a) - expected_keep[a]) <= 1e-12,
             "baseline-keeping row differs at action " + std::to_string(a));
        note(out, std::abs(cap.at(0, a) - expected_cap[a]) <= 1e-12,
             "baseline-capped row differs at action " + std::to_string(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: both per-state improvers respect the budget and the simplex
// on 1000 random instances.

struct RowInstance {
    int n_actions = 0;
    std::vector<double> q;
    std::vector<double> baseline;
    std::vector<double> errors;
    double epsilon = 0.0;
};

RowInstance draw_row_instance(Rng& rng, int index) {
    RowInstance inst;
    inst.n_actions = 2 + index % 15;  // 2..16
    inst.q.resize(static_cast<size_t>(inst.n_actions));
    inst.errors.resize(static_cast<size_t>(inst.n_actions));
    for (double& v : inst.q) v = rng.uniform(-2.0, 2.0);
    inst.baseline = rng.dirichlet(inst.n_actions);
    for (double& v : inst.errors) {
        v = rng.next_double() < 0.15 ? kInf : rng.uniform(0.05, 2.5);
    }
    inst.epsilon = rng.uniform(0.0, 4.0);
    return inst;
}

bool row_is_admissible(const RowInstance& inst, const std::vector<double>& row) {
    double sum = 0.0;
    double cost = 0.0;
    for (int a = 0; a < inst.n_actions; ++a) {
        double p = row[static_cast<size_t>(a)];
        if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) return false;
        sum += p;
        double e = inst.errors[static_cast<size_t>(a)];
        double pb = inst.baseline[static_cast<size_t>(a)];
        if (std::isfinite(e)) {
            cost += e * std::abs(p - pb);
        } else if (p != pb) {
            return false;  // sentinel actions must keep the baseline bits
        }
    }
    if (std::abs(sum - 1.0) > 1e-9) return false;
    return cost <= inst.epsilon + 1e-9;
}

Outcome criterion_constraint_suite() {
    Outcome out;
    Rng rng(777);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        RowInstance inst = draw_row_instance(rng, i);
        std::vector<double> exact =
            exact_improvement_state(inst.q, inst.baseline, inst.errors, inst.epsilon);
        std::vector<double> approx =
            approx_improvement_state(inst.q, inst.baseline, inst.errors, inst.epsilon);
        if (!row_is_admissible(inst, exact)) ++violations;
        if (!row_is_admissible(inst, approx)) ++violations;
    }
    note(out, violations == 0, std::to_string(violations) + " of 2000 rows broke the constraint");
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: exact dominates approx dominates baseline, and the exact
// optimum matches a 1e-3-grid brute force on 3-action instances.

Outcome criterion_dominance_and_grid() {
    Outcome out;
    Rng rng(777);
    for (int i = 0; i < 1000; ++i) {
        RowInstance inst = draw_row_instance(rng, i);
        std::vector<double> exact =
            exact_improvement_state(inst.q, inst.baseline, inst.errors, inst.epsilon);
        std::vector<double> approx =
            approx_improvement_state(inst.q, inst.baseline, inst.errors, inst.epsilon);
        double v_exact = dot(exact, inst.q);
        double v_approx = dot(approx, inst.q);
        double v_base = dot(inst.baseline, inst.q);
        note(out, v_exact >= v_approx - 1e-9,
             "exact fell below approx on instance " + std::to_string(i));
        note(out, v_approx >= v_base - 1e-9,
             "approx fell below the baseline on instance " + std::to_string(i));
    }

    Rng grid_rng(778);
    for (int i = 0; i < 40; ++i) {
        std::vector<double> q(3);
        std::vector<double> errors(3);
        for (double& v : q) v = grid_rng.uniform(-0.5, 0.5);
        for (double& v : errors) v = grid_rng.uniform(0.5, 2.5);
        std::vector<double> baseline = grid_rng.dirichlet(3);
        double epsilon = grid_rng.uniform(0.1, 1.5);

        std::vector<double> lp = exact_improvement_state(q, baseline, errors, epsilon);
        double lp_value = dot(lp, q);

        double best = -kInf;
        for (int a0 = 0; a0 <= 1000; ++a0) {
            for (int a1 = 0; a1 + a0 <= 1000; ++a1) {
                double p0 = a0 / 1000.0;
                double p1 = a1 / 1000.0;
                double p2 = (1000 - a0 - a1) / 1000.0;
                double cost = errors[0] * std::abs(p0 - baseline[0]) +
                              errors[1] * std::abs(p1 - baseline[1]) +
                              errors[2] * std::abs(p2 - baseline[2]);
                if (cost > epsilon + 1e-12) continue;
                double value = p0 * q[0] + p1 * q[1] + p2 * q[2];
                if (value > best) best = value;
            }
        }
        note(out, std::abs(lp_value - best) <= 2e-3,
             "grid gap " + std::to_string(std::abs(lp_value - best)) + " on instance " +
                 std::to_string(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: with bootstrapping-equivalent error tables the soft improvers
// reproduce the baseline-keeping algorithm's value on the estimated model.

/// Instance + baseline with deterministic retries (baseline synthesis can
/// reject an instance whose target band is unreachable).
bool build_instance(const BenchmarkConfig& config, std::uint64_t base_seed, double eta,
                    Mdp* mdp, PolicyTable* baseline) {
    for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
        std::uint64_t seed = base_seed + attempt * 1000003ull;
        try {
            Mdp candidate = generate_random_mdp(seed, config);
            PolicyTable pi = generate_baseline(candidate, eta, seed + 1);
            *mdp = std::move(candidate);
            *baseline = std::move(pi);
            return true;
        } catch (const std::runtime_error&) {
            continue;
        }
    }
    return false;
}

Outcome criterion_bootstrap_equivalence() {
    Outcome out;
    BenchmarkConfig config;
    config.n_states = 10;
    config.n_actions = 4;
    config.connectivity = 3;
    config.gamma = 0.95;

    for (int k = 0; k < 100 && out.pass; ++k) {
        Mdp mdp;
        PolicyTable baseline;
        if (!build_instance(config, 40000 + static_cast<std::uint64_t>(k) * 17, 0.7, &mdp,
                            &baseline)) {
            note(out, false, "instance " + std::to_string(k) + " could not be built");
            break;
        }
        Dataset data = sample_dataset(mdp, baseline, 100, 200, 41000 + k);
        MleResult mle = estimate_mle(data, MdpShape::of(mdp), config.gamma, mdp.r_max);

        const long long n_wedge = 7;
        const double epsilon = 2.0;
        ErrorTable errors = spibb_equivalent_error(mle.counts, n_wedge, epsilon);
        PolicyTable reference = pi_b_spibb(mle.mdp, baseline, mle.counts, n_wedge);
        double v_reference = policy_value(mle.mdp, reference);

        for (SoftSpibbVariant variant : {SoftSpibbVariant::exact, SoftSpibbVariant::approx}) {
            SoftSpibbConfig soft;
            soft.epsilon = epsilon;
            soft.variant = variant;
            ImprovementResult result = run_policy_iteration(mle.mdp, baseline, errors, soft);
            double v_soft = policy_value(mle.mdp, result.policy);
            note(out, std::abs(v_soft - v_reference) <= 1e-8,
                 "value gap " + std::to_string(std::abs(v_soft - v_reference)) +
                     " on instance " + std::to_string(k));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 5: fitted backups over the batch equal model backups through the
// estimated MDP at every iteration.

Outcome criterion_fitted_identity() {
    Outcome out;
    for (int k = 0; k < 50 && out.pass; ++k) {
        int n_states = 4 + k % 5;
        int n_actions = 2 + k % 3;
        const double gamma = 0.9;
        Rng rng(9000 + static_cast<std::uint64_t>(k));
        Mdp mdp = testutil::random_dense_mdp(rng, n_states, n_actions, gamma, {n_states - 1});
        PolicyTable policy = testutil::random_policy(rng, n_states, n_actions);
        Dataset data = sample_dataset(mdp, policy, 40, 60, 9500 + k,
                                      RewardConvention::reward_table);
        MleResult mle = estimate_mle(data, MdpShape::of(mdp), gamma, mdp.r_max);

        QTable q(n_states, n_actions, 0.0);
        for (int iteration = 0; iteration < 25; ++iteration) {
            QTable fitted = fitted_q_update(data, MdpShape::of(mdp), policy, q, gamma);
            for (int x = 0; x < n_states; ++x) {
                for (int a = 0; a < n_actions; ++a) {
                    double continuation = 0.0;
                    for (int y = 0; y < n_states; ++y) {
                        if (mle.mdp.is_terminal(y)) continue;
                        double weight = mle.mdp.p(x, a, y);
                        if (weight == 0.0) continue;
                        double v = 0.0;
                        for (int b = 0; b < n_actions; ++b) v += policy.at(y, b) * q.at(y, b);
                        continuation += weight * v;
                    }
                    double model = mle.mdp.r(x, a) + gamma * continuation;
                    if (mle.mdp.is_terminal(x)) model = 0.0;
                    note(out, std::abs(fitted.at(x, a) - model) <= 1e-12,
                         "dataset " + std::to_string(k) + " iteration " +
                             std::to_string(iteration) + " pair (" + std::to_string(x) + "," +
                             std::to_string(a) + ")");
                }
            }
            q = fitted;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 6: guarded iteration yields a monotone value trace and the
// Frobenius stopping rule fires within the iteration cap.

Outcome criterion_monotone_iteration() {
    Outcome out;
    BenchmarkConfig config;  // 50 states, 4 actions, connectivity 4 defaults
    for (int k = 0; k < 100 && out.pass; ++k) {
        Mdp mdp;
        PolicyTable baseline;
        if (!build_instance(config, 60000 + static_cast<std::uint64_t>(k) * 23, 0.9, &mdp,
                            &baseline)) {
            note(out, false, "instance " + std::to_string(k) + " could not be built");
            break;
        }
        Mdp two = add_second_goal(mdp, 61000 + static_cast<std::uint64_t>(k));
        Dataset data = sample_dataset(two, baseline, 200, 1000, 62000 + k);
        MleResult mle = estimate_mle(data, MdpShape::of(two), config.gamma, two.r_max);
        ErrorTable errors = hoeffding_error(mle.counts, 1.0, ErrorKind::hoeffding_p);

        SoftSpibbConfig soft;
        soft.epsilon = 2.0;
        soft.variant = k % 10 < 7 ? SoftSpibbVariant::approx : SoftSpibbVariant::exact;
        ImprovementResult result = run_policy_iteration(mle.mdp, baseline, errors, soft);

        note(out, result.converged && result.iterations_used <= 1000,
             "instance " + std::to_string(k) + " did not converge");
        for (size_t i = 0; i + 1 < result.value_trace.size(); ++i) {
            note(out, result.value_trace[i + 1] >= result.value_trace[i] - 1e-9,
                 "value dropped at iteration " + std::to_string(i) + " of instance " +
                     std::to_string(k));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 7: scaled benchmark sweep reproduces the qualitative safety
// ordering (500 instances, 50 states, three dataset sizes).

Outcome criterion_scaled_benchmark() {
    Outcome out;
    BenchmarkConfig config;
    config.eta_list = {0.9};
    config.dataset_sizes = {50, 200, 1000};
    config.n_seeds = 500;
    config.master_seed = 90001;
    config.algorithms = {
        {AlgoKind::approx_soft_spibb, false, {2.0}},
        {AlgoKind::basic_rl, false, {0.0}},
        {AlgoKind::pi_b_spibb, false, {10.0}},
        {AlgoKind::ramdp, false, {0.003}},
    };
    std::vector<RunRecord> records = run_benchmark(config);
    std::vector<AggregateRow> rows = aggregate_records(records, {10.0});

    auto find_row = [&](const char* algo, int size) -> const AggregateRow* {
        for (const AggregateRow& row : rows) {
            if (row.algorithm == algo && row.n_trajectories == size) return &row;
        }
        return nullptr;
    };

    for (int size : {50, 200, 1000}) {
        const AggregateRow* soft = find_row("approx-soft-spibb", size);
        if (soft == nullptr) {
            note(out, false, "no aggregated runs at size " + std::to_string(size));
            return out;
        }
        note(out, soft->n_runs >= 495,
             "only " + std::to_string(soft->n_runs) + " runs at size " + std::to_string(size));
        note(out, soft->mean > 0.0,
             "soft mean " + std::to_string(soft->mean) + " at size " + std::to_string(size));
        note(out, soft->cvar_values[0] >= -0.05,
             "soft 10%-CVaR " + std::to_string(soft->cvar_values[0]) + " at size " +
                 std::to_string(size));
    }

    const AggregateRow* greedy50 = find_row("basic-rl", 50);
    const AggregateRow* soft50 = find_row("approx-soft-spibb", 50);
    if (greedy50 != nullptr && soft50 != nullptr) {
        note(out, greedy50->cvar_values[0] < soft50->cvar_values[0],
             "plain greedy 10%-CVaR " + std::to_string(greedy50->cvar_values[0]) +
                 " not below soft " + std::to_string(soft50->cvar_values[0]));
    } else {
        note(out, false, "missing aggregate rows at size 50");
    }

    const AggregateRow* keep200 = find_row("pi-b-spibb", 200);
    const AggregateRow* soft200 = find_row("approx-soft-spibb", 200);
    if (keep200 != nullptr && soft200 != nullptr) {
        note(out, soft200->mean >= keep200->mean - 0.02,
             "soft mean " + std::to_string(soft200->mean) + " trails bootstrapping mean " +
                 std::to_string(keep200->mean) + " at size 200");
    } else {
        note(out, false, "missing aggregate rows at size 200");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 8: one approx improvement pass scales mildly in the action count
// and stays cheaper than the exact pass.

Outcome criterion_complexity_envelope() {
    Outcome out;
    std::vector<ComplexityRow> rows = measure_improvement_complexity({4, 16}, 2000, 20, 12345);
    if (rows.size() != 2 || rows[0].n_actions != 4 || rows[1].n_actions != 16) {
        note(out, false, "unexpected measurement shape");
        return out;
    }
    note(out, rows[0].approx_seconds > 0.0 && rows[1].approx_seconds > 0.0,
         "degenerate timings");
    double ratio = rows[1].approx_seconds / rows[0].approx_seconds;
    note(out, ratio <= 32.0, "approx 16/4 time ratio " + std::to_string(ratio));
    note(out, rows[1].exact_seconds > rows[1].approx_seconds,
         "exact pass was not slower than approx at 16 actions");
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 9: bound calculator spot checks.

Outcome criterion_bound_spot_checks() {
    Outcome out;
    std::vector<long long> visits{4, 4};

    BoundReport zero = bound_report(0.0, 0.9, 1.0, 0.5, visits, 1.0);
    note(out, zero.theorem1_bound == 0.0 && zero.theorem2_penalty == 0.0,
         "zero budget must zero both bounds");

    BoundReport first = bound_report(0.1, 0.9, 1.0, 0.0, visits, 1.0);
    note(out, std::abs(first.theorem1_bound - 1.0) <= 1e-12,
         "one-step bound " + std::to_string(first.theorem1_bound));

    BoundReport second = bound_report(0.1, 0.5, 1.0, 1.0, visits, 1.0);
    note(out, std::abs(second.theorem2_penalty - 1.2) <= 1e-12,
         "iterated penalty " + std::to_string(second.theorem2_penalty));

    CountTable counts_p(2, 1);
    counts_p.at(0, 0) = 8;
    counts_p.at(1, 0) = 8;
    ErrorTable e_p = hoeffding_error(counts_p, 1.0, ErrorKind::hoeffding_p);
    note(out, std::abs(e_p.at(0, 0) - 0.8325546111576977) <= 1e-12,
         "transition-model error " + std::to_string(e_p.at(0, 0)));

    CountTable counts_q(1, 1);
    counts_q.at(0, 0) = 2;
    ErrorTable e_q = hoeffding_error(counts_q, 1.0, ErrorKind::hoeffding_q);
    note(out, std::abs(e_q.at(0, 0) - 0.8325546111576977) <= 1e-12,
         "action-value error " + std::to_string(e_q.at(0, 0)));

    Rng rng(99);
    Mdp mdp = testutil::random_dense_mdp(rng, 5, 3, 0.9, {});
    PolicyTable baseline = testutil::random_policy(rng, 5, 3);
    ErrorTable uniform(5, 3, ErrorKind::inverse_sqrt, 0.7);
    double kappa = estimate_kappa(mdp, baseline, uniform);
    note(out, std::abs(kappa - 1.0) <= 1e-12,
         "uniform-error contraction estimate " + std::to_string(kappa));
    return out;
}

}  // namespace

int main() {
    struct Entry {
        int index;
        const char* label;
        double limit_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> entries = {
        {1, "golden bootstrapped rows", 1.0, criterion_golden_rows},
        {2, "per-state budget constraint suite", 10.0, criterion_constraint_suite},
        {3, "objective dominance and grid oracle", 60.0, criterion_dominance_and_grid},
        {4, "bootstrapping equivalence under matched errors", 60.0,
         criterion_bootstrap_equivalence},
        {5, "fitted backups equal model backups", 30.0, criterion_fitted_identity},
        {6, "guarded iteration is monotone and converges", 300.0, criterion_monotone_iteration},
        {7, "scaled benchmark safety ordering", 1800.0, criterion_scaled_benchmark},
        {8, "improvement pass complexity envelope", 120.0, criterion_complexity_envelope},
        {9, "bound calculator spot checks", 1.0, criterion_bound_spot_checks},
    };

    int failed = 0;
    for (const Entry& entry : entries) {
        auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = entry.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                             .count();
        if (out.pass && seconds > entry.limit_seconds) {
            out.pass = false;
            out.detail = "runtime exceeded the budget";
        }
        if (!out.pass) ++failed;
        std::printf("[%s] criterion %d: %s (%.1fs, limit %.0fs)%s%s\n",
                    out.pass ? "PASS" : "FAIL", entry.index, entry.label, seconds,
                    entry.limit_seconds, out.detail.empty() ? "" : " -- ",
                    out.detail.c_str());
        std::fflush(stdout);
    }
    if (failed > 0) {
        std::printf("%d of %zu criteria failed\n", failed, entries.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", entries.size());
    return 0;
}
