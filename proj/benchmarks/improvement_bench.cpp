// Microbenchmarks for the per-state improvement operations and the guarded
// policy iteration they drive.
#include <benchmark/benchmark.h>

#include <cstdint>
#include <limits>
#include <vector>

#include "spibb/dp.hpp"
#include "spibb/errors.hpp"
#include "spibb/estimation.hpp"
#include "spibb/experiment.hpp"
#include "spibb/model.hpp"
#include "spibb/rng.hpp"
#include "spibb/soft_spibb.hpp"

namespace {

using namespace spibb;

struct RowBatch {
    std::vector<std::vector<double>> q;
    std::vector<std::vector<double>> baseline;
    std::vector<std::vector<double>> errors;
    double epsilon = 1.0;
};

RowBatch draw_rows(int n_actions, int n_rows) {
    Rng rng(2024);
    RowBatch batch;
    batch.q.reserve(static_cast<size_t>(n_rows));
    for (int i = 0; i < n_rows; ++i) {
        std::vector<double> q(static_cast<size_t>(n_actions));
        std::vector<double> e(static_cast<size_t>(n_actions));
        for (double& v : q) v = rng.uniform(-2.0, 2.0);
        for (double& v : e) {
            v = rng.next_double() < 0.1 ? std::numeric_limits<double>::infinity()
                                        : rng.uniform(0.05, 2.5);
        }
        batch.q.push_back(std::move(q));
        batch.baseline.push_back(rng.dirichlet(n_actions));
        batch.errors.push_back(std::move(e));
    }
    return batch;
}

void BM_ApproxImprovementRow(benchmark::State& state) {
    const int n_actions = static_cast<int>(state.range(0));
    RowBatch batch = draw_rows(n_actions, 256);
    size_t i = 0;
    for (auto _ : state) {
        std::vector<double> row = approx_improvement_state(batch.q[i], batch.baseline[i],
                                                           batch.errors[i], batch.epsilon);
        benchmark::DoNotOptimize(row.data());
        i = (i + 1) % batch.q.size();
    }
}
BENCHMARK(BM_ApproxImprovementRow)->Arg(4)->Arg(8)->Arg(16);

void BM_ExactImprovementRow(benchmark::State& state) {
    const int n_actions = static_cast<int>(state.range(0));
    RowBatch batch = draw_rows(n_actions, 256);
    size_t i = 0;
    for (auto _ : state) {
        std::vector<double> row = exact_improvement_state(batch.q[i], batch.baseline[i],
                                                          batch.errors[i], batch.epsilon);
        benchmark::DoNotOptimize(row.data());
        i = (i + 1) % batch.q.size();
    }
}
BENCHMARK(BM_ExactImprovementRow)->Arg(4)->Arg(8)->Arg(16);

/// Full training run on one benchmark-sized instance (50 states, 4 actions,
/// 200 trajectories), covering evaluation, improvement, and the guard.
void BM_GuardedPolicyIteration(benchmark::State& state) {
    BenchmarkConfig config;
    Mdp mdp = generate_random_mdp(7, config);
    PolicyTable baseline = generate_baseline(mdp, 0.9, 8);
    Mdp two = add_second_goal(mdp, 9);
    Dataset data = sample_dataset(two, baseline, 200, config.horizon_cap, 10);
    MleResult mle = estimate_mle(data, MdpShape::of(two), config.gamma, two.r_max);
    ErrorTable errors = hoeffding_error(mle.counts, 1.0, ErrorKind::hoeffding_p);

    SoftSpibbConfig soft;
    soft.epsilon = 2.0;
    soft.variant = state.range(0) == 0 ? SoftSpibbVariant::approx : SoftSpibbVariant::exact;
    for (auto _ : state) {
        ImprovementResult result = run_policy_iteration(mle.mdp, baseline, errors, soft);
        benchmark::DoNotOptimize(result.policy.probs.data());
    }
}
BENCHMARK(BM_GuardedPolicyIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
