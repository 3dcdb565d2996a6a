#include "spibb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "spibb/competitors.hpp"
#include "spibb/dp.hpp"
#include "spibb/estimation.hpp"
#include "spibb/rng.hpp"
#include "spibb/soft_spibb.hpp"

namespace spibb {

namespace {

// Seed derivation stages. Instances hang off the master seed; everything an
// instance samples hangs off the instance seed, so adding a stage never
// perturbs the others.
constexpr std::uint64_t kStageInstance = 1;
constexpr std::uint64_t kStageRetry = 2;
constexpr std::uint64_t kStageMdp = 10;
constexpr std::uint64_t kStageSecondGoal = 11;
constexpr std::uint64_t kStageBaseline = 12;
constexpr std::uint64_t kStageDataset = 13;

bool is_soft(AlgoKind kind) {
    return kind == AlgoKind::exact_soft_spibb || kind == AlgoKind::approx_soft_spibb;
}

long long hyper_to_count(double hyper) {
    if (std::isnan(hyper) || hyper < 0.0) {
        throw std::invalid_argument("bootstrap count hyper-parameter must be nonnegative");
    }
    if (std::isinf(hyper) || hyper >= static_cast<double>(std::numeric_limits<long long>::max())) {
        return std::numeric_limits<long long>::max();
    }
    return std::llround(hyper);
}

int resolve_thread_count(int requested) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("SOFT_SPIBB_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1 && n > cap) n = static_cast<int>(cap);
    }
    return n;
}

ErrorTable make_error_table(const BenchmarkConfig& config, const CountTable& counts) {
    switch (config.error_kind) {
        case ErrorKind::hoeffding_p:
        case ErrorKind::hoeffding_q:
            return hoeffding_error(counts, config.delta, config.error_kind);
        case ErrorKind::inverse_sqrt:
            return inverse_sqrt_error(counts);
        case ErrorKind::spibb_equivalent:
            break;  // rejected by BenchmarkConfig::validate
    }
    throw std::invalid_argument("benchmark: unsupported error kind");
}

PolicyTable train_one(const AlgorithmSpec& spec, double hyper, const MleResult& mle,
                      const PolicyTable& baseline, const ErrorTable& errors) {
    switch (spec.kind) {
        case AlgoKind::basic_rl:
            return basic_rl(mle.mdp);
        case AlgoKind::ramdp:
            return ramdp(mle.mdp, mle.counts, hyper);
        case AlgoKind::pi_b_spibb:
            return pi_b_spibb(mle.mdp, baseline, mle.counts, hyper_to_count(hyper));
        case AlgoKind::pi_leq_b_spibb:
            return pi_leq_b_spibb(mle.mdp, baseline, mle.counts, hyper_to_count(hyper));
        case AlgoKind::exact_soft_spibb:
        case AlgoKind::approx_soft_spibb: {
            SoftSpibbConfig cfg;
            cfg.epsilon = hyper;
            cfg.variant = spec.kind == AlgoKind::exact_soft_spibb ? SoftSpibbVariant::exact
                                                                  : SoftSpibbVariant::approx;
            cfg.one_step = spec.one_step;
            return run_policy_iteration(mle.mdp, baseline, errors, cfg).policy;
        }
    }
    throw std::invalid_argument("benchmark: unknown algorithm kind");
}

std::vector<RunRecord> run_instance(const BenchmarkConfig& config, int instance) {
    const std::uint64_t base = derive_seed(config.master_seed, kStageInstance,
                                           static_cast<std::uint64_t>(instance));
    const int n_sizes = static_cast<int>(config.dataset_sizes.size());
    constexpr int kMaxAttempts = 100;

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t inst =
            attempt == 0 ? base : derive_seed(base, kStageRetry, static_cast<std::uint64_t>(attempt));
        Mdp single = generate_random_mdp(derive_seed(inst, kStageMdp, 0), config);
        Mdp two = add_second_goal(single, derive_seed(inst, kStageSecondGoal, 0));
        OptimalSolution opt2 = solve_optimal(two);
        double rho_opt = policy_value(two, opt2.policy);

        std::vector<PolicyTable> baselines;
        std::vector<double> rho_baselines;
        std::string reject;
        try {
            for (size_t eta_idx = 0; eta_idx < config.eta_list.size(); ++eta_idx) {
                PolicyTable pb = generate_baseline(single, config.eta_list[eta_idx],
                                                   derive_seed(inst, kStageBaseline, eta_idx));
                double rb = policy_value(two, pb);
                if (!(rho_opt > rb + 1e-12)) {
                    reject = "degenerate normalization span";
                    break;
                }
                baselines.push_back(std::move(pb));
                rho_baselines.push_back(rb);
            }
        } catch (const std::runtime_error& e) {
            reject = e.what();
        }
        if (!reject.empty() || baselines.size() != config.eta_list.size()) {
            std::cerr << "benchmark: instance " << instance << " attempt " << attempt
                      << " rejected (" << (reject.empty() ? "baseline construction failed" : reject)
                      << "); resampling\n";
            continue;
        }

        std::vector<RunRecord> records;
        for (size_t eta_idx = 0; eta_idx < config.eta_list.size(); ++eta_idx) {
            const double eta = config.eta_list[eta_idx];
            const PolicyTable& pb = baselines[eta_idx];
            const double rho_b = rho_baselines[eta_idx];
            for (int size_idx = 0; size_idx < n_sizes; ++size_idx) {
                const int n_traj = config.dataset_sizes[static_cast<size_t>(size_idx)];
                const std::uint64_t ds_seed = derive_seed(
                    inst, kStageDataset, eta_idx * static_cast<std::uint64_t>(n_sizes) +
                                             static_cast<std::uint64_t>(size_idx));
                Dataset data = sample_dataset(two, pb, n_traj, config.horizon_cap, ds_seed,
                                              RewardConvention::goal_entry);
                MleResult mle = estimate_mle(data, MdpShape::of(two), config.gamma, two.r_max);
                ErrorTable errors = make_error_table(config, mle.counts);

                for (const AlgorithmSpec& spec : config.algorithms) {
                    const std::string name = algo_name(spec.kind, spec.one_step);
                    for (double hyper : spec.hyperparameters) {
                        try {
                            PolicyTable policy = train_one(spec, hyper, mle, pb, errors);
                            double raw = policy_value(two, policy);
                            RunRecord record;
                            record.seed = static_cast<std::uint64_t>(instance);
                            record.eta = eta;
                            record.n_trajectories = n_traj;
                            record.algorithm = name;
                            record.hyperparameter = hyper;
                            record.raw_perf = raw;
                            record.normalized_perf = normalized_performance(raw, rho_b, rho_opt);
                            records.push_back(std::move(record));
                        } catch (const std::exception& e) {
                            std::cerr << "benchmark: run failed (instance " << instance << " eta "
                                      << eta << " size " << n_traj << " algo " << name << " hyper "
                                      << hyper << "): " << e.what() << "\n";
                        }
                    }
                }
            }
        }
        return records;
    }
    std::ostringstream message;
    message << "benchmark: instance " << instance << " still degenerate after " << kMaxAttempts
            << " attempts";
    throw std::runtime_error(message.str());
}

}  // namespace

std::string algo_name(AlgoKind kind, bool one_step) {
    std::string base;
    switch (kind) {
        case AlgoKind::basic_rl: base = "basic-rl"; break;
        case AlgoKind::ramdp: base = "ramdp"; break;
        case AlgoKind::pi_b_spibb: base = "pi-b-spibb"; break;
        case AlgoKind::pi_leq_b_spibb: base = "pi-leq-b-spibb"; break;
        case AlgoKind::exact_soft_spibb: base = "exact-soft-spibb"; break;
        case AlgoKind::approx_soft_spibb: base = "approx-soft-spibb"; break;
    }
    if (base.empty()) throw std::invalid_argument("algo_name: unknown algorithm kind");
    return one_step ? base + "-1step" : base;
}

AlgoKind algo_from_name(const std::string& name, bool* one_step) {
    std::string base = name;
    bool os = false;
    const std::string suffix = "-1step";
    if (base.size() > suffix.size() && base.ends_with(suffix)) {
        os = true;
        base.resize(base.size() - suffix.size());
    }
    AlgoKind kind;
    if (base == "basic-rl") kind = AlgoKind::basic_rl;
    else if (base == "ramdp") kind = AlgoKind::ramdp;
    else if (base == "pi-b-spibb") kind = AlgoKind::pi_b_spibb;
    else if (base == "pi-leq-b-spibb") kind = AlgoKind::pi_leq_b_spibb;
    else if (base == "exact-soft-spibb") kind = AlgoKind::exact_soft_spibb;
    else if (base == "approx-soft-spibb") kind = AlgoKind::approx_soft_spibb;
    else throw std::invalid_argument("unknown algorithm name: " + name);
    if (one_step) *one_step = os;
    return kind;
}

void BenchmarkConfig::validate() const {
    if (n_states < 3) throw std::invalid_argument("benchmark config: need at least 3 states");
    if (n_actions < 2) throw std::invalid_argument("benchmark config: need at least 2 actions");
    if (connectivity < 1 || connectivity > n_states) {
        throw std::invalid_argument("benchmark config: connectivity must lie in [1, n_states]");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("benchmark config: gamma must lie in [0, 1)");
    }
    if (eta_list.empty()) throw std::invalid_argument("benchmark config: eta_list is empty");
    for (double eta : eta_list) {
        if (!(eta > 0.0 && eta < 1.0)) {
            throw std::invalid_argument("benchmark config: eta must lie in (0, 1)");
        }
    }
    if (dataset_sizes.empty()) throw std::invalid_argument("benchmark config: dataset_sizes is empty");
    for (int n : dataset_sizes) {
        if (n < 1) throw std::invalid_argument("benchmark config: dataset sizes must be positive");
    }
    if (n_seeds < 1) throw std::invalid_argument("benchmark config: n_seeds must be positive");
    if (horizon_cap < 1) throw std::invalid_argument("benchmark config: horizon_cap must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw std::invalid_argument("benchmark config: delta must lie in (0, 1]");
    }
    if (n_threads < 0) throw std::invalid_argument("benchmark config: n_threads must be nonnegative");
    if (error_kind == ErrorKind::spibb_equivalent) {
        throw std::invalid_argument(
            "benchmark config: the spibb-equivalent error table needs a per-run bootstrap count "
            "and is not available in the sweep");
    }
    for (const AlgorithmSpec& spec : algorithms) {
        if (spec.hyperparameters.empty()) {
            throw std::invalid_argument("benchmark config: algorithm without hyper-parameter values");
        }
        for (double h : spec.hyperparameters) {
            if (std::isnan(h) || h < 0.0) {
                throw std::invalid_argument("benchmark config: hyper-parameters must be nonnegative");
            }
        }
        if (spec.one_step && !is_soft(spec.kind)) {
            throw std::invalid_argument(
                "benchmark config: the one-step variant exists only for the soft algorithms");
        }
    }
}

Mdp generate_random_mdp(std::uint64_t seed, const BenchmarkConfig& config) {
    const int ns = config.n_states;
    const int na = config.n_actions;
    const int conn = config.connectivity;
    if (ns < 2) throw std::invalid_argument("generate_random_mdp: need at least 2 states");
    if (na < 1) throw std::invalid_argument("generate_random_mdp: need at least 1 action");
    if (conn < 1 || conn > ns) {
        throw std::invalid_argument("generate_random_mdp: connectivity must lie in [1, n_states]");
    }
    if (!(config.gamma >= 0.0 && config.gamma < 1.0)) {
        throw std::invalid_argument("generate_random_mdp: gamma must lie in [0, 1)");
    }

    Mdp mdp;
    mdp.n_states = ns;
    mdp.n_actions = na;
    mdp.gamma = config.gamma;
    mdp.r_max = 1.0;
    mdp.initial_state = 0;
    mdp.terminal.assign(static_cast<size_t>(ns), 0);
    mdp.reward.assign(static_cast<size_t>(ns) * na, 0.0);
    mdp.transition.assign(static_cast<size_t>(ns) * na * ns, 0.0);

    Rng rng(seed);
    for (int x = 0; x < ns; ++x) {
        for (int a = 0; a < na; ++a) {
            std::vector<int> successors = rng.sample_without_replacement(ns, conn);
            std::vector<double> weights = rng.dirichlet(conn);
            for (int i = 0; i < conn; ++i) {
                mdp.p(x, a, successors[static_cast<size_t>(i)]) = weights[static_cast<size_t>(i)];
            }
        }
    }

    // The goal is the hardest-to-reach state: flagging it terminal with entry
    // reward 1 must give the smallest optimal value from the initial state.
    int goal = -1;
    double lowest = std::numeric_limits<double>::infinity();
    for (int g = 0; g < ns; ++g) {
        if (g == mdp.initial_state) continue;
        Mdp candidate = mdp;
        candidate.terminal[static_cast<size_t>(g)] = 1;
        for (int x = 0; x < ns; ++x) {
            for (int a = 0; a < na; ++a) candidate.r(x, a) = candidate.p(x, a, g);
        }
        OptimalSolution opt = solve_optimal(candidate);
        double value = 0.0;
        for (int a = 0; a < na; ++a) {
            value = std::max(value, opt.q.at(mdp.initial_state, a));
        }
        if (value < lowest) {
            lowest = value;
            goal = g;
        }
    }
    mdp.terminal[static_cast<size_t>(goal)] = 1;
    for (int x = 0; x < ns; ++x) {
        for (int a = 0; a < na; ++a) mdp.r(x, a) = mdp.p(x, a, goal);
    }
    mdp.validate();
    return mdp;
}

Mdp add_second_goal(const Mdp& mdp, std::uint64_t seed) {
    mdp.validate();
    std::vector<int> candidates;
    for (int x = 0; x < mdp.n_states; ++x) {
        if (x != mdp.initial_state && !mdp.is_terminal(x)) candidates.push_back(x);
    }
    if (candidates.empty()) {
        throw std::runtime_error("add_second_goal: no non-goal non-initial state available");
    }
    Rng rng(seed);
    int goal = candidates[static_cast<size_t>(rng.uniform_int(static_cast<int>(candidates.size())))];

    Mdp two = mdp;
    two.terminal[static_cast<size_t>(goal)] = 1;
    for (int x = 0; x < two.n_states; ++x) {
        for (int a = 0; a < two.n_actions; ++a) {
            double r = 0.0;
            for (int y = 0; y < two.n_states; ++y) {
                if (two.is_terminal(y)) r += two.p(x, a, y);
            }
            two.r(x, a) = r;
        }
    }
    two.validate();
    return two;
}

PolicyTable generate_baseline(const Mdp& mdp, double eta, std::uint64_t seed) {
    mdp.validate();
    if (!(eta > 0.0 && eta < 1.0)) {
        throw std::invalid_argument("generate_baseline: eta must lie in (0, 1)");
    }
    OptimalSolution opt = solve_optimal(mdp);
    const double rho_star = policy_value(mdp, opt.policy);
    const double rho_uniform = policy_value(mdp, PolicyTable::uniform(mdp.n_states, mdp.n_actions));
    const double target = eta * rho_star + (1.0 - eta) * rho_uniform;
    const double band = 0.01 * std::abs(target);
    if (!(band > 0.0)) {
        throw std::runtime_error("generate_baseline: degenerate performance target");
    }

    auto softmax_policy = [&](double beta) {
        PolicyTable policy(mdp.n_states, mdp.n_actions);
        for (int x = 0; x < mdp.n_states; ++x) {
            double best = opt.q.at(x, 0);
            for (int a = 1; a < mdp.n_actions; ++a) best = std::max(best, opt.q.at(x, a));
            double total = 0.0;
            for (int a = 0; a < mdp.n_actions; ++a) {
                double w = std::exp(beta * (opt.q.at(x, a) - best));
                policy.at(x, a) = w;
                total += w;
            }
            for (int a = 0; a < mdp.n_actions; ++a) policy.at(x, a) /= total;
        }
        return policy;
    };

    constexpr int kMaxEvaluations = 200;
    int evaluations = 0;
    auto value_at = [&](double beta, PolicyTable* out) {
        PolicyTable policy = softmax_policy(beta);
        double v = policy_value(mdp, policy);
        ++evaluations;
        if (out) *out = std::move(policy);
        return v;
    };

    PolicyTable current = PolicyTable::uniform(mdp.n_states, mdp.n_actions);
    double current_value = rho_uniform;
    if (std::abs(current_value - target) > band) {
        double lo = 0.0;
        double hi = 1.0;
        PolicyTable hi_policy;
        double hi_value = value_at(hi, &hi_policy);
        while (hi_value < target && evaluations < kMaxEvaluations) {
            lo = hi;
            hi *= 2.0;
            hi_value = value_at(hi, &hi_policy);
        }
        bool inside = std::abs(hi_value - target) <= band;
        if (inside) {
            current = std::move(hi_policy);
            current_value = hi_value;
        }
        while (!inside && evaluations < kMaxEvaluations) {
            double mid = 0.5 * (lo + hi);
            PolicyTable mid_policy;
            double mid_value = value_at(mid, &mid_policy);
            if (std::abs(mid_value - target) <= band) {
                current = std::move(mid_policy);
                current_value = mid_value;
                inside = true;
                break;
            }
            if (mid_value < target) lo = mid;
            else hi = mid;
        }
        if (!inside) {
            throw std::runtime_error("generate_baseline: bisection could not reach the target band");
        }
    }

    // Random mass displacements decorrelate the baseline from the softmax
    // family while staying inside the band.
    Rng rng(seed);
    constexpr int kWantedMoves = 100;
    constexpr int kMaxAttempts = 5000;
    int accepted = 0;
    for (int attempt = 0; attempt < kMaxAttempts && accepted < kWantedMoves; ++attempt) {
        int x = rng.uniform_int(mdp.n_states);
        if (mdp.is_terminal(x)) continue;
        int a_from = rng.uniform_int(mdp.n_actions);
        int offset = rng.uniform_int(mdp.n_actions - 1);
        int a_to = offset >= a_from ? offset + 1 : offset;
        double mass = rng.next_double() * 0.1 * current.at(x, a_from);
        if (mass <= 0.0) continue;
        current.at(x, a_from) -= mass;
        current.at(x, a_to) += mass;
        double moved_value = policy_value(mdp, current);
        if (std::abs(moved_value - target) <= band) {
            current_value = moved_value;
            ++accepted;
        } else {
            current.at(x, a_from) += mass;
            current.at(x, a_to) -= mass;
        }
    }
    current.exactify_rows();
    return current;
}

Dataset sample_dataset(const Mdp& mdp, const PolicyTable& policy, int n_trajectories,
                       int horizon_cap, std::uint64_t seed, RewardConvention convention) {
    mdp.validate();
    policy.validate();
    if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions) {
        throw std::invalid_argument("sample_dataset: policy shape does not match the model");
    }
    if (n_trajectories < 0) throw std::invalid_argument("sample_dataset: negative trajectory count");
    if (horizon_cap < 1) throw std::invalid_argument("sample_dataset: horizon_cap must be positive");

    Dataset dataset;
    dataset.n_states = mdp.n_states;
    dataset.n_actions = mdp.n_actions;
    Rng rng(seed);
    for (int trajectory = 0; trajectory < n_trajectories; ++trajectory) {
        int x = mdp.initial_state;
        for (int step = 0; step < horizon_cap && !mdp.is_terminal(x); ++step) {
            int a = rng.categorical(policy.row(x));
            int y = rng.categorical(mdp.transition_row(x, a));
            double r = convention == RewardConvention::goal_entry
                           ? (mdp.is_terminal(y) ? 1.0 : 0.0)
                           : mdp.r(x, a);
            dataset.transitions.push_back(Transition{trajectory, step, x, a, r, y});
            x = y;
        }
    }
    return dataset;
}

double normalized_performance(double raw, double rho_baseline, double rho_optimal) {
    if (!(rho_optimal > rho_baseline + 1e-12)) {
        throw std::invalid_argument("normalized_performance: optimal value must exceed the baseline");
    }
    return (raw - rho_baseline) / (rho_optimal - rho_baseline);
}

double cvar(std::vector<double> values, double level_percent) {
    if (values.empty()) throw std::invalid_argument("cvar: empty value list");
    if (!(level_percent > 0.0 && level_percent <= 100.0)) {
        throw std::invalid_argument("cvar: level must lie in (0, 100]");
    }
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    auto k = static_cast<size_t>(std::ceil(level_percent * static_cast<double>(n) / 100.0));
    k = std::clamp<size_t>(k, 1, n);
    double total = 0.0;
    for (size_t i = 0; i < k; ++i) total += values[i];
    return total / static_cast<double>(k);
}

std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config) {
    config.validate();
    if (config.algorithms.empty()) {
        throw std::invalid_argument("run_benchmark: no algorithms configured");
    }

    const int n_threads = std::min(resolve_thread_count(config.n_threads), config.n_seeds);
    std::vector<std::vector<RunRecord>> per_instance(static_cast<size_t>(config.n_seeds));
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= config.n_seeds) break;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) break;
            }
            try {
                per_instance[static_cast<size_t>(i)] = run_instance(config, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<RunRecord> records;
    for (std::vector<RunRecord>& chunk : per_instance) {
        records.insert(records.end(), std::make_move_iterator(chunk.begin()),
                       std::make_move_iterator(chunk.end()));
    }
    return records;
}

std::vector<AggregateRow> aggregate_records(const std::vector<RunRecord>& records,
                                            const std::vector<double>& levels) {
    if (levels.empty()) throw std::invalid_argument("aggregate_records: no CVaR levels");
    for (double level : levels) {
        if (!(level > 0.0 && level <= 100.0)) {
            throw std::invalid_argument("aggregate_records: levels must lie in (0, 100]");
        }
    }

    using Key = std::tuple<double, int, std::string, double>;
    std::map<Key, std::vector<double>> groups;
    for (const RunRecord& r : records) {
        groups[Key{r.eta, r.n_trajectories, r.algorithm, r.hyperparameter}].push_back(
            r.normalized_perf);
    }

    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (auto& [key, values] : groups) {
        AggregateRow row;
        row.eta = std::get<0>(key);
        row.n_trajectories = std::get<1>(key);
        row.algorithm = std::get<2>(key);
        row.hyperparameter = std::get<3>(key);
        row.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                   static_cast<double>(values.size());
        row.cvar_values.reserve(levels.size());
        for (double level : levels) row.cvar_values.push_back(cvar(values, level));
        row.n_runs = static_cast<long long>(values.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace spibb
