// spibb: command-line front end for the safe-policy-improvement library.
//
// Every command reads and writes plain files (JSON for structured objects,
// CSV for row streams) and is deterministic for a fixed seed. A JSON document
// passed via --config supplies defaults for any flag not given explicitly.
// Exit codes: 0 success, 1 invalid input or flags, 2 runtime failure.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spibb/competitors.hpp"
#include "spibb/dp.hpp"
#include "spibb/errors.hpp"
#include "spibb/estimation.hpp"
#include "spibb/experiment.hpp"
#include "spibb/io.hpp"
#include "spibb/model.hpp"
#include "spibb/rng.hpp"
#include "spibb/soft_spibb.hpp"

namespace {

using nlohmann::json;
using namespace spibb;

json load_config_doc(const std::string& path, const std::string& command) {
    if (path.empty()) return json::object();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument(path + ": cannot open config file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument(path + ": config must be a JSON object");
    if (doc.contains("command")) {
        if (!doc["command"].is_string() || doc["command"].get<std::string>() != command) {
            throw std::invalid_argument(path + ": config \"command\" does not match \"" + command +
                                        "\"");
        }
    }
    return doc;
}

[[noreturn]] void bad_config(const std::string& key, const char* expected) {
    throw std::invalid_argument("config key \"" + key + "\": expected " + expected);
}

// Merge helpers: a value explicitly passed on the command line wins, then the
// config document, then the compiled-in default already in the variable.
void merge(const json& cfg, const CLI::Option* opt, const std::string& key, double& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_number()) bad_config(key, "a number");
    value = cfg[key].get<double>();
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key, int& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_number_integer()) bad_config(key, "an integer");
    value = cfg[key].get<int>();
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key, long long& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_number_integer()) bad_config(key, "an integer");
    value = cfg[key].get<long long>();
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key, std::uint64_t& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_number_unsigned() && !cfg[key].is_number_integer()) {
        bad_config(key, "a nonnegative integer");
    }
    if (cfg[key].is_number_integer() && cfg[key].get<long long>() < 0) {
        bad_config(key, "a nonnegative integer");
    }
    value = cfg[key].get<std::uint64_t>();
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key, bool& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_boolean()) bad_config(key, "a boolean");
    value = cfg[key].get<bool>();
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key, std::string& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_string()) bad_config(key, "a string");
    value = cfg[key].get<std::string>();
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key,
           std::vector<double>& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_array()) bad_config(key, "an array of numbers");
    std::vector<double> out;
    for (const json& cell : cfg[key]) {
        if (!cell.is_number()) bad_config(key, "an array of numbers");
        out.push_back(cell.get<double>());
    }
    value = std::move(out);
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key,
           std::vector<int>& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_array()) bad_config(key, "an array of integers");
    std::vector<int> out;
    for (const json& cell : cfg[key]) {
        if (!cell.is_number_integer()) bad_config(key, "an array of integers");
        out.push_back(cell.get<int>());
    }
    value = std::move(out);
}

void merge(const json& cfg, const CLI::Option* opt, const std::string& key,
           std::vector<std::string>& value) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    if (!cfg[key].is_array()) bad_config(key, "an array of strings");
    std::vector<std::string> out;
    for (const json& cell : cfg[key]) {
        if (!cell.is_string()) bad_config(key, "an array of strings");
        out.push_back(cell.get<std::string>());
    }
    value = std::move(out);
}

void require_path(const std::string& value, const char* flag, const char* command) {
    if (value.empty()) {
        throw std::invalid_argument(std::string(command) + ": " + flag + " is required");
    }
}

double parse_double_token(const std::string& token, const std::string& context) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size()) {
        throw std::invalid_argument(context + ": not a number: \"" + token + "\"");
    }
    return v;
}

// "name" or "name:h1,h2,..." into an AlgorithmSpec.
AlgorithmSpec parse_algo_spec(const std::string& text) {
    AlgorithmSpec spec;
    const size_t colon = text.find(':');
    const std::string name = text.substr(0, colon);
    bool one_step = false;
    spec.kind = algo_from_name(name, &one_step);
    spec.one_step = one_step;
    if (colon != std::string::npos) {
        spec.hyperparameters.clear();
        std::istringstream list(text.substr(colon + 1));
        std::string token;
        while (std::getline(list, token, ',')) {
            spec.hyperparameters.push_back(parse_double_token(token, "--algo " + text));
        }
        if (spec.hyperparameters.empty()) {
            throw std::invalid_argument("--algo " + text + ": empty hyper-parameter list");
        }
    }
    return spec;
}

ErrorTable build_error_table(ErrorKind kind, const CountTable& counts, double delta,
                             long long n_wedge, double epsilon) {
    switch (kind) {
        case ErrorKind::hoeffding_p:
        case ErrorKind::hoeffding_q:
            return hoeffding_error(counts, delta, kind);
        case ErrorKind::inverse_sqrt:
            return inverse_sqrt_error(counts);
        case ErrorKind::spibb_equivalent:
            return spibb_equivalent_error(counts, n_wedge, epsilon);
    }
    throw std::invalid_argument("unknown error kind");
}

std::string format_17g(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

json finite_or_inf(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

// ---------------------------------------------------------------- commands

struct GenerateMdpArgs {
    std::uint64_t seed = 0;
    std::string out;
    std::string second_goal_out;
    int n_states = 50;
    int n_actions = 4;
    int connectivity = 4;
    double gamma = 0.95;
};

void run_generate_mdp(const GenerateMdpArgs& args) {
    require_path(args.out, "--out", "generate-mdp");
    BenchmarkConfig config;
    config.n_states = args.n_states;
    config.n_actions = args.n_actions;
    config.connectivity = args.connectivity;
    config.gamma = args.gamma;
    Mdp mdp = generate_random_mdp(args.seed, config);
    save_mdp(mdp, args.out);
    if (!args.second_goal_out.empty()) {
        Mdp two = add_second_goal(mdp, args.seed);
        save_mdp(two, args.second_goal_out);
    }
}

struct GenerateBaselineArgs {
    std::string mdp_path;
    double eta = 0.9;
    std::uint64_t seed = 0;
    std::string out;
};

void run_generate_baseline(const GenerateBaselineArgs& args) {
    require_path(args.mdp_path, "--mdp", "generate-baseline");
    require_path(args.out, "--out", "generate-baseline");
    Mdp mdp = load_mdp(args.mdp_path);
    PolicyTable baseline = generate_baseline(mdp, args.eta, args.seed);
    save_policy(baseline, args.out);
}

struct GenerateDatasetArgs {
    std::string mdp_path;
    std::string policy_path;
    int n_trajectories = 100;
    int horizon_cap = 1000;
    std::uint64_t seed = 0;
    std::string convention = "goal-entry";
    std::string out;
};

void run_generate_dataset(const GenerateDatasetArgs& args) {
    require_path(args.mdp_path, "--mdp", "generate-dataset");
    require_path(args.policy_path, "--policy", "generate-dataset");
    require_path(args.out, "--out", "generate-dataset");
    RewardConvention convention;
    if (args.convention == "goal-entry") convention = RewardConvention::goal_entry;
    else if (args.convention == "reward-table") convention = RewardConvention::reward_table;
    else throw std::invalid_argument("generate-dataset: unknown reward convention \"" +
                                     args.convention + "\"");
    Mdp mdp = load_mdp(args.mdp_path);
    PolicyTable policy = load_policy(args.policy_path);
    Dataset dataset = sample_dataset(mdp, policy, args.n_trajectories, args.horizon_cap, args.seed,
                                     convention);
    save_dataset(dataset, args.out);
}

struct TrainArgs {
    std::string mdp_path;
    std::string baseline_path;
    std::string data_path;
    std::string algo;
    std::string out;
    double epsilon = 1.0;
    long long n_wedge = 10;
    double kappa_adj = 0.003;
    double delta = 1.0;
    std::string error_kind = "hoeffding-p";
    bool one_step = false;
    double gamma = -1.0;  // < 0 means "use the MDP file's gamma"
};

void run_train(const TrainArgs& args) {
    require_path(args.mdp_path, "--mdp", "train");
    require_path(args.data_path, "--data", "train");
    require_path(args.out, "--out", "train");
    if (args.algo.empty()) throw std::invalid_argument("train: --algo is required");

    bool flagged_one_step = false;
    AlgoKind kind = algo_from_name(args.algo, &flagged_one_step);
    const bool one_step = args.one_step || flagged_one_step;
    const bool needs_baseline = kind != AlgoKind::basic_rl && kind != AlgoKind::ramdp;
    if (needs_baseline) require_path(args.baseline_path, "--baseline", "train");

    // The MDP file contributes shape metadata, gamma and r_max only; training
    // sees the data through the maximum-likelihood estimate alone.
    Mdp shape_source = load_mdp(args.mdp_path);
    const double gamma = args.gamma >= 0.0 ? args.gamma : shape_source.gamma;
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("train: gamma must lie in [0, 1)");
    }
    Dataset data = load_dataset(args.data_path, shape_source.n_states, shape_source.n_actions);
    MleResult mle = estimate_mle(data, MdpShape::of(shape_source), gamma, shape_source.r_max);

    PolicyTable baseline;
    if (needs_baseline) {
        baseline = load_policy(args.baseline_path);
        if (baseline.n_states != shape_source.n_states ||
            baseline.n_actions != shape_source.n_actions) {
            throw std::invalid_argument("train: baseline shape does not match the MDP file");
        }
    }

    PolicyTable policy;
    switch (kind) {
        case AlgoKind::basic_rl:
            policy = basic_rl(mle.mdp);
            break;
        case AlgoKind::ramdp:
            policy = ramdp(mle.mdp, mle.counts, args.kappa_adj);
            break;
        case AlgoKind::pi_b_spibb:
            policy = pi_b_spibb(mle.mdp, baseline, mle.counts, args.n_wedge);
            break;
        case AlgoKind::pi_leq_b_spibb:
            policy = pi_leq_b_spibb(mle.mdp, baseline, mle.counts, args.n_wedge);
            break;
        case AlgoKind::exact_soft_spibb:
        case AlgoKind::approx_soft_spibb: {
            ErrorTable errors = build_error_table(error_kind_from_name(args.error_kind), mle.counts,
                                                  args.delta, args.n_wedge, args.epsilon);
            SoftSpibbConfig cfg;
            cfg.epsilon = args.epsilon;
            cfg.variant = kind == AlgoKind::exact_soft_spibb ? SoftSpibbVariant::exact
                                                             : SoftSpibbVariant::approx;
            cfg.one_step = one_step;
            policy = run_policy_iteration(mle.mdp, baseline, errors, cfg).policy;
            break;
        }
    }
    save_policy(policy, args.out);
}

struct EvaluateArgs {
    std::string mdp_path;
    std::string policy_path;
    std::string out;
};

void run_evaluate(const EvaluateArgs& args) {
    require_path(args.mdp_path, "--mdp", "evaluate");
    require_path(args.policy_path, "--policy", "evaluate");
    Mdp mdp = load_mdp(args.mdp_path);
    PolicyTable policy = load_policy(args.policy_path);
    if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions) {
        throw std::invalid_argument("evaluate: policy shape does not match the MDP");
    }
    std::vector<double> values = policy_state_values(mdp, policy);
    double rho = values[static_cast<size_t>(mdp.initial_state)];
    std::cout << format_17g(rho) << "\n";
    if (!args.out.empty()) {
        json j;
        j["initial_state_value"] = rho;
        j["state_values"] = values;
        atomic_write_text(args.out, j.dump(2) + "\n");
    }
}

struct BenchmarkArgs {
    int n_states = 50;
    int n_actions = 4;
    int connectivity = 4;
    double gamma = 0.95;
    std::vector<double> eta_list{0.9};
    std::vector<int> sizes{10, 20, 50, 100, 200, 500, 1000, 2000};
    int n_seeds = 100;
    std::uint64_t master_seed = 0;
    std::vector<std::string> algos;
    int horizon_cap = 1000;
    std::string error_kind = "hoeffding-p";
    double delta = 1.0;
    int threads = 0;
    std::string out;
};

void run_benchmark_command(const BenchmarkArgs& args) {
    require_path(args.out, "--out", "benchmark");
    if (args.algos.empty()) throw std::invalid_argument("benchmark: at least one --algo is required");
    BenchmarkConfig config;
    config.n_states = args.n_states;
    config.n_actions = args.n_actions;
    config.connectivity = args.connectivity;
    config.gamma = args.gamma;
    config.eta_list = args.eta_list;
    config.dataset_sizes = args.sizes;
    config.n_seeds = args.n_seeds;
    config.master_seed = args.master_seed;
    config.horizon_cap = args.horizon_cap;
    config.error_kind = error_kind_from_name(args.error_kind);
    config.delta = args.delta;
    config.n_threads = args.threads;
    for (const std::string& text : args.algos) config.algorithms.push_back(parse_algo_spec(text));
    std::vector<RunRecord> records = run_benchmark(config);
    save_run_records(records, args.out);
}

struct AggregateArgs {
    std::string records_path;
    std::vector<double> levels{10.0, 1.0, 0.1};
    std::string out;
};

void run_aggregate(const AggregateArgs& args) {
    require_path(args.records_path, "the records file argument", "aggregate");
    std::vector<RunRecord> records = load_run_records(args.records_path);
    if (records.empty()) throw std::invalid_argument("aggregate: no records in " + args.records_path);
    std::vector<AggregateRow> rows = aggregate_records(records, args.levels);
    std::string text = format_aggregate_csv(rows, args.levels);
    if (args.out.empty()) std::cout << text;
    else atomic_write_text(args.out, text);
}

struct BoundsArgs {
    std::string mdp_path;
    std::string baseline_path;
    std::string data_path;
    double epsilon = 1.0;
    double delta = 1.0;
    std::string error_kind = "hoeffding-p";
    long long n_wedge = 10;
    double kappa = -1.0;  // < 0 means "estimate from the data"
    std::string out;
};

void run_bounds(const BoundsArgs& args) {
    require_path(args.mdp_path, "--mdp", "bounds");
    require_path(args.baseline_path, "--baseline", "bounds");
    require_path(args.data_path, "--data", "bounds");
    require_path(args.out, "--out", "bounds");

    Mdp shape_source = load_mdp(args.mdp_path);
    PolicyTable baseline = load_policy(args.baseline_path);
    if (baseline.n_states != shape_source.n_states ||
        baseline.n_actions != shape_source.n_actions) {
        throw std::invalid_argument("bounds: baseline shape does not match the MDP file");
    }
    Dataset data = load_dataset(args.data_path, shape_source.n_states, shape_source.n_actions);
    MleResult mle = estimate_mle(data, MdpShape::of(shape_source), shape_source.gamma,
                                 shape_source.r_max);
    ErrorTable errors = build_error_table(error_kind_from_name(args.error_kind), mle.counts,
                                          args.delta, args.n_wedge, args.epsilon);

    long long sentinel_violations = 0;
    double kappa = args.kappa;
    if (kappa < 0.0) kappa = estimate_kappa(mle.mdp, baseline, errors, &sentinel_violations);

    std::vector<long long> state_counts(static_cast<size_t>(mle.counts.n_states), 0);
    for (int x = 0; x < mle.counts.n_states; ++x) {
        state_counts[static_cast<size_t>(x)] = mle.counts.state_count(x);
    }
    // When the estimated contraction constant violates kappa * gamma < 1 the
    // improvement penalty diverges, so report it as infinite instead of failing;
    // the other two bounds do not depend on kappa.
    bool kappa_valid = kappa * shape_source.gamma < 1.0;
    BoundReport report = bound_report(args.epsilon, shape_source.gamma, shape_source.v_max(),
                                      kappa_valid ? kappa : 0.0, state_counts, args.delta);
    report.kappa_hat = kappa;
    if (!kappa_valid) {
        report.theorem2_penalty = args.epsilon > 0.0
                                      ? std::numeric_limits<double>::infinity()
                                      : 0.0;
    }

    json j;
    j["epsilon"] = args.epsilon;
    j["gamma"] = shape_source.gamma;
    j["v_max"] = shape_source.v_max();
    j["delta"] = args.delta;
    j["error_kind"] = args.error_kind;
    j["kappa_hat"] = report.kappa_hat;
    j["sentinel_violations"] = sentinel_violations;
    j["theorem1_bound"] = report.theorem1_bound;
    j["theorem2_penalty"] = finite_or_inf(report.theorem2_penalty);
    json divergence = json::array();
    for (double v : report.visit_divergence_bound) divergence.push_back(finite_or_inf(v));
    j["visit_divergence_bound"] = std::move(divergence);
    atomic_write_text(args.out, j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safe policy improvement toolkit for tabular batch reinforcement learning"};
    app.require_subcommand(1);

    GenerateMdpArgs gm;
    GenerateBaselineArgs gb;
    GenerateDatasetArgs gd;
    TrainArgs tr;
    EvaluateArgs ev;
    BenchmarkArgs bm;
    AggregateArgs ag;
    BoundsArgs bo;
    std::string config_path;

    CLI::App* c_gm = app.add_subcommand("generate-mdp", "Sample a random goal MDP");
    auto* gm_cfg = c_gm->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* gm_seed = c_gm->add_option("--seed", gm.seed, "Generator seed");
    auto* gm_out = c_gm->add_option("--out", gm.out, "Output MDP JSON path");
    auto* gm_sg = c_gm->add_option("--second-goal-out", gm.second_goal_out,
                                   "Also write the two-goal evaluation MDP here");
    auto* gm_ns = c_gm->add_option("--n-states", gm.n_states, "Number of states");
    auto* gm_na = c_gm->add_option("--n-actions", gm.n_actions, "Number of actions");
    auto* gm_cn = c_gm->add_option("--connectivity", gm.connectivity, "Successors per (x,a)");
    auto* gm_gm = c_gm->add_option("--gamma", gm.gamma, "Discount factor");

    CLI::App* c_gb = app.add_subcommand("generate-baseline", "Build a baseline of target quality");
    auto* gb_cfg = c_gb->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* gb_mdp = c_gb->add_option("--mdp", gb.mdp_path, "MDP JSON path");
    auto* gb_eta = c_gb->add_option("--eta", gb.eta, "Target quality in (0,1)");
    auto* gb_seed = c_gb->add_option("--seed", gb.seed, "Randomization seed");
    auto* gb_out = c_gb->add_option("--out", gb.out, "Output policy JSON path");

    CLI::App* c_gd = app.add_subcommand("generate-dataset", "Sample trajectories under a policy");
    auto* gd_cfg = c_gd->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* gd_mdp = c_gd->add_option("--mdp", gd.mdp_path, "MDP JSON path");
    auto* gd_pol = c_gd->add_option("--policy", gd.policy_path, "Behaviour policy JSON path");
    auto* gd_n = c_gd->add_option("--n-trajectories", gd.n_trajectories, "Episode count");
    auto* gd_h = c_gd->add_option("--horizon-cap", gd.horizon_cap, "Per-episode step cap");
    auto* gd_seed = c_gd->add_option("--seed", gd.seed, "Sampling seed");
    auto* gd_conv = c_gd->add_option("--reward-convention", gd.convention,
                                     "goal-entry or reward-table");
    auto* gd_out = c_gd->add_option("--out", gd.out, "Output dataset CSV path");

    CLI::App* c_tr = app.add_subcommand(
        "train", "Train a policy from a dataset (the --mdp file contributes shape metadata, gamma "
                 "and r_max only; dynamics come from the data)");
    auto* tr_cfg = c_tr->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* tr_mdp = c_tr->add_option("--mdp", tr.mdp_path, "MDP JSON path (shape metadata)");
    auto* tr_base = c_tr->add_option("--baseline", tr.baseline_path, "Baseline policy JSON path");
    auto* tr_data = c_tr->add_option("--data", tr.data_path, "Dataset CSV path");
    auto* tr_algo = c_tr->add_option("--algo", tr.algo,
                                     "basic-rl | ramdp | pi-b-spibb | pi-leq-b-spibb | "
                                     "exact-soft-spibb | approx-soft-spibb (append -1step for the "
                                     "one-step soft variants)");
    auto* tr_out = c_tr->add_option("--out", tr.out, "Output policy JSON path");
    auto* tr_eps = c_tr->add_option("--epsilon", tr.epsilon, "Per-state error budget");
    auto* tr_nw = c_tr->add_option("--n-wedge", tr.n_wedge, "Bootstrap count threshold");
    auto* tr_ka = c_tr->add_option("--kappa-adj", tr.kappa_adj, "Reward adjustment coefficient");
    auto* tr_dl = c_tr->add_option("--delta", tr.delta, "Error-bound confidence parameter");
    auto* tr_ek = c_tr->add_option("--error-kind", tr.error_kind,
                                   "hoeffding-p | hoeffding-q | inverse-sqrt | spibb-equivalent");
    auto* tr_os = c_tr->add_flag("--one-step", tr.one_step, "Single improvement pass");
    auto* tr_gm = c_tr->add_option("--gamma", tr.gamma, "Discount override (default: MDP file)");

    CLI::App* c_ev = app.add_subcommand("evaluate", "Exact policy evaluation on an MDP");
    auto* ev_cfg = c_ev->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* ev_mdp = c_ev->add_option("--mdp", ev.mdp_path, "MDP JSON path");
    auto* ev_pol = c_ev->add_option("--policy", ev.policy_path, "Policy JSON path");
    auto* ev_out = c_ev->add_option("--out", ev.out, "Optional value report JSON path");

    CLI::App* c_bm = app.add_subcommand("benchmark", "Run the randomized-MDP sweep");
    auto* bm_cfg = c_bm->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* bm_ns = c_bm->add_option("--n-states", bm.n_states, "Number of states");
    auto* bm_na = c_bm->add_option("--n-actions", bm.n_actions, "Number of actions");
    auto* bm_cn = c_bm->add_option("--connectivity", bm.connectivity, "Successors per (x,a)");
    auto* bm_gm = c_bm->add_option("--gamma", bm.gamma, "Discount factor");
    auto* bm_eta = c_bm->add_option("--eta", bm.eta_list, "Baseline quality levels (repeatable)");
    auto* bm_sz = c_bm->add_option("--size", bm.sizes, "Dataset sizes (repeatable or comma list)")
                      ->delimiter(',');
    auto* bm_sd = c_bm->add_option("--seeds", bm.n_seeds, "Number of instances");
    auto* bm_ms = c_bm->add_option("--master-seed", bm.master_seed, "Master seed");
    auto* bm_al = c_bm->add_option("--algo", bm.algos,
                                   "Algorithm spec name[:h1,h2,...] (repeatable)");
    auto* bm_hz = c_bm->add_option("--horizon-cap", bm.horizon_cap, "Per-episode step cap");
    auto* bm_ek = c_bm->add_option("--error-kind", bm.error_kind,
                                   "hoeffding-p | hoeffding-q | inverse-sqrt");
    auto* bm_dl = c_bm->add_option("--delta", bm.delta, "Error-bound confidence parameter");
    auto* bm_th = c_bm->add_option("--threads", bm.threads,
                                   "Worker threads (0 = hardware concurrency; the "
                                   "SOFT_SPIBB_THREADS environment variable caps this)");
    auto* bm_out = c_bm->add_option("--out", bm.out, "Output run-records CSV path");

    CLI::App* c_ag = app.add_subcommand("aggregate", "Aggregate run records to mean and CVaR");
    auto* ag_cfg = c_ag->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* ag_in = c_ag->add_option("records", ag.records_path, "Run-records CSV path");
    auto* ag_lv = c_ag->add_option("--level", ag.levels, "CVaR level in (0,100] (repeatable)");
    auto* ag_out = c_ag->add_option("--out", ag.out, "Output CSV path (stdout when omitted)");

    CLI::App* c_bo = app.add_subcommand("bounds", "Compute safety bounds for a dataset + baseline");
    auto* bo_cfg = c_bo->add_option("--config", config_path, "JSON config supplying flag defaults");
    auto* bo_mdp = c_bo->add_option("--mdp", bo.mdp_path, "MDP JSON path (shape metadata)");
    auto* bo_base = c_bo->add_option("--baseline", bo.baseline_path, "Baseline policy JSON path");
    auto* bo_data = c_bo->add_option("--data", bo.data_path, "Dataset CSV path");
    auto* bo_eps = c_bo->add_option("--epsilon", bo.epsilon, "Per-state error budget");
    auto* bo_dl = c_bo->add_option("--delta", bo.delta, "Error-bound confidence parameter");
    auto* bo_ek = c_bo->add_option("--error-kind", bo.error_kind,
                                   "hoeffding-p | hoeffding-q | inverse-sqrt | spibb-equivalent");
    auto* bo_nw = c_bo->add_option("--n-wedge", bo.n_wedge, "Bootstrap count threshold");
    auto* bo_kp = c_bo->add_option("--kappa", bo.kappa, "Contraction constant override");
    auto* bo_out = c_bo->add_option("--out", bo.out, "Output report JSON path");

    c_gm->callback([&] {
        json cfg = load_config_doc(config_path, "generate-mdp");
        merge(cfg, gm_seed, "seed", gm.seed);
        merge(cfg, gm_out, "out", gm.out);
        merge(cfg, gm_sg, "second_goal_out", gm.second_goal_out);
        merge(cfg, gm_ns, "n_states", gm.n_states);
        merge(cfg, gm_na, "n_actions", gm.n_actions);
        merge(cfg, gm_cn, "connectivity", gm.connectivity);
        merge(cfg, gm_gm, "gamma", gm.gamma);
        (void)gm_cfg;
        run_generate_mdp(gm);
    });
    c_gb->callback([&] {
        json cfg = load_config_doc(config_path, "generate-baseline");
        merge(cfg, gb_mdp, "mdp", gb.mdp_path);
        merge(cfg, gb_eta, "eta", gb.eta);
        merge(cfg, gb_seed, "seed", gb.seed);
        merge(cfg, gb_out, "out", gb.out);
        (void)gb_cfg;
        run_generate_baseline(gb);
    });
    c_gd->callback([&] {
        json cfg = load_config_doc(config_path, "generate-dataset");
        merge(cfg, gd_mdp, "mdp", gd.mdp_path);
        merge(cfg, gd_pol, "policy", gd.policy_path);
        merge(cfg, gd_n, "n_trajectories", gd.n_trajectories);
        merge(cfg, gd_h, "horizon_cap", gd.horizon_cap);
        merge(cfg, gd_seed, "seed", gd.seed);
        merge(cfg, gd_conv, "reward_convention", gd.convention);
        merge(cfg, gd_out, "out", gd.out);
        (void)gd_cfg;
        run_generate_dataset(gd);
    });
    c_tr->callback([&] {
        json cfg = load_config_doc(config_path, "train");
        merge(cfg, tr_mdp, "mdp", tr.mdp_path);
        merge(cfg, tr_base, "baseline", tr.baseline_path);
        merge(cfg, tr_data, "data", tr.data_path);
        merge(cfg, tr_algo, "algo", tr.algo);
        merge(cfg, tr_out, "out", tr.out);
        merge(cfg, tr_eps, "epsilon", tr.epsilon);
        merge(cfg, tr_nw, "n_wedge", tr.n_wedge);
        merge(cfg, tr_ka, "kappa_adj", tr.kappa_adj);
        merge(cfg, tr_dl, "delta", tr.delta);
        merge(cfg, tr_ek, "error_kind", tr.error_kind);
        merge(cfg, tr_os, "one_step", tr.one_step);
        merge(cfg, tr_gm, "gamma", tr.gamma);
        run_train(tr);
    });
    c_ev->callback([&] {
        json cfg = load_config_doc(config_path, "evaluate");
        merge(cfg, ev_mdp, "mdp", ev.mdp_path);
        merge(cfg, ev_pol, "policy", ev.policy_path);
        merge(cfg, ev_out, "out", ev.out);
        (void)ev_cfg;
        run_evaluate(ev);
    });
    c_bm->callback([&] {
        json cfg = load_config_doc(config_path, "benchmark");
        merge(cfg, bm_ns, "n_states", bm.n_states);
        merge(cfg, bm_na, "n_actions", bm.n_actions);
        merge(cfg, bm_cn, "connectivity", bm.connectivity);
        merge(cfg, bm_gm, "gamma", bm.gamma);
        merge(cfg, bm_eta, "eta", bm.eta_list);
        merge(cfg, bm_sz, "sizes", bm.sizes);
        merge(cfg, bm_sd, "seeds", bm.n_seeds);
        merge(cfg, bm_ms, "master_seed", bm.master_seed);
        merge(cfg, bm_al, "algos", bm.algos);
        merge(cfg, bm_hz, "horizon_cap", bm.horizon_cap);
        merge(cfg, bm_ek, "error_kind", bm.error_kind);
        merge(cfg, bm_dl, "delta", bm.delta);
        merge(cfg, bm_th, "threads", bm.threads);
        merge(cfg, bm_out, "out", bm.out);
        (void)bm_cfg;
        run_benchmark_command(bm);
    });
    c_ag->callback([&] {
        json cfg = load_config_doc(config_path, "aggregate");
        merge(cfg, ag_in, "records", ag.records_path);
        merge(cfg, ag_lv, "levels", ag.levels);
        merge(cfg, ag_out, "out", ag.out);
        (void)ag_cfg;
        run_aggregate(ag);
    });
    c_bo->callback([&] {
        json cfg = load_config_doc(config_path, "bounds");
        merge(cfg, bo_mdp, "mdp", bo.mdp_path);
        merge(cfg, bo_base, "baseline", bo.baseline_path);
        merge(cfg, bo_data, "data", bo.data_path);
        merge(cfg, bo_eps, "epsilon", bo.epsilon);
        merge(cfg, bo_dl, "delta", bo.delta);
        merge(cfg, bo_ek, "error_kind", bo.error_kind);
        merge(cfg, bo_nw, "n_wedge", bo.n_wedge);
        merge(cfg, bo_kp, "kappa", bo.kappa);
        merge(cfg, bo_out, "out", bo.out);
        run_bounds(bo);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "spibb: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "spibb: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
