#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spibb/dp.hpp"
#include "spibb/experiment.hpp"
#include "spibb/io.hpp"
#include "spibb/model.hpp"

using namespace spibb;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;

    TempDir() {
        path = fs::temp_directory_path() /
               ("spibb_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }

    static int& counter() {
        static int value = 0;
        return value;
    }
};

/// Runs the CLI with `args`, returning the exit code. stdout goes to
/// `stdout_path` when given, otherwise to /dev/null; stderr is discarded.
int run_cli(const std::string& args, const std::string& stdout_path = {}) {
    std::string command = std::string(SPIBB_CLI_PATH) + " " + args;
    command += stdout_path.empty() ? " > /dev/null" : " > " + stdout_path;
    command += " 2> /dev/null";
    int rc = std::system(command.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Shared tiny pipeline: MDP + two-goal variant + baseline + dataset.
struct Pipeline {
    TempDir dir;
    std::string mdp = dir.file("m.json");
    std::string two_goal = dir.file("m2.json");
    std::string baseline = dir.file("pi.json");
    std::string data = dir.file("d.csv");

    Pipeline() {
        REQUIRE(run_cli("generate-mdp --seed 5 --n-states 8 --n-actions 3 --connectivity 3 "
                        "--gamma 0.9 --out " + mdp + " --second-goal-out " + two_goal) == 0);
        REQUIRE(run_cli("generate-baseline --mdp " + mdp + " --eta 0.8 --seed 3 --out " +
                        baseline) == 0);
        REQUIRE(run_cli("generate-dataset --mdp " + two_goal + " --policy " + baseline +
                        " --n-trajectories 40 --horizon-cap 200 --seed 9 --out " + data) == 0);
    }
};

}  // namespace

TEST_CASE("generate-mdp is byte-for-byte deterministic") {
    TempDir dir;
    const std::string flags =
        "generate-mdp --seed 11 --n-states 8 --n-actions 3 --connectivity 3 --gamma 0.9";
    CHECK(run_cli(flags + " --out " + dir.file("a.json") + " --second-goal-out " +
                  dir.file("a2.json")) == 0);
    CHECK(run_cli(flags + " --out " + dir.file("b.json") + " --second-goal-out " +
                  dir.file("b2.json")) == 0);
    CHECK(slurp(dir.file("a.json")) == slurp(dir.file("b.json")));
    CHECK(slurp(dir.file("a2.json")) == slurp(dir.file("b2.json")));
    CHECK(slurp(dir.file("a.json")).find("\"transition\"") != std::string::npos);

    Mdp single = load_mdp(dir.file("a.json"));
    Mdp two = load_mdp(dir.file("a2.json"));
    CHECK(single.n_states == 8);
    CHECK(two.transition == single.transition);
}

TEST_CASE("a zero budget trains the baseline back byte-for-byte") {
    Pipeline p;
    for (const char* algo : {"approx-soft-spibb", "exact-soft-spibb"}) {
        std::string out = p.dir.file(std::string("trained_") + algo + ".json");
        CHECK(run_cli("train --mdp " + p.two_goal + " --baseline " + p.baseline + " --data " +
                      p.data + " --algo " + algo + " --epsilon 0 --out " + out) == 0);
        CHECK(slurp(out) == slurp(p.baseline));
    }
}

TEST_CASE("evaluate prints the value that the library computes") {
    Pipeline p;
    std::string stdout_path = p.dir.file("value.txt");
    CHECK(run_cli("evaluate --mdp " + p.two_goal + " --policy " + p.baseline, stdout_path) == 0);

    double printed = 0.0;
    {
        std::istringstream in(slurp(stdout_path));
        REQUIRE(static_cast<bool>(in >> printed));
    }
    Mdp mdp = load_mdp(p.two_goal);
    PolicyTable policy = load_policy(p.baseline);
    std::vector<double> values = policy_state_values(mdp, policy);
    CHECK(printed == values[static_cast<size_t>(mdp.initial_state)]);
}

TEST_CASE("train accepts every advertised algorithm") {
    Pipeline p;
    const std::string common = "train --mdp " + p.two_goal + " --baseline " + p.baseline +
                               " --data " + p.data + " --out " + p.dir.file("t.json");
    CHECK(run_cli(common + " --algo basic-rl") == 0);
    CHECK(run_cli(common + " --algo ramdp --kappa-adj 0.003") == 0);
    CHECK(run_cli(common + " --algo pi-b-spibb --n-wedge 5") == 0);
    CHECK(run_cli(common + " --algo pi-leq-b-spibb --n-wedge 5") == 0);
    CHECK(run_cli(common + " --algo exact-soft-spibb --epsilon 0.5 --one-step") == 0);
    CHECK(run_cli(common + " --algo approx-soft-spibb --epsilon 0.5 --error-kind hoeffding-q "
                  "--delta 0.9") == 0);
    PolicyTable trained = load_policy(p.dir.file("t.json"));
    CHECK_NOTHROW(trained.validate());
    CHECK(run_cli(common + " --algo no-such-algo") == 1);
}

TEST_CASE("aggregate reproduces the in-process reduction") {
    TempDir dir;
    std::vector<RunRecord> records;
    for (int run = 0; run < 10; ++run) {
        for (const char* algo : {"basic-rl", "ramdp"}) {
            RunRecord record;
            record.seed = static_cast<std::uint64_t>(run);
            record.eta = 0.9;
            record.n_trajectories = 50;
            record.algorithm = algo;
            record.hyperparameter = algo == std::string("ramdp") ? 0.003 : 0.0;
            record.raw_perf = 0.1 * run;
            record.normalized_perf = (algo == std::string("ramdp") ? 0.05 : -0.03) * run;
            records.push_back(record);
        }
    }
    save_run_records(records, dir.file("runs.csv"));

    CHECK(run_cli("aggregate " + dir.file("runs.csv") + " --level 1 --level 100 --out " +
                  dir.file("agg.csv")) == 0);
    std::string expected = format_aggregate_csv(aggregate_records(records, {1.0, 100.0}),
                                                {1.0, 100.0});
    CHECK(slurp(dir.file("agg.csv")) == expected);

    // Without --out the table goes to stdout.
    std::string stdout_path = dir.file("agg_stdout.csv");
    CHECK(run_cli("aggregate " + dir.file("runs.csv") + " --level 1 --level 100",
                  stdout_path) == 0);
    CHECK(slurp(stdout_path) == expected);
}

TEST_CASE("benchmark writes one record per trained run") {
    TempDir dir;
    CHECK(run_cli("benchmark --n-states 8 --n-actions 3 --connectivity 3 --gamma 0.9 "
                  "--eta 0.9 --size 10,20 --seeds 2 --master-seed 4 --threads 1 "
                  "--algo basic-rl --algo approx-soft-spibb:0.5 --out " +
                  dir.file("runs.csv")) == 0);
    std::vector<RunRecord> loaded = load_run_records(dir.file("runs.csv"));
    CHECK(loaded.size() == 8);  // 2 seeds x 2 sizes x 2 algorithms
    for (const RunRecord& record : loaded) {
        CHECK((record.algorithm == "basic-rl" || record.algorithm == "approx-soft-spibb"));
        CHECK(record.eta == 0.9);
    }
}

TEST_CASE("bounds emits the report fields") {
    Pipeline p;
    std::string out = p.dir.file("bounds.json");
    CHECK(run_cli("bounds --mdp " + p.two_goal + " --baseline " + p.baseline + " --data " +
                  p.data + " --epsilon 0.5 --delta 0.9 --out " + out) == 0);
    std::string text = slurp(out);
    for (const char* key : {"kappa_hat", "theorem1_bound", "theorem2_penalty",
                            "visit_divergence_bound", "sentinel_violations"}) {
        CHECK(text.find(key) != std::string::npos);
    }
}

TEST_CASE("config files supply defaults and flags override them") {
    Pipeline p;
    // The config names a wrong policy path; the flag must win.
    std::string config = p.dir.file("cfg.json");
    std::ofstream(config) << "{\"command\": \"evaluate\", \"mdp\": \"" << p.two_goal
                          << "\", \"policy\": \"" << p.dir.file("missing.json") << "\"}\n";
    CHECK(run_cli("evaluate --config " + config + " --policy " + p.baseline) == 0);

    // With no override the config's bad path is used and loading fails.
    CHECK(run_cli("evaluate --config " + config) == 1);

    // A config written for one command is rejected by another.
    CHECK(run_cli("train --config " + config) == 1);
}

TEST_CASE("failures map to the documented exit codes") {
    TempDir dir;
    CHECK(run_cli("") == 1);                        // subcommand required
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("generate-mdp --bogus-flag 1 --out " + dir.file("m.json")) == 1);
    CHECK(run_cli("evaluate --mdp " + dir.file("absent.json") + " --policy " +
                  dir.file("absent2.json")) == 1);
    CHECK(run_cli("generate-mdp --seed 1 --n-states 6 --n-actions 2 --connectivity 2 "
                  "--out /nonexistent_spibb_dir/m.json") == 2);
}
