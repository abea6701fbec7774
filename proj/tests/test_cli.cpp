#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sigfolio/run_config.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef SIGFOLIO_CLI_PATH
#define SIGFOLIO_CLI_PATH "sigfolio"
#endif

struct CommandResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args, const fs::path& cwd) {
    const fs::path log = cwd / "cli_output.log";
    const std::string command = "cd '" + cwd.string() + "' && '" + SIGFOLIO_CLI_PATH + "' " +
                                args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(command.c_str());
    std::ifstream in(log);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return CommandResult{status == 0 ? 0 : 1, buffer.str()};
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("sigfolio_cli_" + std::to_string(std::rand()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const char* kTinyConfig =
    "[data]\n"
    "prices = data/prices.csv\n"
    "signals = data/signals.csv\n"
    "eval_days = 40\n"
    "[observation]\n"
    "window = 20\n"
    "[net]\n"
    "conv2_channels = 4\n"
    "hidden = 16\n"
    "[ppo]\n"
    "ROLLOUT_FRAGMENT_LENGTH = 20\n"
    "train_batch_size = 120\n"
    "SGD_MINIBATCH_SIZE = 60\n"
    "epochs_per_batch = 2\n"
    "max_iterations = 3\n"
    "[run]\n"
    "seed = 11\n"
    "output_dir = out\n"
    "eval_window = 30\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config template round-trips through the parser") {
    std::ostringstream out;
    sigfolio::write_run_config_template(out);
    std::istringstream in(out.str());
    const auto config = sigfolio::parse_run_config(in, "template");
    CHECK(config.ppo.learning_rate == 5e-4);
    CHECK(config.ppo.sgd_minibatch_size == 300);
    CHECK(config.ppo.lambda == 0.9);
    CHECK(config.ppo.clip_param == 0.2);
    CHECK(config.ppo.rollout_fragment_length == 60);
    CHECK(config.env.min_profit == -0.1);
    CHECK(config.env.max_drawdown == -0.2);
    CHECK(config.env.fees.purchase_rate + config.env.fees.sell_rate == 0.001);
}

TEST_CASE("config errors are collected and reported together") {
    std::istringstream in(
        "[ppo]\n"
        "LEARNING_RATE = fast\n"
        "NO_SUCH_KEY = 1\n"
        "[mystery]\n"
        "x = 1\n");
    try {
        sigfolio::parse_run_config(in, "bad.ini");
        FAIL("expected a config error");
    } catch (const std::exception& ex) {
        const std::string what = ex.what();
        CHECK(what.find("4 config error(s)") != std::string::npos);  // incl. the stray key
        CHECK(what.find("LEARNING_RATE") != std::string::npos);
        CHECK(what.find("NO_SUCH_KEY") != std::string::npos);
        CHECK(what.find("mystery") != std::string::npos);
    }
}

TEST_CASE("synth is deterministic per seed") {
    TempDir dir;
    CHECK(run_cli("synth --out-dir a --stocks 2 --days 40 --experts 1 --seed 5", dir.path)
              .exit_code == 0);
    CHECK(run_cli("synth --out-dir b --stocks 2 --days 40 --experts 1 --seed 5", dir.path)
              .exit_code == 0);
    CHECK(slurp(dir.path / "a/prices.csv") == slurp(dir.path / "b/prices.csv"));
    CHECK(slurp(dir.path / "a/signals.csv") == slurp(dir.path / "b/signals.csv"));
}

TEST_CASE("missing price file is reported by name") {
    TempDir dir;
    std::ofstream(dir.path / "run.ini") << "[data]\nprices = nowhere/prices.csv\n";
    const auto result = run_cli("train --config run.ini", dir.path);
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("nowhere/prices.csv") != std::string::npos);
}

TEST_CASE("malformed price rows fail with their line number") {
    TempDir dir;
    std::ofstream(dir.path / "bad.csv") << "date,symbol,open,high,low,close,volume\n"
                                           "2020-01-01,AAA,100,101,99,100,10\n"
                                           "2020-01-02,AAA,100,99,98,100,10\n";  // high < close
    const auto result = run_cli("ingest-prices --input bad.csv", dir.path);
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("bad.csv:3") != std::string::npos);
}

TEST_CASE("train, evaluate and report run end to end") {
    TempDir dir;
    REQUIRE(run_cli("synth --out-dir data --stocks 3 --days 120 --experts 2 --seed 7 "
                    "--dominant-drift 0.004",
                    dir.path)
                .exit_code == 0);
    std::ofstream(dir.path / "run.ini") << kTinyConfig;

    const auto train = run_cli("train --config run.ini", dir.path);
    CHECK(train.exit_code == 0);
    CHECK(fs::exists(dir.path / "out/final.ckpt"));
    CHECK(fs::exists(dir.path / "out/metrics.csv"));
    CHECK(fs::exists(dir.path / "out/channels.txt"));

    const std::string checkpoint_before = slurp(dir.path / "out/final.ckpt");
    const auto evaluate =
        run_cli("evaluate --config run.ini --checkpoint out/final.ckpt", dir.path);
    CHECK(evaluate.exit_code == 0);
    CHECK(evaluate.output.find("average_gain=") != std::string::npos);
    CHECK(fs::exists(dir.path / "out/evaluation/summary.txt"));
    CHECK(fs::exists(dir.path / "out/evaluation/expert_profits.csv"));
    // Evaluation reads but never rewrites the checkpoint or data.
    CHECK(slurp(dir.path / "out/final.ckpt") == checkpoint_before);

    const auto report = run_cli("report --run-dir out", dir.path);
    CHECK(report.exit_code == 0);
    const std::string curve = slurp(dir.path / "out/report/training_curve.csv");
    CHECK(curve.starts_with("iteration,mean_reward,mean_length\n"));
    CHECK(curve.find("\n0,") != std::string::npos);
}

TEST_CASE("reference smoke run finishes inside the time budget") {
    // 5 stocks x 300 days x 20 iterations, enforced at 3x slack on the
    // 5-minute budget.
    TempDir dir;
    REQUIRE(run_cli("synth --out-dir data --stocks 5 --days 300 --experts 2 --seed 9 "
                    "--dominant-drift 0.004",
                    dir.path)
                .exit_code == 0);
    std::ofstream(dir.path / "run.ini")
        << "[data]\n"
           "prices = data/prices.csv\n"
           "signals = data/signals.csv\n"
           "eval_days = 60\n"
           "[net]\n"
           "conv2_channels = 4\n"
           "hidden = 16\n"
           "[ppo]\n"
           "ROLLOUT_FRAGMENT_LENGTH = 60\n"
           "train_batch_size = 720\n"
           "SGD_MINIBATCH_SIZE = 240\n"
           "epochs_per_batch = 4\n"
           "max_iterations = 20\n"
           "[run]\n"
           "seed = 9\n"
           "output_dir = out\n"
           "eval_window = 60\n";

    const auto start = std::chrono::steady_clock::now();
    const auto train = run_cli("train --config run.ini", dir.path);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(train.exit_code == 0);
    CHECK(seconds < 900.0);

    // Re-running from the same (config, seed, data) is byte-identical.
    const std::string first = slurp(dir.path / "out/metrics.csv");
    fs::remove_all(dir.path / "out");
    REQUIRE(run_cli("train --config run.ini", dir.path).exit_code == 0);
    CHECK(first == slurp(dir.path / "out/metrics.csv"));
}

TEST_CASE("explicit --workers 1 reproduces the in-process metrics byte for byte") {
    TempDir dir;
    REQUIRE(run_cli("synth --out-dir data --stocks 3 --days 120 --experts 2 --seed 7",
                    dir.path)
                .exit_code == 0);
    std::ofstream(dir.path / "run.ini") << kTinyConfig;

    REQUIRE(run_cli("train --config run.ini", dir.path).exit_code == 0);
    const std::string inprocess = slurp(dir.path / "out/metrics.csv");
    fs::remove_all(dir.path / "out");

    REQUIRE(run_cli("train --config run.ini --workers 1", dir.path).exit_code == 0);
    const std::string orchestrated = slurp(dir.path / "out/metrics.csv");
    CHECK(!inprocess.empty());
    CHECK(inprocess == orchestrated);
}

TEST_CASE("report on an empty metrics table emits headers only") {
    TempDir dir;
    fs::create_directories(dir.path / "run");
    std::ofstream(dir.path / "run/metrics.csv")
        << "iteration,mean_reward,mean_length,policy_loss,value_loss,entropy,version\n";
    const auto result = run_cli("report --run-dir run", dir.path);
    CHECK(result.exit_code == 0);
    CHECK(slurp(dir.path / "run/report/training_curve.csv") ==
          "iteration,mean_reward,mean_length\n");
}

TEST_CASE("evaluate refuses a checkpoint from a different configuration") {
    TempDir dir;
    REQUIRE(run_cli("synth --out-dir data --stocks 3 --days 120 --experts 2 --seed 7",
                    dir.path)
                .exit_code == 0);
    std::ofstream(dir.path / "run.ini") << kTinyConfig;
    REQUIRE(run_cli("train --config run.ini", dir.path).exit_code == 0);

    // Same data, different window: different digest.
    std::string other = kTinyConfig;
    const auto pos = other.find("window = 20");
    other.replace(pos, 11, "window = 24");
    std::ofstream(dir.path / "other.ini") << other;
    const auto result =
        run_cli("evaluate --config other.ini --checkpoint out/final.ckpt", dir.path);
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("different configuration") != std::string::npos);
}

}  // TEST_SUITE
