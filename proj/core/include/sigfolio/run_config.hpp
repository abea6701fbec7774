#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "sigfolio/ppo.hpp"
#include "sigfolio/signals.hpp"
#include "sigfolio/trading_env.hpp"

namespace sigfolio {

// Run configuration: plain sectioned key=value text. Hyperparameter keys
// keep their canonical upper-case names (LEARNING_RATE, SGD_MINIBATCH_SIZE,
// LAMBDA, CLIP_PARAM, ROLLOUT_FRAGMENT_LENGTH, MAX_DRAWDOWN, MIN_PROFIT).
// Unknown sections or keys are rejected, and every problem in the file is
// reported at once.
struct RunConfig {
    // [data]
    std::string prices_path;
    std::string signals_path;  // optional; empty means price-only features
    std::size_t eval_days = 120;
    OverlapScope overlap_scope = OverlapScope::SameExpert;

    // [env]
    EnvConfig env;  // termination rules on (training defaults)
    bool eval_termination_rules = false;

    // [observation] merged into env.window

    // [net]
    std::size_t conv1_channels = 2;
    std::size_t conv2_channels = 20;
    std::size_t hidden = 64;

    // [ppo]
    PpoConfig ppo;

    // [run]
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::size_t checkpoint_every = 25;
    std::size_t eval_window = 120;
    std::size_t workers = 1;

    // Net config completed with the dataset-dependent dimensions.
    NetConfig make_net_config(std::size_t num_symbols, std::size_t num_experts) const;
    EnvConfig eval_env_config() const;
};

RunConfig parse_run_config(std::istream& in, const std::string& source_name);
RunConfig load_run_config(const std::filesystem::path& path);
void write_run_config_template(std::ostream& out);

}  // namespace sigfolio
