#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigfolio/observation.hpp"

namespace sigfolio {

// Shared-weight temporal network: every stock runs through the same two
// valid 1-D convolutions (kernel lengths 6 then 5, tanh between), the
// flattened per-stock features are concatenated with the previous portfolio
// vector, and a tanh trunk feeds two linear heads: m+1 action scores and a
// scalar value estimate.
struct NetConfig {
    std::size_t num_symbols = 0;
    std::size_t input_channels = 0;
    std::size_t window = 60;
    std::size_t conv1_channels = 2;
    std::size_t conv1_kernel = 6;
    std::size_t conv2_channels = 20;
    std::size_t conv2_kernel = 5;
    std::size_t hidden = 64;

    std::size_t conv1_out_len() const { return window - conv1_kernel + 1; }
    std::size_t conv2_out_len() const { return conv1_out_len() - conv2_kernel + 1; }
    std::size_t feature_size() const { return conv2_channels * conv2_out_len(); }
    std::size_t trunk_input_size() const {
        return num_symbols * feature_size() + num_symbols + 1;
    }
    std::size_t action_size() const { return num_symbols + 1; }

    void validate() const;
    // Stable hex digest of every field; checkpoints must match it to load
    // into a run.
    std::string digest() const;

    bool operator==(const NetConfig&) const = default;
};

struct ParamShape {
    std::string name;
    std::vector<std::size_t> dims;

    std::size_t size() const;
};

// Named parameter groups in flat storage order.
std::vector<ParamShape> parameter_shapes(const NetConfig& config);
std::size_t parameter_count(const NetConfig& config);

// Immutable, versioned parameter set. Updates produce new snapshots; readers
// can share one freely across threads.
class PolicySnapshot {
  public:
    PolicySnapshot(NetConfig config, std::uint64_t version, std::vector<double> flat);

    // Fan-in scaled uniform initialization, deterministic per seed, version 0.
    static PolicySnapshot init(const NetConfig& config, std::uint64_t seed);

    const NetConfig& config() const { return config_; }
    std::uint64_t version() const { return version_; }
    std::span<const double> flat() const { return flat_; }

    // View of one named parameter group, e.g. "conv1.weight".
    std::span<const double> param(std::string_view name) const;

    PolicySnapshot with_parameters(std::vector<double> flat, std::uint64_t new_version) const;

  private:
    NetConfig config_;
    std::uint64_t version_;
    std::vector<double> flat_;
};

// Cached activations from one forward pass, enough to backpropagate exactly.
struct ForwardTrace {
    std::vector<double> input;        // m x C x W copy of the tensor
    std::vector<double> prev_weights; // m + 1
    std::vector<double> conv1_act;    // m x k1 x L1, post-tanh
    std::vector<double> conv2_act;    // m x k2 x L2, post-tanh
    std::vector<double> trunk_input;  // Din
    std::vector<double> hidden_act;   // H, post-tanh
    std::vector<double> action_scores;
    double value = 0.0;
};

struct ForwardResult {
    std::vector<double> action_scores;  // unbounded reals; softmax happens downstream
    double value;
    ForwardTrace trace;
};

ForwardResult forward(const PolicySnapshot& snapshot, const Observation& obs);

// Gradients of a scalar loss with the given output gradients, laid out
// exactly like the snapshot's flat parameter vector.
std::vector<double> backward(const PolicySnapshot& snapshot,
                             const ForwardTrace& trace,
                             std::span<const double> grad_scores,
                             double grad_value);

// Binary checkpoint: a JSON manifest (config digest, version, named shapes)
// followed by the flat parameters as little-endian 64-bit floats. Round
// trips are bit-exact.
void save_checkpoint(const PolicySnapshot& snapshot, const std::filesystem::path& path);
PolicySnapshot load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> checkpoint_bytes(const PolicySnapshot& snapshot);
PolicySnapshot snapshot_from_bytes(std::span<const std::uint8_t> bytes);

}  // namespace sigfolio
