#include "sigfolio/policy_net.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sigfolio/random.hpp"

namespace sigfolio {

namespace {

std::uint64_t fnv1a(std::uint64_t hash, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
        hash ^= (value >> (8 * i)) & 0xffu;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace

void NetConfig::validate() const {
    if (num_symbols < 1) {
        throw std::invalid_argument("network needs at least one symbol");
    }
    if (input_channels < 1) {
        throw std::invalid_argument("network needs at least one input channel");
    }
    if (conv1_channels < 1 || conv2_channels < 1 || hidden < 1) {
        throw std::invalid_argument("layer widths must be at least 1");
    }
    if (conv1_kernel < 1 || conv2_kernel < 1) {
        throw std::invalid_argument("kernel lengths must be at least 1");
    }
    if (window < conv1_kernel + conv2_kernel - 1) {
        throw std::invalid_argument("window too short for the two convolutions");
    }
}

std::string NetConfig::digest() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const std::size_t field :
         {num_symbols, input_channels, window, conv1_channels, conv1_kernel, conv2_channels,
          conv2_kernel, hidden}) {
        hash = fnv1a(hash, static_cast<std::uint64_t>(field));
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::size_t ParamShape::size() const {
    std::size_t n = 1;
    for (const std::size_t d : dims) {
        n *= d;
    }
    return n;
}

std::vector<ParamShape> parameter_shapes(const NetConfig& config) {
    return {
        {"conv1.weight", {config.conv1_channels, config.input_channels, config.conv1_kernel}},
        {"conv1.bias", {config.conv1_channels}},
        {"conv2.weight", {config.conv2_channels, config.conv1_channels, config.conv2_kernel}},
        {"conv2.bias", {config.conv2_channels}},
        {"trunk.weight", {config.hidden, config.trunk_input_size()}},
        {"trunk.bias", {config.hidden}},
        {"policy.weight", {config.action_size(), config.hidden}},
        {"policy.bias", {config.action_size()}},
        {"value.weight", {1, config.hidden}},
        {"value.bias", {1}},
    };
}

std::size_t parameter_count(const NetConfig& config) {
    std::size_t total = 0;
    for (const ParamShape& shape : parameter_shapes(config)) {
        total += shape.size();
    }
    return total;
}

PolicySnapshot::PolicySnapshot(NetConfig config, std::uint64_t version,
                               std::vector<double> flat)
    : config_(config), version_(version), flat_(std::move(flat)) {
    config_.validate();
    if (flat_.size() != parameter_count(config_)) {
        throw std::invalid_argument("parameter vector does not match the network config");
    }
}

PolicySnapshot PolicySnapshot::init(const NetConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(derive_seed(seed, 0x696e6974 /* init */));
    std::vector<double> flat;
    flat.reserve(parameter_count(config));
    for (const ParamShape& shape : parameter_shapes(config)) {
        // Fan-in is everything a single output entry reads.
        std::size_t fan_in = 1;
        for (std::size_t i = 1; i < shape.dims.size(); ++i) {
            fan_in *= shape.dims[i];
        }
        const double bound =
            shape.dims.size() > 1 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 0.0;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            flat.push_back(bound == 0.0 ? 0.0 : rng.uniform(-bound, bound));
        }
    }
    return PolicySnapshot(config, 0, std::move(flat));
}

std::span<const double> PolicySnapshot::param(std::string_view name) const {
    std::size_t offset = 0;
    for (const ParamShape& shape : parameter_shapes(config_)) {
        const std::size_t size = shape.size();
        if (shape.name == name) {
            return {flat_.data() + offset, size};
        }
        offset += size;
    }
    throw std::invalid_argument("unknown parameter group " + std::string(name));
}

PolicySnapshot PolicySnapshot::with_parameters(std::vector<double> flat,
                                               std::uint64_t new_version) const {
    return PolicySnapshot(config_, new_version, std::move(flat));
}

namespace {

struct ParamViews {
    std::span<const double> conv1_w, conv1_b, conv2_w, conv2_b;
    std::span<const double> trunk_w, trunk_b, policy_w, policy_b, value_w, value_b;

    explicit ParamViews(const PolicySnapshot& s)
        : conv1_w(s.param("conv1.weight")),
          conv1_b(s.param("conv1.bias")),
          conv2_w(s.param("conv2.weight")),
          conv2_b(s.param("conv2.bias")),
          trunk_w(s.param("trunk.weight")),
          trunk_b(s.param("trunk.bias")),
          policy_w(s.param("policy.weight")),
          policy_b(s.param("policy.bias")),
          value_w(s.param("value.weight")),
          value_b(s.param("value.bias")) {}
};

// Mutable spans into a flat gradient vector, same layout as the parameters.
struct GradViews {
    std::span<double> conv1_w, conv1_b, conv2_w, conv2_b;
    std::span<double> trunk_w, trunk_b, policy_w, policy_b, value_w, value_b;

    GradViews(const NetConfig& config, std::vector<double>& flat) {
        std::size_t offset = 0;
        auto take = [&](std::span<double>& view, const ParamShape& shape) {
            view = {flat.data() + offset, shape.size()};
            offset += shape.size();
        };
        const auto shapes = parameter_shapes(config);
        take(conv1_w, shapes[0]);
        take(conv1_b, shapes[1]);
        take(conv2_w, shapes[2]);
        take(conv2_b, shapes[3]);
        take(trunk_w, shapes[4]);
        take(trunk_b, shapes[5]);
        take(policy_w, shapes[6]);
        take(policy_b, shapes[7]);
        take(value_w, shapes[8]);
        take(value_b, shapes[9]);
    }
};

}  // namespace

ForwardResult forward(const PolicySnapshot& snapshot, const Observation& obs) {
    const NetConfig& cfg = snapshot.config();
    if (obs.num_symbols != cfg.num_symbols || obs.channels != cfg.input_channels ||
        obs.window != cfg.window) {
        throw std::invalid_argument("observation shape does not match the network config");
    }
    if (obs.prev_weights.size() != cfg.num_symbols + 1) {
        throw std::invalid_argument("previous weights length does not match the network");
    }

    const ParamViews p(snapshot);
    const std::size_t m = cfg.num_symbols;
    const std::size_t channels = cfg.input_channels;
    const std::size_t window = cfg.window;
    const std::size_t k1 = cfg.conv1_channels;
    const std::size_t k2 = cfg.conv2_channels;
    const std::size_t klen1 = cfg.conv1_kernel;
    const std::size_t klen2 = cfg.conv2_kernel;
    const std::size_t len1 = cfg.conv1_out_len();
    const std::size_t len2 = cfg.conv2_out_len();
    const std::size_t feature = cfg.feature_size();
    const std::size_t trunk_in = cfg.trunk_input_size();
    const std::size_t hidden = cfg.hidden;
    const std::size_t actions = cfg.action_size();

    ForwardTrace trace;
    trace.input = obs.tensor;
    trace.prev_weights = obs.prev_weights;
    trace.conv1_act.assign(m * k1 * len1, 0.0);
    trace.conv2_act.assign(m * k2 * len2, 0.0);
    trace.trunk_input.assign(trunk_in, 0.0);
    trace.hidden_act.assign(hidden, 0.0);

    for (std::size_t s = 0; s < m; ++s) {
        const double* x = trace.input.data() + s * channels * window;
        double* a1 = trace.conv1_act.data() + s * k1 * len1;
        for (std::size_t oc = 0; oc < k1; ++oc) {
            const double* w = p.conv1_w.data() + oc * channels * klen1;
            for (std::size_t t = 0; t < len1; ++t) {
                double z = p.conv1_b[oc];
                for (std::size_t ic = 0; ic < channels; ++ic) {
                    const double* xi = x + ic * window + t;
                    const double* wi = w + ic * klen1;
                    for (std::size_t k = 0; k < klen1; ++k) {
                        z += wi[k] * xi[k];
                    }
                }
                a1[oc * len1 + t] = std::tanh(z);
            }
        }

        double* a2 = trace.conv2_act.data() + s * k2 * len2;
        for (std::size_t oc = 0; oc < k2; ++oc) {
            const double* w = p.conv2_w.data() + oc * k1 * klen2;
            for (std::size_t t = 0; t < len2; ++t) {
                double z = p.conv2_b[oc];
                for (std::size_t ic = 0; ic < k1; ++ic) {
                    const double* ai = a1 + ic * len1 + t;
                    const double* wi = w + ic * klen2;
                    for (std::size_t k = 0; k < klen2; ++k) {
                        z += wi[k] * ai[k];
                    }
                }
                a2[oc * len2 + t] = std::tanh(z);
            }
        }

        // Flattened per-stock feature block.
        for (std::size_t i = 0; i < feature; ++i) {
            trace.trunk_input[s * feature + i] = a2[i];
        }
    }
    for (std::size_t i = 0; i <= m; ++i) {
        trace.trunk_input[m * feature + i] = trace.prev_weights[i];
    }

    for (std::size_t h = 0; h < hidden; ++h) {
        double z = p.trunk_b[h];
        const double* w = p.trunk_w.data() + h * trunk_in;
        for (std::size_t i = 0; i < trunk_in; ++i) {
            z += w[i] * trace.trunk_input[i];
        }
        trace.hidden_act[h] = std::tanh(z);
    }

    std::vector<double> scores(actions, 0.0);
    for (std::size_t a = 0; a < actions; ++a) {
        double z = p.policy_b[a];
        const double* w = p.policy_w.data() + a * hidden;
        for (std::size_t h = 0; h < hidden; ++h) {
            z += w[h] * trace.hidden_act[h];
        }
        scores[a] = z;
    }
    double value = p.value_b[0];
    for (std::size_t h = 0; h < hidden; ++h) {
        value += p.value_w[h] * trace.hidden_act[h];
    }

    trace.action_scores = scores;
    trace.value = value;
    return ForwardResult{std::move(scores), value, std::move(trace)};
}

std::vector<double> backward(const PolicySnapshot& snapshot,
                             const ForwardTrace& trace,
                             std::span<const double> grad_scores,
                             double grad_value) {
    const NetConfig& cfg = snapshot.config();
    const std::size_t m = cfg.num_symbols;
    const std::size_t channels = cfg.input_channels;
    const std::size_t window = cfg.window;
    const std::size_t k1 = cfg.conv1_channels;
    const std::size_t k2 = cfg.conv2_channels;
    const std::size_t klen1 = cfg.conv1_kernel;
    const std::size_t klen2 = cfg.conv2_kernel;
    const std::size_t len1 = cfg.conv1_out_len();
    const std::size_t len2 = cfg.conv2_out_len();
    const std::size_t feature = cfg.feature_size();
    const std::size_t trunk_in = cfg.trunk_input_size();
    const std::size_t hidden = cfg.hidden;
    const std::size_t actions = cfg.action_size();

    if (grad_scores.size() != actions) {
        throw std::invalid_argument("score gradient length does not match the network");
    }
    if (trace.trunk_input.size() != trunk_in || trace.hidden_act.size() != hidden ||
        trace.conv1_act.size() != m * k1 * len1 || trace.conv2_act.size() != m * k2 * len2 ||
        trace.input.size() != m * channels * window) {
        throw std::invalid_argument("forward trace does not match the network config");
    }

    const ParamViews p(snapshot);
    std::vector<double> flat(parameter_count(cfg), 0.0);
    GradViews g(cfg, flat);

    // Heads.
    std::vector<double> d_hidden(hidden, 0.0);
    for (std::size_t a = 0; a < actions; ++a) {
        const double gs = grad_scores[a];
        g.policy_b[a] += gs;
        double* gw = g.policy_w.data() + a * hidden;
        const double* w = p.policy_w.data() + a * hidden;
        for (std::size_t h = 0; h < hidden; ++h) {
            gw[h] += gs * trace.hidden_act[h];
            d_hidden[h] += gs * w[h];
        }
    }
    g.value_b[0] += grad_value;
    for (std::size_t h = 0; h < hidden; ++h) {
        g.value_w[h] += grad_value * trace.hidden_act[h];
        d_hidden[h] += grad_value * p.value_w[h];
    }

    // Trunk (tanh).
    std::vector<double> d_trunk_input(trunk_in, 0.0);
    for (std::size_t h = 0; h < hidden; ++h) {
        const double act = trace.hidden_act[h];
        const double dz = d_hidden[h] * (1.0 - act * act);
        g.trunk_b[h] += dz;
        double* gw = g.trunk_w.data() + h * trunk_in;
        const double* w = p.trunk_w.data() + h * trunk_in;
        for (std::size_t i = 0; i < trunk_in; ++i) {
            gw[i] += dz * trace.trunk_input[i];
            d_trunk_input[i] += dz * w[i];
        }
    }

    // Per-stock convolutions; gradients accumulate across stocks because the
    // kernels are shared.
    std::vector<double> d_a1(k1 * len1, 0.0);
    std::vector<double> d_z2(len2, 0.0);
    for (std::size_t s = 0; s < m; ++s) {
        const double* a1 = trace.conv1_act.data() + s * k1 * len1;
        const double* a2 = trace.conv2_act.data() + s * k2 * len2;
        const double* d_feature = d_trunk_input.data() + s * feature;
        std::fill(d_a1.begin(), d_a1.end(), 0.0);

        for (std::size_t oc = 0; oc < k2; ++oc) {
            const double* w = p.conv2_w.data() + oc * k1 * klen2;
            double* gw = g.conv2_w.data() + oc * k1 * klen2;
            for (std::size_t t = 0; t < len2; ++t) {
                const double act = a2[oc * len2 + t];
                d_z2[t] = d_feature[oc * len2 + t] * (1.0 - act * act);
                g.conv2_b[oc] += d_z2[t];
            }
            for (std::size_t ic = 0; ic < k1; ++ic) {
                const double* ai = a1 + ic * len1;
                double* d_ai = d_a1.data() + ic * len1;
                for (std::size_t t = 0; t < len2; ++t) {
                    const double dz = d_z2[t];
                    for (std::size_t k = 0; k < klen2; ++k) {
                        gw[ic * klen2 + k] += dz * ai[t + k];
                        d_ai[t + k] += dz * w[ic * klen2 + k];
                    }
                }
            }
        }

        const double* x = trace.input.data() + s * channels * window;
        for (std::size_t oc = 0; oc < k1; ++oc) {
            double* gw = g.conv1_w.data() + oc * channels * klen1;
            for (std::size_t t = 0; t < len1; ++t) {
                const double act = a1[oc * len1 + t];
                const double dz = d_a1[oc * len1 + t] * (1.0 - act * act);
                if (dz == 0.0) {
                    continue;
                }
                g.conv1_b[oc] += dz;
                for (std::size_t ic = 0; ic < channels; ++ic) {
                    const double* xi = x + ic * window + t;
                    double* gwi = gw + ic * klen1;
                    for (std::size_t k = 0; k < klen1; ++k) {
                        gwi[k] += dz * xi[k];
                    }
                }
            }
        }
    }

    return flat;
}

}  // namespace sigfolio
