#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sigfolio/calendar.hpp"
#include "sigfolio/panel.hpp"
#include "sigfolio/portfolio_math.hpp"
#include "sigfolio/signals.hpp"

namespace sigfolio {

// How expert signals enter the tensor: four channels per expert, or five
// aggregate channels summarizing all experts per stock.
enum class SignalMode {
    PerExpert,
    Aggregated,
};

struct WindowConfig {
    std::size_t window = 60;
    SignalMode signal_mode = SignalMode::PerExpert;

    void validate() const;  // window must cover both convolution kernels (>= 10)
};

constexpr std::size_t kPriceChannels = 5;  // open, high, low, close, volume

std::size_t signal_channel_count(const WindowConfig& config, std::size_t num_experts);
std::size_t total_channel_count(const WindowConfig& config, std::size_t num_experts);

// Ordered channel names, e.g. "close" or "expert:E01:instant_return". Written
// next to checkpoints so a stored policy documents its own input layout.
std::vector<std::string> channel_layout(const WindowConfig& config,
                                        const std::vector<std::string>& expert_ids);

// Model input for one step: stocks x channels x window, most recent day last,
// plus the previous portfolio vector.
struct Observation {
    std::size_t num_symbols = 0;
    std::size_t channels = 0;
    std::size_t window = 0;
    std::vector<double> tensor;        // row-major (symbol, channel, day)
    std::vector<double> prev_weights;  // length num_symbols + 1
    std::size_t day_index = 0;
    Date as_of;

    double at(std::size_t symbol, std::size_t channel, std::size_t day) const {
        return tensor[(symbol * channels + channel) * window + day];
    }
    std::size_t tensor_size() const { return num_symbols * channels * window; }
};

// Assemble the observation ending at day_index. Prices are normalized per
// stock by its close on the window's last day; volume by its window mean
// (0/0 -> 0). Expected return/risk channels are fed as fractions
// (percent / 100). Requires day_index >= window - 1.
Observation build_observation(const PricePanel& panel,
                              const SignalTrackSet& tracks,
                              std::size_t day_index,
                              const PortfolioVector& prev_weights,
                              const WindowConfig& config);

}  // namespace sigfolio
