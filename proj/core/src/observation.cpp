#include "sigfolio/observation.hpp"

#include <stdexcept>

namespace sigfolio {

void WindowConfig::validate() const {
    // Two valid convolutions (kernels 6 then 5) need at least 6 + 5 - 1 days.
    if (window < 10) {
        throw std::invalid_argument("observation window must span at least 10 days");
    }
}

std::size_t signal_channel_count(const WindowConfig& config, std::size_t num_experts) {
    return config.signal_mode == SignalMode::PerExpert ? 4 * num_experts : 5;
}

std::size_t total_channel_count(const WindowConfig& config, std::size_t num_experts) {
    return kPriceChannels + signal_channel_count(config, num_experts);
}

std::vector<std::string> channel_layout(const WindowConfig& config,
                                        const std::vector<std::string>& expert_ids) {
    std::vector<std::string> names{"open", "high", "low", "close", "volume"};
    if (config.signal_mode == SignalMode::PerExpert) {
        for (const std::string& expert : expert_ids) {
            names.push_back("expert:" + expert + ":expected_return");
            names.push_back("expert:" + expert + ":expected_risk");
            names.push_back("expert:" + expert + ":instant_return");
            names.push_back("expert:" + expert + ":status");
        }
    } else {
        names.push_back("signals:active_count");
        names.push_back("signals:mean_expected_return");
        names.push_back("signals:mean_expected_risk");
        names.push_back("signals:mean_instant_return");
        names.push_back("signals:mean_status");
    }
    return names;
}

Observation build_observation(const PricePanel& panel,
                              const SignalTrackSet& tracks,
                              std::size_t day_index,
                              const PortfolioVector& prev_weights,
                              const WindowConfig& config) {
    config.validate();
    const std::size_t window = config.window;
    if (day_index >= panel.num_days()) {
        throw std::invalid_argument("observation day is past the calendar end");
    }
    if (day_index + 1 < window) {
        throw std::invalid_argument("not enough history before day " +
                                    std::to_string(day_index) + " for a " +
                                    std::to_string(window) + "-day window");
    }
    const std::size_t m = panel.num_symbols();
    if (prev_weights.size() != m + 1) {
        throw std::invalid_argument("previous weights do not match the panel's symbol count");
    }

    const std::size_t num_experts = tracks.num_experts();
    const std::size_t channels = total_channel_count(config, num_experts);
    const std::size_t first_day = day_index + 1 - window;

    Observation obs;
    obs.num_symbols = m;
    obs.channels = channels;
    obs.window = window;
    obs.tensor.assign(m * channels * window, 0.0);
    obs.prev_weights = prev_weights.values();
    obs.day_index = day_index;
    obs.as_of = panel.calendar()[day_index];

    auto slot = [&](std::size_t s, std::size_t c, std::size_t t) -> double& {
        return obs.tensor[(s * channels + c) * window + t];
    };

    for (std::size_t s = 0; s < m; ++s) {
        const double anchor = panel.close(s, day_index);
        double volume_sum = 0.0;
        for (std::size_t t = 0; t < window; ++t) {
            volume_sum += panel.volume(s, first_day + t);
        }
        const double volume_mean = volume_sum / static_cast<double>(window);

        for (std::size_t t = 0; t < window; ++t) {
            const std::size_t d = first_day + t;
            slot(s, 0, t) = panel.open(s, d) / anchor;
            slot(s, 1, t) = panel.high(s, d) / anchor;
            slot(s, 2, t) = panel.low(s, d) / anchor;
            slot(s, 3, t) = panel.close(s, d) / anchor;
            slot(s, 4, t) = volume_mean > 0.0 ? panel.volume(s, d) / volume_mean : 0.0;
        }

        if (config.signal_mode == SignalMode::PerExpert) {
            for (std::size_t e = 0; e < num_experts; ++e) {
                const SignalTrack* track = tracks.find(e, s);
                if (track == nullptr) {
                    continue;  // channels stay zero
                }
                const std::size_t base = kPriceChannels + 4 * e;
                for (std::size_t t = 0; t < window; ++t) {
                    const std::size_t d = first_day + t;
                    if (track->active[d]) {
                        slot(s, base + 0, t) = track->expected_return[d] / 100.0;
                        slot(s, base + 1, t) = track->expected_risk[d] / 100.0;
                        slot(s, base + 2, t) = track->instant_return[d];
                    }
                    slot(s, base + 3, t) = static_cast<double>(track->status[d]);
                }
            }
        } else {
            for (std::size_t t = 0; t < window; ++t) {
                const std::size_t d = first_day + t;
                double active_count = 0.0;
                double ret_sum = 0.0;
                double risk_sum = 0.0;
                double instant_sum = 0.0;
                double status_sum = 0.0;
                double tracked = 0.0;
                for (std::size_t e = 0; e < num_experts; ++e) {
                    const SignalTrack* track = tracks.find(e, s);
                    if (track == nullptr) {
                        continue;
                    }
                    tracked += 1.0;
                    status_sum += static_cast<double>(track->status[d]);
                    if (track->active[d]) {
                        active_count += 1.0;
                        ret_sum += track->expected_return[d] / 100.0;
                        risk_sum += track->expected_risk[d] / 100.0;
                        instant_sum += track->instant_return[d];
                    }
                }
                slot(s, kPriceChannels + 0, t) = active_count;
                if (active_count > 0.0) {
                    slot(s, kPriceChannels + 1, t) = ret_sum / active_count;
                    slot(s, kPriceChannels + 2, t) = risk_sum / active_count;
                    slot(s, kPriceChannels + 3, t) = instant_sum / active_count;
                }
                if (tracked > 0.0) {
                    slot(s, kPriceChannels + 4, t) = status_sum / tracked;
                }
            }
        }
    }

    return obs;
}

}  // namespace sigfolio
