#pragma once

#include <cstdint>
#include <vector>

#include "sigfolio/calendar.hpp"
#include "sigfolio/panel.hpp"
#include "sigfolio/signals.hpp"

namespace sigfolio {

// Desk-scale synthetic market: multiplicative random-walk closes with
// consistent OHLC envelopes. Deterministic per seed. With zero volatility
// the path degenerates to close(t) = start_price * (1 + drift)^t.
struct SynthMarketConfig {
    std::size_t num_symbols = 5;
    std::size_t num_days = 300;
    double drift = 0.0;        // per-day arithmetic drift
    double volatility = 0.01;  // per-day
    std::vector<double> symbol_drift;       // optional per-symbol override
    std::vector<double> symbol_volatility;  // optional per-symbol override
    double start_price = 100.0;
    double base_volume = 1e6;
    Date start_date = Date::from_ymd(2017, 1, 2);

    void validate() const;
};

PricePanel synth_market(const SynthMarketConfig& config, std::uint64_t seed);

// Synthetic advisors over a panel. Every signal is a long advisory on some
// (symbol, window); with probability 0.5 + skill/2 the call is correct, i.e.
// it lands on a window whose realized move is up. Expected return and risk
// come from the realized path plus noise scaled by (1 - skill), in percent.
// Deterministic per seed.
struct SynthExpertsConfig {
    std::size_t num_experts = 5;
    std::size_t signals_per_expert = 40;
    double skill = 1.0;  // in [0, 1]
    std::size_t min_horizon_days = 5;
    std::size_t max_horizon_days = 20;
    double noise_scale = 0.05;  // fraction, applied as (1 - skill) * noise

    void validate() const;
};

std::vector<SignalRecord> synth_experts(const PricePanel& panel,
                                        const SynthExpertsConfig& config,
                                        std::uint64_t seed);

}  // namespace sigfolio
