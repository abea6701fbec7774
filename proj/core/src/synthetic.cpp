#include "sigfolio/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sigfolio/random.hpp"

namespace sigfolio {

namespace {

std::string indexed_name(const char* prefix, std::size_t index, std::size_t count) {
    int width = 1;
    for (std::size_t n = count > 0 ? count - 1 : 0; n >= 10; n /= 10) {
        ++width;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, index);
    return buf;
}

}  // namespace

void SynthMarketConfig::validate() const {
    if (num_symbols < 1) {
        throw std::invalid_argument("synthetic market needs at least one symbol");
    }
    if (num_days < 2) {
        throw std::invalid_argument("synthetic market needs at least two days");
    }
    if (!(start_price > 0.0) || !(base_volume >= 0.0)) {
        throw std::invalid_argument("start price must be positive, base volume non-negative");
    }
    if (!symbol_drift.empty() && symbol_drift.size() != num_symbols) {
        throw std::invalid_argument("symbol_drift must list one value per symbol");
    }
    if (!symbol_volatility.empty() && symbol_volatility.size() != num_symbols) {
        throw std::invalid_argument("symbol_volatility must list one value per symbol");
    }
    if (volatility < 0.0) {
        throw std::invalid_argument("volatility must be non-negative");
    }
    for (const double v : symbol_volatility) {
        if (v < 0.0) {
            throw std::invalid_argument("volatility must be non-negative");
        }
    }
}

PricePanel synth_market(const SynthMarketConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t m = config.num_symbols;
    const std::size_t t = config.num_days;

    std::vector<std::string> symbols(m);
    std::vector<Date> calendar(t);
    for (std::size_t s = 0; s < m; ++s) {
        symbols[s] = indexed_name("S", s, m);
    }
    for (std::size_t d = 0; d < t; ++d) {
        calendar[d] = config.start_date.plus_days(static_cast<std::int32_t>(d));
    }

    std::vector<double> open(m * t), high(m * t), low(m * t), close(m * t), volume(m * t);
    for (std::size_t s = 0; s < m; ++s) {
        const double drift = config.symbol_drift.empty() ? config.drift : config.symbol_drift[s];
        const double vol =
            config.symbol_volatility.empty() ? config.volatility : config.symbol_volatility[s];
        Rng rng(derive_seed(seed, 0x6d61726b /* market */, s));

        double prev_close = config.start_price;
        for (std::size_t d = 0; d < t; ++d) {
            const std::size_t c = s * t + d;
            double daily_return = 0.0;
            if (d > 0) {
                daily_return = std::max(drift + vol * rng.normal(), -0.95);
            }
            const double today_close = d == 0 ? prev_close : prev_close * (1.0 + daily_return);
            const double today_open = prev_close;
            const double envelope = 0.5 * vol * std::abs(rng.normal());
            const double hi = std::max(today_open, today_close) * (1.0 + envelope);
            const double lo =
                std::min(today_open, today_close) * std::max(1.0 - envelope, 0.01);
            const double vol_noise = vol > 0.0 ? std::exp(0.3 * rng.normal()) : 1.0;

            open[c] = today_open;
            high[c] = hi;
            low[c] = lo;
            close[c] = today_close;
            volume[c] = config.base_volume * vol_noise;
            prev_close = today_close;
        }
    }

    return PricePanel(std::move(symbols), std::move(calendar), std::move(open), std::move(high),
                      std::move(low), std::move(close), std::move(volume),
                      std::vector<std::uint8_t>(m * t, 0));
}

void SynthExpertsConfig::validate() const {
    if (num_experts < 1) {
        throw std::invalid_argument("need at least one expert");
    }
    if (skill < 0.0 || skill > 1.0) {
        throw std::invalid_argument("skill must lie in [0, 1]");
    }
    if (min_horizon_days < 1 || max_horizon_days < min_horizon_days) {
        throw std::invalid_argument("horizon bounds are inconsistent");
    }
}

std::vector<SignalRecord> synth_experts(const PricePanel& panel,
                                        const SynthExpertsConfig& config,
                                        std::uint64_t seed) {
    config.validate();
    const std::size_t t = panel.num_days();
    if (t < config.min_horizon_days + 1) {
        throw std::invalid_argument("panel too short for the requested signal horizons");
    }

    std::vector<SignalRecord> records;
    records.reserve(config.num_experts * config.signals_per_expert);
    for (std::size_t e = 0; e < config.num_experts; ++e) {
        Rng rng(derive_seed(seed, 0x65787065 /* expert */, e));
        const std::string expert_id = indexed_name("E", e, config.num_experts);

        for (std::size_t k = 0; k < config.signals_per_expert; ++k) {
            // Signals are long advisories. A correct call sits on a window
            // whose realized move is up; skill sets how often that happens.
            const bool correct = rng.bernoulli(0.5 + config.skill / 2.0);

            std::size_t symbol = 0;
            std::size_t start = 0;
            std::size_t end = 0;
            double realized = 0.0;
            for (int attempt = 0; attempt < 200; ++attempt) {
                symbol = rng.uniform_index(panel.num_symbols());
                const std::size_t horizon =
                    config.min_horizon_days +
                    rng.uniform_index(config.max_horizon_days - config.min_horizon_days + 1);
                start = rng.uniform_index(t - horizon);
                end = start + horizon;
                const double anchor = panel.close(symbol, start);
                realized = (panel.close(symbol, end) - anchor) / anchor;
                if (realized != 0.0 && (realized > 0.0) == correct) {
                    break;
                }
                // One-way markets may never offer the wanted sign; the last
                // draw is then kept as is.
            }

            const double start_close = panel.close(symbol, start);
            double worst = 0.0;
            for (std::size_t d = start; d <= end; ++d) {
                worst = std::min(worst, (panel.close(symbol, d) - start_close) / start_close);
            }
            const double noise_band = (1.0 - config.skill) * config.noise_scale;

            SignalRecord record;
            record.expert_id = expert_id;
            record.symbol = panel.symbols()[symbol];
            record.start_date = panel.calendar()[start];
            record.close_date = panel.calendar()[end];
            record.expected_return =
                100.0 * (std::abs(realized) + noise_band * rng.normal());
            record.expected_risk = 100.0 * (worst + noise_band * rng.normal());
            records.push_back(std::move(record));
        }
    }
    return records;
}

}  // namespace sigfolio
