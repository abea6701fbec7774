#include "sigfolio/trading_env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "sigfolio/csv.hpp"

namespace sigfolio {

const char* to_string(DoneReason reason) {
    switch (reason) {
        case DoneReason::None: return "None";
        case DoneReason::DataExhausted: return "DataExhausted";
        case DoneReason::MinProfitBreached: return "MinProfitBreached";
        case DoneReason::DrawdownBreached: return "DrawdownBreached";
    }
    return "Unknown";
}

void EnvConfig::validate() const {
    fees.validate();
    window.validate();
    // 0 is allowed: the rule then ends the episode on any strict decline.
    if (!(min_profit <= 0.0)) {
        throw std::invalid_argument("min_profit must not be positive");
    }
    if (!(max_drawdown <= 0.0)) {
        throw std::invalid_argument("max_drawdown must not be positive");
    }
    if (!(initial_value > 0.0)) {
        throw std::invalid_argument("initial portfolio value must be positive");
    }
}

void EpisodeTrace::write_csv(std::ostream& out) const {
    out << "day,value,mu,rho,log_return";
    if (!steps.empty()) {
        for (std::size_t i = 0; i < steps.front().action_weights.size(); ++i) {
            out << ",w_" << i;
        }
    }
    out << "\n";
    for (const EpisodeStep& step : steps) {
        out << step.day_index << ',' << format_double(step.value) << ','
            << format_double(step.mu) << ',' << format_double(step.rate_of_return) << ','
            << format_double(step.log_return);
        for (const double w : step.action_weights) {
            out << ',' << format_double(w);
        }
        out << "\n";
    }
    out << "# terminal_reason=" << to_string(terminal) << "\n";
}

PortfolioVector action_to_weights(std::span<const double> raw) {
    if (raw.empty()) {
        throw std::invalid_argument("empty action vector");
    }
    double max_score = raw[0];
    for (const double x : raw) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("action scores must be finite");
        }
        max_score = std::max(max_score, x);
    }
    std::vector<double> weights(raw.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        weights[i] = std::exp(raw[i] - max_score);
        sum += weights[i];
    }
    for (double& w : weights) {
        w /= sum;
    }
    return PortfolioVector(std::move(weights));
}

TradingEnv::TradingEnv(const PricePanel& panel,
                       const SignalTrackSet& tracks,
                       EnvConfig config,
                       std::size_t day_lo,
                       std::size_t day_hi)
    : panel_(panel),
      tracks_(tracks),
      config_(std::move(config)),
      day_lo_(day_lo),
      day_hi_(day_hi),
      state_{0.0, PortfolioVector::all_cash(panel.num_symbols()), 0.0, 0.0, 0, true,
             DoneReason::None} {
    config_.validate();
    if (day_hi_ >= panel_.num_days() || day_lo_ > day_hi_) {
        throw std::invalid_argument("environment day range is out of bounds");
    }
    if (min_start_day() > max_start_day()) {
        throw std::invalid_argument("day range too short for the observation window");
    }
}

std::size_t TradingEnv::min_start_day() const {
    return std::max(day_lo_, config_.window.window - 1);
}

Observation TradingEnv::observe() const {
    return build_observation(panel_, tracks_, state_.day_index, state_.weights,
                             config_.window);
}

Observation TradingEnv::reset(std::size_t start_day) {
    if (start_day < min_start_day() || start_day > max_start_day()) {
        throw std::invalid_argument("episode start day " + std::to_string(start_day) +
                                    " outside [" + std::to_string(min_start_day()) + ", " +
                                    std::to_string(max_start_day()) + "]");
    }
    state_.value = config_.initial_value;
    state_.weights = PortfolioVector::all_cash(panel_.num_symbols());
    state_.episode_start_value = config_.initial_value;
    state_.episode_max_value = config_.initial_value;
    state_.day_index = start_day;
    state_.done = false;
    state_.done_reason = DoneReason::None;
    trace_ = EpisodeTrace{};
    trace_.initial_value = config_.initial_value;
    started_ = true;
    return observe();
}

Observation TradingEnv::reset_random(Rng& rng) {
    const std::size_t span = max_start_day() - min_start_day() + 1;
    return reset(min_start_day() + rng.uniform_index(span));
}

TradingEnv::StepOutcome TradingEnv::step(std::span<const double> raw_action) {
    if (!started_ || state_.done) {
        throw std::logic_error("step called on a finished episode; reset first");
    }

    PortfolioVector target = action_to_weights(raw_action);
    const std::size_t decision_day = state_.day_index;
    const std::size_t next_day = decision_day + 1;

    std::vector<double> relatives(panel_.num_symbols() + 1, 1.0);
    for (std::size_t s = 0; s < panel_.num_symbols(); ++s) {
        relatives[s + 1] = panel_.close(s, next_day) / panel_.close(s, decision_day);
    }
    const RelativePriceVector y(std::move(relatives));

    const StepResult result =
        step_portfolio(state_.value, state_.weights, target, y, config_.fees);

    state_.value = result.new_value;
    state_.weights = target;
    state_.day_index = next_day;
    state_.episode_max_value = std::max(state_.episode_max_value, state_.value);

    // Termination rules, checked in order: data end, loss vs start, drawdown
    // vs episode maximum.
    if (next_day >= day_hi_) {
        state_.done = true;
        state_.done_reason = DoneReason::DataExhausted;
    } else if (config_.termination_rules_enabled &&
               state_.value / state_.episode_start_value - 1.0 < config_.min_profit) {
        state_.done = true;
        state_.done_reason = DoneReason::MinProfitBreached;
    } else if (config_.termination_rules_enabled &&
               state_.value / state_.episode_max_value - 1.0 < config_.max_drawdown) {
        state_.done = true;
        state_.done_reason = DoneReason::DrawdownBreached;
    }

    trace_.steps.push_back(EpisodeStep{decision_day, target.values(), result.mu,
                                       result.rate_of_return, result.log_return,
                                       result.new_value});
    if (state_.done) {
        trace_.terminal = state_.done_reason;
    }

    return StepOutcome{observe(), result.log_return, state_.done, state_.done_reason};
}

}  // namespace sigfolio
