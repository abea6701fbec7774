#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sigfolio/observation.hpp"
#include "sigfolio/panel.hpp"
#include "sigfolio/portfolio_math.hpp"
#include "sigfolio/random.hpp"
#include "sigfolio/signals.hpp"

namespace sigfolio {

enum class DoneReason {
    None,
    DataExhausted,      // no next day in range
    MinProfitBreached,  // value fell more than |min_profit| below the start
    DrawdownBreached,   // value fell more than |max_drawdown| below the episode max
};

const char* to_string(DoneReason reason);

struct EnvConfig {
    CommissionSchedule fees;
    WindowConfig window;
    double min_profit = -0.1;
    double max_drawdown = -0.2;
    double initial_value = 1.0;
    // Training keeps the risk rules on; evaluation usually turns them off so
    // a run spans the whole range.
    bool termination_rules_enabled = true;

    void validate() const;
};

struct PortfolioState {
    double value = 0.0;
    PortfolioVector weights;
    double episode_start_value = 0.0;
    double episode_max_value = 0.0;
    std::size_t day_index = 0;
    bool done = false;
    DoneReason done_reason = DoneReason::None;
};

struct EpisodeStep {
    std::size_t day_index;  // day the action was decided on
    std::vector<double> action_weights;
    double mu;
    double rate_of_return;
    double log_return;
    double value;  // after the step
};

struct EpisodeTrace {
    std::vector<EpisodeStep> steps;
    DoneReason terminal = DoneReason::None;
    double initial_value = 0.0;

    // One row per step: day,value,mu,rho,log_return,w_0..w_m; the terminal
    // reason goes into a trailing '#' comment line.
    void write_csv(std::ostream& out) const;
};

// Map raw action scores onto the simplex with a shift-invariant softmax.
PortfolioVector action_to_weights(std::span<const double> raw);

// Daily episodic simulator over an immutable panel and signal tracks.
// Actions decided on day d execute against the d -> d+1 close-to-close move;
// rewards are the fee-aware log returns. Operates on day indices in
// [day_lo, day_hi]; stepping past day_hi ends the episode.
class TradingEnv {
  public:
    TradingEnv(const PricePanel& panel,
               const SignalTrackSet& tracks,
               EnvConfig config,
               std::size_t day_lo,
               std::size_t day_hi);

    // Earliest/latest day an episode may start on.
    std::size_t min_start_day() const;
    std::size_t max_start_day() const { return day_hi_ - 1; }

    Observation reset(std::size_t start_day);
    Observation reset_random(Rng& rng);

    struct StepOutcome {
        Observation observation;
        double reward;
        bool done;
        DoneReason reason;
    };
    StepOutcome step(std::span<const double> raw_action);

    const PortfolioState& state() const { return state_; }
    const EpisodeTrace& trace() const { return trace_; }
    const PricePanel& panel() const { return panel_; }
    const EnvConfig& config() const { return config_; }

  private:
    Observation observe() const;

    const PricePanel& panel_;
    const SignalTrackSet& tracks_;
    EnvConfig config_;
    std::size_t day_lo_;
    std::size_t day_hi_;
    PortfolioState state_;
    EpisodeTrace trace_;
    bool started_ = false;
};

}  // namespace sigfolio
