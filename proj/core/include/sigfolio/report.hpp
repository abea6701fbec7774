#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sigfolio/policy_net.hpp"
#include "sigfolio/ppo.hpp"
#include "sigfolio/signals.hpp"
#include "sigfolio/trading_env.hpp"

namespace sigfolio {

// Realized outcome of one expert's advice: mean and best signal profit over
// the resolved (post-overlap) records whose close falls in the report range.
struct ExpertProfit {
    std::string expert_id;
    std::size_t closed_signals = 0;
    double average_profit = 0.0;  // fraction, e.g. 0.72 for +72%
    double max_profit = 0.0;
};

// Mean realized return of one expert's resolved signals, close-to-close.
// Empty optional when the expert closed no signals in the range.
std::optional<ExpertProfit> expert_baseline(const std::vector<SignalRecord>& records,
                                            const PricePanel& panel,
                                            const std::string& expert_id,
                                            std::size_t day_lo,
                                            std::size_t day_hi,
                                            OverlapScope scope = OverlapScope::SameExpert);

struct EvaluationReport {
    std::vector<double> window_gains;  // p_f/p_0 - 1 per evaluation period
    std::vector<EpisodeTrace> window_traces;
    double average_gain = 0.0;
    double max_gain = 0.0;
    double min_gain = 0.0;

    std::vector<ExpertProfit> expert_profits;  // experts with >= 1 closed signal
    std::optional<std::string> best_expert_id;
    double best_expert_average = 0.0;
    double best_expert_max = 0.0;

    // Agent average gain / best expert average profit, and agent max gain /
    // best expert's best signal. Unset when the denominator is not positive.
    std::optional<double> average_gain_ratio;
    std::optional<double> max_gain_ratio;
};

// Deterministic greedy evaluation (the policy's score means, no sampling)
// over [day_lo, day_hi], split into consecutive windows of eval_window days
// (one whole-range window when the range is shorter). Each window runs an
// independent episode from all-cash.
EvaluationReport evaluate_policy(const PricePanel& panel,
                                 const SignalTrackSet& tracks,
                                 const std::vector<SignalRecord>& records,
                                 const PolicySnapshot& snapshot,
                                 const EnvConfig& env_config,
                                 std::size_t day_lo,
                                 std::size_t day_hi,
                                 std::size_t eval_window,
                                 OverlapScope scope = OverlapScope::SameExpert);

// Plot-ready tables.
void write_gain_table(const EvaluationReport& report, std::ostream& out);
void write_expert_table(const EvaluationReport& report, std::ostream& out);
void write_equity_curves(const EvaluationReport& report, std::ostream& out);
void write_summary(const EvaluationReport& report, std::ostream& out);

}  // namespace sigfolio
