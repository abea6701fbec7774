#include "sigfolio/report.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <stdexcept>

#include "sigfolio/csv.hpp"

namespace sigfolio {

namespace {

struct ClosedSignal {
    std::string expert_id;
    double realized = 0.0;
};

// Realized close-to-close return of every resolved record closing inside
// [day_lo, day_hi]. Records outside the calendar are skipped.
std::vector<ClosedSignal> closed_signals(const std::vector<SignalRecord>& records,
                                         const PricePanel& panel,
                                         std::size_t day_lo,
                                         std::size_t day_hi,
                                         OverlapScope scope) {
    std::vector<ClosedSignal> out;
    for (const SignalRecord& record : resolve_overlaps(records, scope)) {
        const auto symbol = panel.symbol_index(record.symbol);
        if (!symbol) {
            continue;
        }
        const std::size_t start = panel.lower_bound_day(record.start_date);
        std::size_t close = panel.lower_bound_day(record.close_date);
        if (close == panel.num_days() ||
            panel.calendar()[close] != record.close_date) {
            if (close == 0) {
                continue;
            }
            --close;
        }
        if (start >= panel.num_days() || start > close) {
            continue;
        }
        if (close < day_lo || close > day_hi) {
            continue;
        }
        const double anchor = panel.close(*symbol, start);
        out.push_back(ClosedSignal{record.expert_id,
                                   (panel.close(*symbol, close) - anchor) / anchor});
    }
    return out;
}

std::vector<ExpertProfit> expert_profit_table(const std::vector<SignalRecord>& records,
                                              const PricePanel& panel,
                                              std::size_t day_lo,
                                              std::size_t day_hi,
                                              OverlapScope scope) {
    std::map<std::string, ExpertProfit> by_expert;
    for (const ClosedSignal& sig : closed_signals(records, panel, day_lo, day_hi, scope)) {
        ExpertProfit& row = by_expert[sig.expert_id];
        if (row.closed_signals == 0) {
            row.expert_id = sig.expert_id;
            row.max_profit = sig.realized;
        }
        row.average_profit += sig.realized;
        row.max_profit = std::max(row.max_profit, sig.realized);
        ++row.closed_signals;
    }
    std::vector<ExpertProfit> table;
    table.reserve(by_expert.size());
    for (auto& [id, row] : by_expert) {
        row.average_profit /= static_cast<double>(row.closed_signals);
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace

std::optional<ExpertProfit> expert_baseline(const std::vector<SignalRecord>& records,
                                            const PricePanel& panel,
                                            const std::string& expert_id,
                                            std::size_t day_lo,
                                            std::size_t day_hi,
                                            OverlapScope scope) {
    bool known = false;
    for (const SignalRecord& record : records) {
        known = known || record.expert_id == expert_id;
    }
    if (!known) {
        throw std::invalid_argument("unknown expert " + expert_id);
    }
    for (ExpertProfit& row : expert_profit_table(records, panel, day_lo, day_hi, scope)) {
        if (row.expert_id == expert_id) {
            return row;
        }
    }
    return std::nullopt;  // no closed signals in the range
}

EvaluationReport evaluate_policy(const PricePanel& panel,
                                 const SignalTrackSet& tracks,
                                 const std::vector<SignalRecord>& records,
                                 const PolicySnapshot& snapshot,
                                 const EnvConfig& env_config,
                                 std::size_t day_lo,
                                 std::size_t day_hi,
                                 std::size_t eval_window,
                                 OverlapScope scope) {
    if (eval_window < 2) {
        throw std::invalid_argument("evaluation window must span at least 2 days");
    }
    if (day_hi >= panel.num_days() || day_lo > day_hi) {
        throw std::invalid_argument("evaluation range is out of bounds");
    }

    // Consecutive whole windows; a range shorter than one window is evaluated
    // as a single period.
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    const std::size_t obs_window = env_config.window.window;
    const std::size_t effective_lo = std::max(day_lo, obs_window - 1);
    if (effective_lo + 1 > day_hi) {
        throw std::invalid_argument("evaluation range leaves no room to step");
    }
    for (std::size_t start = effective_lo; start + eval_window <= day_hi + 1;
         start += eval_window) {
        windows.emplace_back(start, start + eval_window - 1);
    }
    if (windows.empty()) {
        windows.emplace_back(effective_lo, day_hi);
    }

    EvaluationReport report;
    for (const auto& [w_lo, w_hi] : windows) {
        TradingEnv env(panel, tracks, env_config, w_lo, w_hi);
        Observation obs = env.reset(w_lo);
        while (true) {
            const ForwardResult out = forward(snapshot, obs);
            auto step = env.step(out.action_scores);  // greedy: the score means
            if (step.done) {
                break;
            }
            obs = std::move(step.observation);
        }
        report.window_gains.push_back(env.state().value / env.config().initial_value - 1.0);
        report.window_traces.push_back(env.trace());
    }

    report.average_gain = 0.0;
    report.max_gain = report.window_gains.front();
    report.min_gain = report.window_gains.front();
    for (const double gain : report.window_gains) {
        report.average_gain += gain;
        report.max_gain = std::max(report.max_gain, gain);
        report.min_gain = std::min(report.min_gain, gain);
    }
    report.average_gain /= static_cast<double>(report.window_gains.size());

    report.expert_profits = expert_profit_table(records, panel, day_lo, day_hi, scope);
    for (const ExpertProfit& row : report.expert_profits) {
        if (!report.best_expert_id || row.average_profit > report.best_expert_average) {
            report.best_expert_id = row.expert_id;
            report.best_expert_average = row.average_profit;
            report.best_expert_max = row.max_profit;
        }
    }
    if (report.best_expert_id) {
        if (report.best_expert_average > 0.0) {
            report.average_gain_ratio = report.average_gain / report.best_expert_average;
        }
        if (report.best_expert_max > 0.0) {
            report.max_gain_ratio = report.max_gain / report.best_expert_max;
        }
    }
    return report;
}

void write_gain_table(const EvaluationReport& report, std::ostream& out) {
    out << "average_gain,maximum_gain,minimum_gain\n";
    out << format_double(report.average_gain) << ',' << format_double(report.max_gain) << ','
        << format_double(report.min_gain) << "\n";
}

void write_expert_table(const EvaluationReport& report, std::ostream& out) {
    out << "expert_id,average_profit,max_profit,closed_signals\n";
    for (const ExpertProfit& row : report.expert_profits) {
        out << row.expert_id << ',' << format_double(row.average_profit) << ','
            << format_double(row.max_profit) << ',' << row.closed_signals << "\n";
    }
}

void write_equity_curves(const EvaluationReport& report, std::ostream& out) {
    out << "window,day,value\n";
    for (std::size_t w = 0; w < report.window_traces.size(); ++w) {
        for (const EpisodeStep& step : report.window_traces[w].steps) {
            out << w << ',' << step.day_index << ',' << format_double(step.value) << "\n";
        }
    }
}

void write_summary(const EvaluationReport& report, std::ostream& out) {
    out << "periods=" << report.window_gains.size() << "\n";
    out << "average_gain=" << format_double(report.average_gain) << "\n";
    out << "maximum_gain=" << format_double(report.max_gain) << "\n";
    out << "minimum_gain=" << format_double(report.min_gain) << "\n";
    if (report.best_expert_id) {
        out << "best_expert=" << *report.best_expert_id << "\n";
        out << "best_expert_average_profit=" << format_double(report.best_expert_average)
            << "\n";
        out << "best_expert_max_profit=" << format_double(report.best_expert_max) << "\n";
    } else {
        out << "best_expert=undefined\n";
    }
    out << "average_gain_ratio="
        << (report.average_gain_ratio ? format_double(*report.average_gain_ratio)
                                      : std::string("undefined"))
        << "\n";
    out << "max_gain_ratio="
        << (report.max_gain_ratio ? format_double(*report.max_gain_ratio)
                                  : std::string("undefined"))
        << "\n";
}

}  // namespace sigfolio
