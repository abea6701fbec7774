#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sigfolio/csv.hpp"
#include "sigfolio/synthetic.hpp"
#include "sigfolio/trading_env.hpp"

using namespace sigfolio;

namespace {

// Panel whose single symbol follows an explicit close path; OHLC collapsed.
PricePanel path_panel(const std::vector<double>& closes) {
    std::vector<Bar> bars;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        const Date day = Date::parse("2020-01-01").plus_days(static_cast<std::int32_t>(i));
        bars.push_back(Bar{day, "AAA", closes[i], closes[i], closes[i], closes[i], 1.0});
    }
    return fill_missing(sparse_from_bars(bars));
}

EnvConfig small_window_config() {
    EnvConfig config;
    config.window.window = 10;
    return config;
}

// Raw action that softmaxes to nearly all weight on one index.
std::vector<double> focus_action(std::size_t size, std::size_t index) {
    std::vector<double> raw(size, 0.0);
    raw[index] = 60.0;
    return raw;
}

}  // namespace

TEST_SUITE("trading-env") {

TEST_CASE("action_to_weights is a shift-invariant softmax") {
    const auto uniform = action_to_weights(std::vector<double>{1.0, 1.0, 1.0});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(uniform[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }

    const auto heavy = action_to_weights(std::vector<double>{10.0, 0.0, 0.0});
    CHECK(heavy[0] > 0.9999);

    const auto a = action_to_weights(std::vector<double>{0.3, -1.2, 2.0});
    const auto b = action_to_weights(std::vector<double>{7.3, 5.8, 9.0});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }

    CHECK_THROWS(action_to_weights(std::vector<double>{1.0, std::nan("")}));
}

TEST_CASE("reset boundaries and determinism") {
    const auto panel = synth_market({.num_symbols = 2, .num_days = 50}, 1);
    const auto tracks = SignalTrackSet::empty(2);
    TradingEnv env(panel, tracks, small_window_config(), 0, 49);

    CHECK(env.min_start_day() == 9);
    CHECK(env.max_start_day() == 48);
    CHECK_NOTHROW(env.reset(9));
    CHECK_THROWS(env.reset(8));
    CHECK_THROWS(env.reset(49));
    CHECK_THROWS(env.reset(100));

    Rng a(42);
    Rng b(42);
    TradingEnv env2(panel, tracks, small_window_config(), 0, 49);
    const auto obs_a = env.reset_random(a);
    const auto obs_b = env2.reset_random(b);
    CHECK(env.state().day_index == env2.state().day_index);
    CHECK(obs_a.tensor == obs_b.tensor);
    CHECK(env.state().weights.cash_weight() == 1.0);
    CHECK(env.state().value == 1.0);
}

TEST_CASE("all-cash actions earn nothing and last until the data ends") {
    const auto panel = synth_market({.num_symbols = 2, .num_days = 30}, 2);
    const auto tracks = SignalTrackSet::empty(2);
    EnvConfig config = small_window_config();
    config.fees = CommissionSchedule{0.0, 0.0};
    TradingEnv env(panel, tracks, config, 0, 29);

    env.reset(9);
    std::size_t steps = 0;
    while (true) {
        const auto out = env.step(focus_action(3, 0));  // stay in cash
        CHECK(out.reward == 0.0);
        ++steps;
        if (out.done) {
            CHECK(out.reason == DoneReason::DataExhausted);
            break;
        }
    }
    CHECK(steps == 20);
    CHECK(env.state().value == 1.0);
    CHECK_THROWS(env.step(focus_action(3, 0)));  // stepping after done
}

TEST_CASE("min-profit rule fires at the first breaching step") {
    // The first step buys at the day-10 close; the value then rides the 4%
    // daily decline and crosses -10% versus the start on the fourth step.
    const std::vector<double> closes{100, 100, 100, 100, 100, 100, 100, 100, 100, 100,
                                     96,  92.16, 88.4736, 84.934656, 81.537270, 78.275779};
    const auto panel = path_panel(closes);
    const auto tracks = SignalTrackSet::empty(1);
    TradingEnv env(panel, tracks, small_window_config(), 0, closes.size() - 1);

    env.reset(9);
    auto out = env.step(focus_action(2, 1));  // buy at 96
    CHECK_FALSE(out.done);
    out = env.step(focus_action(2, 1));       // -4.0% and fees
    CHECK_FALSE(out.done);
    out = env.step(focus_action(2, 1));       // -7.9%
    CHECK_FALSE(out.done);
    out = env.step(focus_action(2, 1));       // -11.6% < -10%
    CHECK(out.done);
    CHECK(out.reason == DoneReason::MinProfitBreached);
    CHECK(env.state().value / env.state().episode_start_value - 1.0 < -0.1);
}

TEST_CASE("drawdown rule measures against the episode maximum") {
    // Buy flat, ride a rally to ~1.5x, then drop just past 20% off the peak.
    const std::vector<double> closes{100, 100, 100, 100, 100, 100, 100, 100, 100, 100,
                                     100, 110, 121, 133.1, 146.41, 150, 119, 119};
    const auto panel = path_panel(closes);
    const auto tracks = SignalTrackSet::empty(1);
    TradingEnv env(panel, tracks, small_window_config(), 0, closes.size() - 1);

    env.reset(9);
    TradingEnv::StepOutcome out{Observation{}, 0.0, false, DoneReason::None};
    for (int i = 0; i < 6; ++i) {
        out = env.step(focus_action(2, 1));
        CHECK_FALSE(out.done);
    }
    CHECK(env.state().episode_max_value == doctest::Approx(1.499).epsilon(1e-3));
    out = env.step(focus_action(2, 1));  // 119/150 - 1 = -20.7% off the peak
    CHECK(out.done);
    CHECK(out.reason == DoneReason::DrawdownBreached);
    CHECK(env.state().value / env.state().episode_max_value - 1.0 < -0.2);
    CHECK(env.state().value / env.state().episode_start_value - 1.0 > -0.1);
}

TEST_CASE("min-profit wins when both loss rules trip at once") {
    const std::vector<double> closes{100, 100, 100, 100, 100, 100, 100, 100, 100, 100,
                                     100, 70, 70};
    const auto panel = path_panel(closes);
    const auto tracks = SignalTrackSet::empty(1);
    TradingEnv env(panel, tracks, small_window_config(), 0, closes.size() - 1);
    env.reset(9);
    CHECK_FALSE(env.step(focus_action(2, 1)).done);  // buy at 100
    const auto out = env.step(focus_action(2, 1));   // -30%: both rules breached
    CHECK(out.done);
    CHECK(out.reason == DoneReason::MinProfitBreached);
}

TEST_CASE("disabling termination rules leaves only data exhaustion") {
    const std::vector<double> closes{100, 100, 100, 100, 100, 100, 100, 100, 100, 100,
                                     60,  40,  30};
    const auto panel = path_panel(closes);
    const auto tracks = SignalTrackSet::empty(1);
    EnvConfig config = small_window_config();
    config.termination_rules_enabled = false;
    TradingEnv env(panel, tracks, config, 0, closes.size() - 1);
    env.reset(9);
    std::size_t steps = 0;
    DoneReason reason = DoneReason::None;
    while (true) {
        const auto out = env.step(focus_action(2, 1));
        ++steps;
        if (out.done) {
            reason = out.reason;
            break;
        }
    }
    CHECK(steps == 3);
    CHECK(reason == DoneReason::DataExhausted);
}

TEST_CASE("accounting: trace replay, reward telescoping, fee monotonicity") {
    const auto panel = synth_market({.num_symbols = 3, .num_days = 60, .volatility = 0.02}, 3);
    const auto tracks = SignalTrackSet::empty(3);

    auto run = [&](double fee_rate) {
        EnvConfig config = small_window_config();
        config.fees = CommissionSchedule{fee_rate, fee_rate};
        config.termination_rules_enabled = false;
        TradingEnv env(panel, tracks, config, 0, 59);
        env.reset(9);
        Rng rng(77);  // same action sequence for every fee level
        double reward_sum = 0.0;
        while (true) {
            std::vector<double> raw(4);
            for (auto& x : raw) {
                x = rng.uniform(-1.0, 1.0);
            }
            const auto out = env.step(raw);
            reward_sum += out.reward;
            if (out.done) {
                break;
            }
        }
        return std::tuple{env.state().value, reward_sum, env.trace()};
    };

    const auto [value, reward_sum, trace] = run(0.0005);

    // Sum of rewards telescopes to ln(p_f / p_0).
    CHECK(reward_sum == doctest::Approx(std::log(value / 1.0)).epsilon(1e-9));

    // Replaying the trace through the product form reproduces the value.
    double product = trace.initial_value;
    for (const auto& step : trace.steps) {
        product *= 1.0 + step.rate_of_return;
    }
    CHECK(product == doctest::Approx(value).epsilon(1e-9));
    CHECK(trace.steps.back().value == doctest::Approx(value).epsilon(1e-12));

    // Higher fees never help, same actions.
    const auto [value_pricier, r2, t2] = run(0.005);
    CHECK(value_pricier <= value + 1e-12);
}

TEST_CASE("replaying trace actions through the portfolio math reproduces values") {
    const auto panel = synth_market({.num_symbols = 3, .num_days = 50, .volatility = 0.02}, 8);
    const auto tracks = SignalTrackSet::empty(3);
    EnvConfig config = small_window_config();
    config.termination_rules_enabled = false;
    TradingEnv env(panel, tracks, config, 0, 49);
    env.reset(9);
    Rng rng(55);
    while (true) {
        std::vector<double> raw(4);
        for (auto& x : raw) {
            x = rng.uniform(-1.0, 1.0);
        }
        if (env.step(raw).done) {
            break;
        }
    }

    const EpisodeTrace& trace = env.trace();
    double value = trace.initial_value;
    PortfolioVector weights = PortfolioVector::all_cash(3);
    for (const EpisodeStep& step : trace.steps) {
        std::vector<double> y(4, 1.0);
        for (std::size_t s = 0; s < 3; ++s) {
            y[s + 1] = panel.close(s, step.day_index + 1) / panel.close(s, step.day_index);
        }
        const auto result = step_portfolio(value, weights, PortfolioVector(step.action_weights),
                                           RelativePriceVector(y), config.fees);
        CHECK(result.new_value == doctest::Approx(step.value).epsilon(1e-9));
        CHECK(result.mu == doctest::Approx(step.mu).epsilon(1e-12));
        value = result.new_value;
        weights = PortfolioVector(step.action_weights);
    }
    CHECK(value == doctest::Approx(env.state().value).epsilon(1e-9));
}

TEST_CASE("episode trace exports delimited text") {
    const auto panel = synth_market({.num_symbols = 2, .num_days = 20}, 4);
    const auto tracks = SignalTrackSet::empty(2);
    EnvConfig config = small_window_config();
    TradingEnv env(panel, tracks, config, 0, 19);
    env.reset(9);
    env.step(focus_action(3, 1));
    env.step(focus_action(3, 2));

    std::ostringstream out;
    env.trace().write_csv(out);
    const std::string text = out.str();
    CHECK(text.find("day,value,mu,rho,log_return,w_0,w_1,w_2") == 0);
    CHECK(text.find("# terminal_reason=") != std::string::npos);
}

}  // TEST_SUITE
