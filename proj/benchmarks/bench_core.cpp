#include <benchmark/benchmark.h>

#include "sigfolio/observation.hpp"
#include "sigfolio/policy_net.hpp"
#include "sigfolio/portfolio_math.hpp"
#include "sigfolio/ppo.hpp"
#include "sigfolio/random.hpp"
#include "sigfolio/synthetic.hpp"
#include "sigfolio/trading_env.hpp"

using namespace sigfolio;

namespace {

std::vector<double> simplex(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& x : w) {
        x = rng.uniform() + 1e-9;
        sum += x;
    }
    for (auto& x : w) {
        x /= sum;
    }
    return w;
}

void BM_TransactionRemainder(benchmark::State& state) {
    Rng rng(1);
    const std::size_t assets = static_cast<std::size_t>(state.range(0));
    const CommissionSchedule fees{0.0005, 0.0005};
    const PortfolioVector evolved(simplex(rng, assets + 1));
    const PortfolioVector target(simplex(rng, assets + 1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(transaction_remainder(evolved, target, fees));
    }
}
BENCHMARK(BM_TransactionRemainder)->Arg(5)->Arg(54);

void BM_StepPortfolio(benchmark::State& state) {
    Rng rng(2);
    const std::size_t assets = 10;
    const CommissionSchedule fees{0.0005, 0.0005};
    const PortfolioVector prev(simplex(rng, assets + 1));
    const PortfolioVector target(simplex(rng, assets + 1));
    std::vector<double> y(assets + 1, 1.0);
    for (std::size_t i = 1; i <= assets; ++i) {
        y[i] = std::exp(rng.uniform(-0.05, 0.05));
    }
    const RelativePriceVector relatives(y);
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_portfolio(1.0, prev, target, relatives, fees));
    }
}
BENCHMARK(BM_StepPortfolio);

struct NetFixture {
    PricePanel panel;
    SignalTrackSet tracks;
    EnvConfig env_config;
    NetConfig net_config;
    PolicySnapshot snapshot;
    Observation obs;

    NetFixture()
        : panel(synth_market({.num_symbols = 5, .num_days = 120}, 3)),
          tracks(SignalTrackSet::empty(5)),
          snapshot(PolicySnapshot::init(
              [this] {
                  net_config.num_symbols = 5;
                  net_config.input_channels = total_channel_count(env_config.window, 0);
                  net_config.window = 60;
                  net_config.conv2_channels = 8;
                  net_config.hidden = 32;
                  return net_config;
              }(),
              7)),
          obs(build_observation(panel, tracks, 100, PortfolioVector::all_cash(5),
                                env_config.window)) {}
};

void BM_BuildObservation(benchmark::State& state) {
    NetFixture fixture;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_observation(fixture.panel, fixture.tracks, 100,
                                                   PortfolioVector::all_cash(5),
                                                   fixture.env_config.window));
    }
}
BENCHMARK(BM_BuildObservation);

void BM_Forward(benchmark::State& state) {
    NetFixture fixture;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(fixture.snapshot, fixture.obs));
    }
}
BENCHMARK(BM_Forward);

void BM_ForwardBackward(benchmark::State& state) {
    NetFixture fixture;
    std::vector<double> gs(fixture.net_config.action_size(), 0.1);
    for (auto _ : state) {
        const auto out = forward(fixture.snapshot, fixture.obs);
        benchmark::DoNotOptimize(backward(fixture.snapshot, out.trace, gs, 0.5));
    }
}
BENCHMARK(BM_ForwardBackward);

void BM_EnvStep(benchmark::State& state) {
    NetFixture fixture;
    TradingEnv env(fixture.panel, fixture.tracks, fixture.env_config, 0, 119);
    Rng rng(9);
    env.reset(60);
    std::vector<double> raw(6, 0.0);
    for (auto _ : state) {
        if (env.state().done) {
            state.PauseTiming();
            env.reset(60);
            state.ResumeTiming();
        }
        for (auto& x : raw) {
            x = rng.uniform(-1.0, 1.0);
        }
        benchmark::DoNotOptimize(env.step(raw));
    }
}
BENCHMARK(BM_EnvStep);

void BM_ComputeGae(benchmark::State& state) {
    Rng rng(11);
    const std::size_t n = 60;
    std::vector<double> rewards(n), values(n);
    std::vector<std::uint8_t> dones(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        rewards[i] = rng.uniform(-1.0, 1.0);
        values[i] = rng.uniform(-1.0, 1.0);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_gae(rewards, values, dones, 0.1, 0.99, 0.9));
    }
}
BENCHMARK(BM_ComputeGae);

}  // namespace

BENCHMARK_MAIN();
