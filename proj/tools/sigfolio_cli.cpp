// Command line surface: synthetic data generation, ingestion, training,
// evaluation and report tables. See README.md for a walkthrough.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sigfolio/csv.hpp"
#include "sigfolio/observation.hpp"
#include "sigfolio/orchestrator.hpp"
#include "sigfolio/report.hpp"
#include "sigfolio/run_config.hpp"
#include "sigfolio/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sigfolio;

namespace {

struct LoadedData {
    PricePanel panel;
    std::vector<SignalRecord> records;
    SignalTrackSet tracks;
};

LoadedData load_data(const RunConfig& config) {
    if (config.prices_path.empty()) {
        throw std::runtime_error("config error: [data] prices is required");
    }
    PricePanel panel = load_prices(config.prices_path);

    std::vector<SignalRecord> records;
    if (!config.signals_path.empty()) {
        std::vector<std::string> warnings;
        records = load_signals(config.signals_path, &warnings);
        for (const std::string& w : warnings) {
            std::cerr << "warning: " << w << "\n";
        }
    }
    TrackBuildReport report;
    SignalTrackSet tracks =
        records.empty() ? SignalTrackSet::empty(panel.num_symbols())
                        : build_signal_tracks(records, panel, config.overlap_scope, &report);
    for (const std::string& w : report.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    return LoadedData{std::move(panel), std::move(records), std::move(tracks)};
}

// Day index of the first evaluation day; everything before it is training.
std::size_t eval_split_day(const RunConfig& config, const PricePanel& panel) {
    const std::size_t t = panel.num_days();
    if (config.eval_days + 2 > t) {
        throw std::runtime_error("eval_days leaves no training data (panel has " +
                                 std::to_string(t) + " days)");
    }
    return t - config.eval_days;
}

void write_channel_manifest(const RunConfig& config, const SignalTrackSet& tracks,
                            const fs::path& path) {
    std::ofstream out(path);
    for (const std::string& name : channel_layout(config.env.window, tracks.expert_ids())) {
        out << name << "\n";
    }
}

int cmd_synth(const std::string& out_dir, std::size_t stocks, std::size_t days,
              std::size_t experts, std::size_t signals_per_expert, double skill,
              double drift, double volatility, double dominant_drift, std::uint64_t seed) {
    SynthMarketConfig market;
    market.num_symbols = stocks;
    market.num_days = days;
    market.drift = drift;
    market.volatility = volatility;
    if (dominant_drift != 0.0) {
        market.symbol_drift.assign(stocks, drift);
        market.symbol_drift[0] = dominant_drift;
    }
    const PricePanel panel = synth_market(market, seed);

    fs::create_directories(out_dir);
    write_prices(panel, fs::path(out_dir) / "prices.csv");

    if (experts > 0) {
        SynthExpertsConfig expert_config;
        expert_config.num_experts = experts;
        expert_config.signals_per_expert = signals_per_expert;
        expert_config.skill = skill;
        const auto records =
            synth_experts(panel, expert_config, derive_seed(seed, 0x736967 /* sig */));
        write_signals(records, fs::path(out_dir) / "signals.csv");
    }
    std::cout << "wrote " << (fs::path(out_dir) / "prices.csv").string() << " (" << stocks
              << " symbols x " << days << " days)";
    if (experts > 0) {
        std::cout << " and " << (fs::path(out_dir) / "signals.csv").string() << " (" << experts
                  << " experts x " << signals_per_expert << " signals)";
    }
    std::cout << "\n";
    return 0;
}

int cmd_ingest_prices(const std::string& input, const std::string& output,
                      const std::string& mask_path) {
    const PricePanel panel = load_prices(input);
    std::cout << "symbols=" << panel.num_symbols() << " days=" << panel.num_days()
              << " filled_cells=" << panel.filled_cell_count() << "\n";
    if (!output.empty()) {
        write_prices(panel, output);
        std::cout << "wrote " << output << "\n";
    }
    if (!mask_path.empty()) {
        std::ofstream out(mask_path);
        if (!out) {
            throw std::runtime_error("cannot create " + mask_path);
        }
        write_fill_mask(panel, out);
        std::cout << "wrote " << mask_path << "\n";
    }
    return 0;
}

int cmd_ingest_signals(const std::string& input, const std::string& prices,
                       const std::string& output, const std::string& scope_name) {
    const OverlapScope scope =
        scope_name == "across-experts" ? OverlapScope::AcrossExperts : OverlapScope::SameExpert;
    std::vector<std::string> warnings;
    const auto records = load_signals(input, &warnings);
    for (const std::string& w : warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    const PricePanel panel = load_prices(prices);
    TrackBuildReport report;
    const auto tracks = build_signal_tracks(records, panel, scope, &report);
    for (const std::string& w : report.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << "signals=" << records.size() << " experts=" << tracks.num_experts()
              << " dropped=" << report.dropped_records << "\n";
    if (!output.empty()) {
        write_signals(resolve_overlaps(records, scope), output);
        std::cout << "wrote " << output << " (overlap-resolved)\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed_override,
              std::optional<std::size_t> workers_override) {
    RunConfig config = load_run_config(config_path);
    if (seed_override) {
        config.seed = *seed_override;
        config.ppo.seed = *seed_override;
    }
    // An explicit --workers always runs the leader/worker topology, even for
    // a single worker; the config's workers=1 default stays in-process. The
    // two paths produce byte-identical metrics.
    const bool orchestrate = workers_override.has_value() || config.workers > 1;
    if (workers_override) {
        config.workers = *workers_override;
    }

    const LoadedData data = load_data(config);
    const std::size_t split = eval_split_day(config, data.panel);
    const NetConfig net =
        config.make_net_config(data.panel.num_symbols(), data.tracks.num_experts());
    net.validate();
    config.env.validate();
    config.ppo.validate();

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);
    write_channel_manifest(config, data.tracks, out_dir / "channels.txt");

    const auto checkpoint_path = [&](std::uint64_t version) {
        return out_dir / ("checkpoint_v" + std::to_string(version) + ".ckpt");
    };
    std::size_t completed = 0;
    const IterationCallback on_iteration = [&](const PolicySnapshot& snapshot,
                                               const IterationMetrics& metrics) {
        ++completed;
        if (config.checkpoint_every > 0 && completed % config.checkpoint_every == 0 &&
            completed < config.ppo.max_iterations) {
            save_checkpoint(snapshot, checkpoint_path(snapshot.version()));
        }
        std::cout << "iteration " << metrics.iteration << " mean_reward "
                  << format_double(metrics.mean_reward) << " mean_length "
                  << format_double(metrics.mean_length) << "\n";
    };

    const TrainResult result =
        orchestrate ? train_orchestrated(data.panel, data.tracks, config.env, 0, split - 1,
                                         net, config.ppo, config.workers, on_iteration)
                    : train_inprocess(data.panel, data.tracks, config.env, 0, split - 1, net,
                                      config.ppo, on_iteration);

    save_checkpoint(result.final_snapshot, out_dir / "final.ckpt");
    std::ofstream metrics_out(out_dir / "metrics.csv");
    write_metrics_csv(result.metrics, metrics_out);
    std::cout << "wrote " << (out_dir / "final.ckpt").string() << " and "
              << (out_dir / "metrics.csv").string() << "\n";
    return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                 const std::string& from_date, const std::string& to_date) {
    const RunConfig config = load_run_config(config_path);
    const LoadedData data = load_data(config);
    const std::size_t split = eval_split_day(config, data.panel);

    const PolicySnapshot snapshot = load_checkpoint(checkpoint);
    const NetConfig expected =
        config.make_net_config(data.panel.num_symbols(), data.tracks.num_experts());
    if (snapshot.config().digest() != expected.digest()) {
        throw std::runtime_error("checkpoint " + checkpoint +
                                 " was trained with a different configuration (digest " +
                                 snapshot.config().digest() + " != " + expected.digest() + ")");
    }

    std::size_t day_lo = split;
    std::size_t day_hi = data.panel.num_days() - 1;
    if (!from_date.empty()) {
        day_lo = data.panel.lower_bound_day(Date::parse(from_date));
    }
    if (!to_date.empty()) {
        const std::size_t bound = data.panel.lower_bound_day(Date::parse(to_date));
        day_hi = bound < data.panel.num_days() &&
                         data.panel.calendar()[bound] == Date::parse(to_date)
                     ? bound
                     : (bound == 0 ? 0 : bound - 1);
    }
    if (day_lo < split) {
        std::cerr << "warning: evaluation range starts inside the training range (day "
                  << day_lo << " < " << split << ")\n";
    }

    const EvaluationReport report =
        evaluate_policy(data.panel, data.tracks, data.records, snapshot,
                        config.eval_env_config(), day_lo, day_hi, config.eval_window,
                        config.overlap_scope);

    const fs::path eval_dir = fs::path(config.output_dir) / "evaluation";
    fs::create_directories(eval_dir);
    {
        std::ofstream out(eval_dir / "summary.txt");
        write_summary(report, out);
    }
    {
        std::ofstream out(eval_dir / "gains.csv");
        write_gain_table(report, out);
    }
    {
        std::ofstream out(eval_dir / "expert_profits.csv");
        write_expert_table(report, out);
    }
    {
        std::ofstream out(eval_dir / "equity.csv");
        write_equity_curves(report, out);
    }
    {
        std::ofstream out(eval_dir / "trace_window0.csv");
        if (!report.window_traces.empty()) {
            report.window_traces.front().write_csv(out);
        }
    }
    write_summary(report, std::cout);
    std::cout << "wrote " << eval_dir.string() << "/{summary.txt,gains.csv,expert_profits.csv,"
                 "equity.csv}\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const fs::path report_dir = dir / "report";
    fs::create_directories(report_dir);

    // Training curve from the metrics table.
    {
        std::ifstream in(dir / "metrics.csv");
        std::ofstream out(report_dir / "training_curve.csv");
        out << "iteration,mean_reward,mean_length\n";
        if (in) {
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                std::istringstream row(line);
                std::string iteration, reward, length;
                std::getline(row, iteration, ',');
                std::getline(row, reward, ',');
                std::getline(row, length, ',');
                if (!iteration.empty()) {
                    out << iteration << ',' << reward << ',' << length << "\n";
                }
            }
        }
    }
    // Evaluation tables pass through if present.
    for (const char* name : {"gains.csv", "expert_profits.csv", "equity.csv"}) {
        const fs::path src = dir / "evaluation" / name;
        if (fs::exists(src)) {
            fs::copy_file(src, report_dir / name, fs::copy_options::overwrite_existing);
        }
    }
    std::cout << "wrote " << report_dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Expert-signal portfolio manager: data, training, evaluation"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic market and experts");
    std::string synth_out = "data";
    std::size_t synth_stocks = 5, synth_days = 300, synth_experts_n = 3,
                synth_signals = 40;
    double synth_skill = 1.0, synth_drift = 0.0, synth_vol = 0.01, synth_dominant = 0.0;
    std::uint64_t synth_seed = 1;
    synth->add_option("--out-dir", synth_out, "Output directory");
    synth->add_option("--stocks", synth_stocks, "Number of symbols");
    synth->add_option("--days", synth_days, "Number of trading days");
    synth->add_option("--experts", synth_experts_n, "Number of experts (0 for none)");
    synth->add_option("--signals-per-expert", synth_signals, "Signals per expert");
    synth->add_option("--skill", synth_skill, "Expert skill in [0,1]");
    synth->add_option("--drift", synth_drift, "Per-day drift for all symbols");
    synth->add_option("--volatility", synth_vol, "Per-day volatility");
    synth->add_option("--dominant-drift", synth_dominant,
                      "Override drift of the first symbol");
    synth->add_option("--seed", synth_seed, "Generator seed");

    // ingest-prices
    auto* ingest_p = app.add_subcommand("ingest-prices", "Validate and fill a prices file");
    std::string ip_in, ip_out, ip_mask;
    ingest_p->add_option("--input", ip_in, "Raw prices csv")->required();
    ingest_p->add_option("--output", ip_out, "Filled dense prices csv");
    ingest_p->add_option("--fill-mask", ip_mask, "Imputed-cell listing");

    // ingest-signals
    auto* ingest_s = app.add_subcommand("ingest-signals", "Validate signals against prices");
    std::string is_in, is_prices, is_out, is_scope = "same-expert";
    ingest_s->add_option("--input", is_in, "Signals csv")->required();
    ingest_s->add_option("--prices", is_prices, "Prices csv")->required();
    ingest_s->add_option("--output", is_out, "Overlap-resolved signals csv");
    ingest_s->add_option("--overlap-scope", is_scope, "same-expert | across-experts");

    // train
    auto* train = app.add_subcommand("train", "Train the policy");
    std::string train_config;
    std::optional<std::uint64_t> train_seed;
    std::optional<std::size_t> train_workers;
    train->add_option("--config", train_config, "Run config file")->required();
    train->add_option("--seed", train_seed, "Override [run] seed");
    train->add_option("--workers", train_workers, "Override [run] workers");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
    std::string eval_config, eval_checkpoint, eval_from, eval_to;
    evaluate->add_option("--config", eval_config, "Run config file")->required();
    evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
    evaluate->add_option("--from", eval_from, "Evaluation start date (YYYY-MM-DD)");
    evaluate->add_option("--to", eval_to, "Evaluation end date (YYYY-MM-DD)");

    // report
    auto* report = app.add_subcommand("report", "Collate plot-ready tables from a run");
    std::string report_dir = "out";
    report->add_option("--run-dir", report_dir, "Run output directory");

    // config-template
    auto* tmpl = app.add_subcommand("config-template", "Print a documented config template");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_out, synth_stocks, synth_days, synth_experts_n,
                             synth_signals, synth_skill, synth_drift, synth_vol,
                             synth_dominant, synth_seed);
        }
        if (ingest_p->parsed()) {
            return cmd_ingest_prices(ip_in, ip_out, ip_mask);
        }
        if (ingest_s->parsed()) {
            return cmd_ingest_signals(is_in, is_prices, is_out, is_scope);
        }
        if (train->parsed()) {
            return cmd_train(train_config, train_seed, train_workers);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(eval_config, eval_checkpoint, eval_from, eval_to);
        }
        if (report->parsed()) {
            return cmd_report(report_dir);
        }
        if (tmpl->parsed()) {
            write_run_config_template(std::cout);
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
