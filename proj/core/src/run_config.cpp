#include "sigfolio/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sigfolio/observation.hpp"

namespace sigfolio {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

struct Parser {
    std::vector<std::string> errors;

    void error(std::size_t line, const std::string& what) {
        errors.push_back("line " + std::to_string(line) + ": " + what);
    }

    bool to_double(const std::string& text, double& out) {
        const char* begin = text.data();
        const char* end = begin + text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, out);
        return ec == std::errc{} && ptr == end && !text.empty();
    }

    bool to_size(const std::string& text, std::size_t& out) {
        std::uint64_t v = 0;
        const char* begin = text.data();
        const char* end = begin + text.size();
        const auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc{} || ptr != end || text.empty()) {
            return false;
        }
        out = static_cast<std::size_t>(v);
        return true;
    }

    bool to_bool(const std::string& text, bool& out) {
        if (text == "true" || text == "1" || text == "yes" || text == "on") {
            out = true;
            return true;
        }
        if (text == "false" || text == "0" || text == "no" || text == "off") {
            out = false;
            return true;
        }
        return false;
    }
};

}  // namespace

NetConfig RunConfig::make_net_config(std::size_t num_symbols, std::size_t num_experts) const {
    NetConfig net;
    net.num_symbols = num_symbols;
    net.input_channels = total_channel_count(env.window, num_experts);
    net.window = env.window.window;
    net.conv1_channels = conv1_channels;
    net.conv2_channels = conv2_channels;
    net.hidden = hidden;
    return net;
}

EnvConfig RunConfig::eval_env_config() const {
    EnvConfig eval = env;
    eval.termination_rules_enabled = eval_termination_rules;
    return eval;
}

RunConfig parse_run_config(std::istream& in, const std::string& source_name) {
    RunConfig config;
    Parser parser;

    using Setter = std::function<void(const std::string&, std::size_t, const std::string&)>;
    auto number = [&](double& slot) {
        return Setter([&parser, &slot](const std::string& value, std::size_t line,
                                       const std::string& key) {
            if (!parser.to_double(value, slot)) {
                parser.error(line, key + ": expected a number, got '" + value + "'");
            }
        });
    };
    auto size = [&](std::size_t& slot) {
        return Setter([&parser, &slot](const std::string& value, std::size_t line,
                                       const std::string& key) {
            if (!parser.to_size(value, slot)) {
                parser.error(line,
                             key + ": expected a non-negative integer, got '" + value + "'");
            }
        });
    };
    auto boolean = [&](bool& slot) {
        return Setter([&parser, &slot](const std::string& value, std::size_t line,
                                       const std::string& key) {
            if (!parser.to_bool(value, slot)) {
                parser.error(line, key + ": expected true/false, got '" + value + "'");
            }
        });
    };
    auto text = [&](std::string& slot) {
        return Setter(
            [&slot](const std::string& value, std::size_t, const std::string&) { slot = value; });
    };

    std::uint64_t seed_value = config.seed;
    auto seed_setter = Setter([&](const std::string& value, std::size_t line,
                                  const std::string& key) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
            parser.error(line, key + ": expected a non-negative integer, got '" + value + "'");
        } else {
            seed_value = v;
        }
    });
    auto scope_setter = Setter([&](const std::string& value, std::size_t line,
                                   const std::string&) {
        if (value == "same-expert") {
            config.overlap_scope = OverlapScope::SameExpert;
        } else if (value == "across-experts") {
            config.overlap_scope = OverlapScope::AcrossExperts;
        } else {
            parser.error(line, "overlap_scope must be same-expert or across-experts");
        }
    });
    auto mode_setter = Setter([&](const std::string& value, std::size_t line,
                                  const std::string&) {
        if (value == "per-expert") {
            config.env.window.signal_mode = SignalMode::PerExpert;
        } else if (value == "aggregated") {
            config.env.window.signal_mode = SignalMode::Aggregated;
        } else {
            parser.error(line, "signal_mode must be per-expert or aggregated");
        }
    });
    auto optimizer_setter = Setter([&](const std::string& value, std::size_t line,
                                       const std::string&) {
        if (value == "adam") {
            config.ppo.optimizer = OptimizerKind::Adam;
        } else if (value == "sgd") {
            config.ppo.optimizer = OptimizerKind::Sgd;
        } else {
            parser.error(line, "optimizer must be adam or sgd");
        }
    });

    const std::map<std::string, std::map<std::string, Setter>> schema{
        {"data",
         {{"prices", text(config.prices_path)},
          {"signals", text(config.signals_path)},
          {"eval_days", size(config.eval_days)},
          {"overlap_scope", scope_setter}}},
        {"env",
         {{"MIN_PROFIT", number(config.env.min_profit)},
          {"MAX_DRAWDOWN", number(config.env.max_drawdown)},
          {"purchase_fee", number(config.env.fees.purchase_rate)},
          {"sell_fee", number(config.env.fees.sell_rate)},
          {"initial_value", number(config.env.initial_value)},
          {"train_termination_rules", boolean(config.env.termination_rules_enabled)},
          {"eval_termination_rules", boolean(config.eval_termination_rules)}}},
        {"observation",
         {{"window", size(config.env.window.window)}, {"signal_mode", mode_setter}}},
        {"net",
         {{"conv1_channels", size(config.conv1_channels)},
          {"conv2_channels", size(config.conv2_channels)},
          {"hidden", size(config.hidden)}}},
        {"ppo",
         {{"LEARNING_RATE", number(config.ppo.learning_rate)},
          {"SGD_MINIBATCH_SIZE", size(config.ppo.sgd_minibatch_size)},
          {"LAMBDA", number(config.ppo.lambda)},
          {"CLIP_PARAM", number(config.ppo.clip_param)},
          {"ROLLOUT_FRAGMENT_LENGTH", size(config.ppo.rollout_fragment_length)},
          {"gamma", number(config.ppo.gamma)},
          {"epochs_per_batch", size(config.ppo.epochs_per_batch)},
          {"train_batch_size", size(config.ppo.train_batch_size)},
          {"entropy_coeff", number(config.ppo.entropy_coeff)},
          {"value_coeff", number(config.ppo.value_coeff)},
          {"max_iterations", size(config.ppo.max_iterations)},
          {"action_sigma", number(config.ppo.action_sigma)},
          {"optimizer", optimizer_setter}}},
        {"run",
         {{"seed", seed_setter},
          {"output_dir", text(config.output_dir)},
          {"checkpoint_every", size(config.checkpoint_every)},
          {"eval_window", size(config.eval_window)},
          {"workers", size(config.workers)}}},
    };

    std::string line;
    std::size_t line_number = 0;
    std::string section;
    while (std::getline(in, line)) {
        ++line_number;
        const auto comment = line.find('#');
        if (comment != std::string::npos) {
            line.erase(comment);
        }
        const std::string content = trim(line);
        if (content.empty()) {
            continue;
        }
        if (content.front() == '[') {
            if (content.back() != ']') {
                parser.error(line_number, "unterminated section header");
                continue;
            }
            section = trim(content.substr(1, content.size() - 2));
            if (!schema.contains(section)) {
                parser.error(line_number, "unknown section [" + section + "]");
                section.clear();
            }
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            parser.error(line_number, "expected key = value");
            continue;
        }
        const std::string key = trim(content.substr(0, eq));
        const std::string value = trim(content.substr(eq + 1));
        if (section.empty()) {
            parser.error(line_number, "key '" + key + "' outside any section");
            continue;
        }
        const auto& keys = schema.at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) {
            parser.error(line_number, "unknown key '" + key + "' in section [" + section + "]");
            continue;
        }
        it->second(value, line_number, key);
    }

    if (!parser.errors.empty()) {
        std::ostringstream msg;
        msg << source_name << ": " << parser.errors.size() << " config error(s):";
        for (const std::string& e : parser.errors) {
            msg << "\n  " << e;
        }
        throw std::runtime_error(msg.str());
    }

    config.seed = seed_value;
    config.ppo.seed = seed_value;
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    return parse_run_config(in, path.string());
}

void write_run_config_template(std::ostream& out) {
    out << "[data]\n"
           "prices = data/prices.csv\n"
           "signals = data/signals.csv\n"
           "eval_days = 120\n"
           "overlap_scope = same-expert\n"
           "\n"
           "[env]\n"
           "MIN_PROFIT = -0.1\n"
           "MAX_DRAWDOWN = -0.2\n"
           "purchase_fee = 0.0005\n"
           "sell_fee = 0.0005\n"
           "initial_value = 1\n"
           "train_termination_rules = true\n"
           "eval_termination_rules = false\n"
           "\n"
           "[observation]\n"
           "window = 60\n"
           "signal_mode = per-expert\n"
           "\n"
           "[net]\n"
           "conv1_channels = 2\n"
           "conv2_channels = 20\n"
           "hidden = 64\n"
           "\n"
           "[ppo]\n"
           "LEARNING_RATE = 5e-4\n"
           "SGD_MINIBATCH_SIZE = 300\n"
           "LAMBDA = 0.9\n"
           "CLIP_PARAM = 0.2\n"
           "ROLLOUT_FRAGMENT_LENGTH = 60\n"
           "gamma = 0.99\n"
           "epochs_per_batch = 10\n"
           "train_batch_size = 3600\n"
           "entropy_coeff = 0\n"
           "value_coeff = 0.5\n"
           "max_iterations = 100\n"
           "action_sigma = 0.15\n"
           "optimizer = adam\n"
           "\n"
           "[run]\n"
           "seed = 1\n"
           "output_dir = out\n"
           "checkpoint_every = 25\n"
           "eval_window = 120\n"
           "workers = 1\n";
}

}  // namespace sigfolio
