#include "sigfolio/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sigfolio {

namespace {

constexpr const char* kPriceHeader = "date,symbol,open,high,low,close,volume";
constexpr const char* kSignalHeader =
    "expert_id,symbol,start_date,close_date,expected_return,expected_risk";

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string token;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(trim(token));
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    fields.push_back(trim(token));
    return fields;
}

[[noreturn]] void fail_row(const std::string& source, std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << source << ":" << line << ": " << what;
    throw std::runtime_error(msg.str());
}

double parse_number(const std::string& text, const std::string& source, std::size_t line,
                    const char* field) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        fail_row(source, line, std::string("cannot parse ") + field + " '" + text + "'");
    }
    return value;
}

Date parse_date(const std::string& text, const std::string& source, std::size_t line,
                const char* field) {
    try {
        return Date::parse(text);
    } catch (const std::exception& ex) {
        fail_row(source, line, std::string("bad ") + field + ": " + ex.what());
    }
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

std::ofstream create_or_throw(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot create " + path.string());
    }
    return out;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw std::runtime_error("double formatting failed");
    }
    return std::string(buf, ptr);
}

std::vector<Bar> read_price_rows(std::istream& in, const std::string& source_name) {
    std::string line;
    std::size_t line_number = 0;
    if (!std::getline(in, line)) {
        throw std::runtime_error(source_name + ": empty prices file");
    }
    ++line_number;
    if (trim(line) != kPriceHeader) {
        fail_row(source_name, line_number,
                 std::string("unexpected header, want '") + kPriceHeader + "'");
    }

    std::vector<Bar> bars;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 7) {
            fail_row(source_name, line_number,
                     "expected 7 fields, got " + std::to_string(fields.size()));
        }
        Bar bar;
        bar.date = parse_date(fields[0], source_name, line_number, "date");
        bar.symbol = fields[1];
        bar.open = parse_number(fields[2], source_name, line_number, "open");
        bar.high = parse_number(fields[3], source_name, line_number, "high");
        bar.low = parse_number(fields[4], source_name, line_number, "low");
        bar.close = parse_number(fields[5], source_name, line_number, "close");
        bar.volume = parse_number(fields[6], source_name, line_number, "volume");
        try {
            bar.validate();
        } catch (const std::exception& ex) {
            fail_row(source_name, line_number, ex.what());
        }
        bars.push_back(std::move(bar));
    }
    if (bars.empty()) {
        throw std::runtime_error(source_name + ": no price rows");
    }
    return bars;
}

std::vector<Bar> read_price_rows(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return read_price_rows(in, path.string());
}

PricePanel load_prices(const std::filesystem::path& path) {
    return fill_missing(sparse_from_bars(read_price_rows(path)));
}

std::vector<SignalRecord> read_signal_rows(std::istream& in,
                                           const std::string& source_name,
                                           std::vector<std::string>* warnings) {
    std::string line;
    std::size_t line_number = 0;
    if (!std::getline(in, line)) {
        throw std::runtime_error(source_name + ": empty signals file");
    }
    ++line_number;
    if (trim(line) != kSignalHeader) {
        fail_row(source_name, line_number,
                 std::string("unexpected header, want '") + kSignalHeader + "'");
    }

    std::vector<SignalRecord> records;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 6) {
            fail_row(source_name, line_number,
                     "expected 6 fields, got " + std::to_string(fields.size()));
        }
        SignalRecord record;
        record.expert_id = fields[0];
        record.symbol = fields[1];
        record.start_date = parse_date(fields[2], source_name, line_number, "start_date");
        record.close_date = parse_date(fields[3], source_name, line_number, "close_date");
        record.expected_return =
            parse_number(fields[4], source_name, line_number, "expected_return");
        record.expected_risk =
            parse_number(fields[5], source_name, line_number, "expected_risk");
        if (record.expert_id.empty() || record.symbol.empty()) {
            fail_row(source_name, line_number, "expert_id and symbol must be non-empty");
        }
        if (record.close_date < record.start_date) {
            fail_row(source_name, line_number, "close_date precedes start_date");
        }
        if (record.expected_risk > 0.0 && warnings) {
            std::ostringstream w;
            w << source_name << ":" << line_number << ": expected_risk "
              << record.expected_risk << " is positive; risks are usually losses (<= 0)";
            warnings->push_back(w.str());
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<SignalRecord> load_signals(const std::filesystem::path& path,
                                       std::vector<std::string>* warnings) {
    auto in = open_or_throw(path);
    return read_signal_rows(in, path.string(), warnings);
}

void write_prices(const PricePanel& panel, std::ostream& out) {
    out << kPriceHeader << "\n";
    for (std::size_t s = 0; s < panel.num_symbols(); ++s) {
        for (std::size_t d = 0; d < panel.num_days(); ++d) {
            out << panel.calendar()[d].to_string() << ',' << panel.symbols()[s] << ','
                << format_double(panel.open(s, d)) << ',' << format_double(panel.high(s, d))
                << ',' << format_double(panel.low(s, d)) << ','
                << format_double(panel.close(s, d)) << ','
                << format_double(panel.volume(s, d)) << "\n";
        }
    }
}

void write_prices(const PricePanel& panel, const std::filesystem::path& path) {
    auto out = create_or_throw(path);
    write_prices(panel, out);
}

void write_fill_mask(const PricePanel& panel, std::ostream& out) {
    out << "date,symbol\n";
    for (std::size_t s = 0; s < panel.num_symbols(); ++s) {
        for (std::size_t d = 0; d < panel.num_days(); ++d) {
            if (panel.filled(s, d)) {
                out << panel.calendar()[d].to_string() << ',' << panel.symbols()[s] << "\n";
            }
        }
    }
}

void write_signals(const std::vector<SignalRecord>& records, std::ostream& out) {
    out << kSignalHeader << "\n";
    for (const SignalRecord& r : records) {
        out << r.expert_id << ',' << r.symbol << ',' << r.start_date.to_string() << ','
            << r.close_date.to_string() << ',' << format_double(r.expected_return) << ','
            << format_double(r.expected_risk) << "\n";
    }
}

void write_signals(const std::vector<SignalRecord>& records,
                   const std::filesystem::path& path) {
    auto out = create_or_throw(path);
    write_signals(records, out);
}

}  // namespace sigfolio
