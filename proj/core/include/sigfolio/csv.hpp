#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sigfolio/panel.hpp"
#include "sigfolio/signals.hpp"

namespace sigfolio {

// Delimited-text market data. Prices use the header
//   date,symbol,open,high,low,close,volume
// and signals use
//   expert_id,symbol,start_date,close_date,expected_return,expected_risk
// with ISO-8601 dates, '.' decimal points and UTF-8 text. Malformed rows are
// reported with their line number.

std::vector<Bar> read_price_rows(std::istream& in, const std::string& source_name);
std::vector<Bar> read_price_rows(const std::filesystem::path& path);

// Parse, validate, arrange and fill: the full ingestion pipeline.
PricePanel load_prices(const std::filesystem::path& path);

std::vector<SignalRecord> read_signal_rows(std::istream& in,
                                           const std::string& source_name,
                                           std::vector<std::string>* warnings = nullptr);
std::vector<SignalRecord> load_signals(const std::filesystem::path& path,
                                       std::vector<std::string>* warnings = nullptr);

void write_prices(const PricePanel& panel, std::ostream& out);
void write_prices(const PricePanel& panel, const std::filesystem::path& path);
// Sidecar listing imputed cells: date,symbol rows, one per filled cell.
void write_fill_mask(const PricePanel& panel, std::ostream& out);

void write_signals(const std::vector<SignalRecord>& records, std::ostream& out);
void write_signals(const std::vector<SignalRecord>& records, const std::filesystem::path& path);

// Shortest decimal text that parses back to exactly the same double. All
// emitted tables use this so that reruns are byte-identical.
std::string format_double(double value);

}  // namespace sigfolio
