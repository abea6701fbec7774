#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sigfolio/calendar.hpp"

namespace sigfolio {

// One day of one symbol: OHLC prices plus traded volume.
struct Bar {
    Date date;
    std::string symbol;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    void validate() const;  // throws std::invalid_argument
};

// Symbol x day grid with holes: cells flagged invalid carry no prices yet.
// Intermediate form between raw bars and the dense PricePanel.
struct SparsePanel {
    std::vector<std::string> symbols;  // sorted, unique
    std::vector<Date> calendar;        // strictly increasing
    std::vector<double> open, high, low, close, volume;  // m*T, row-major by symbol
    std::vector<std::uint8_t> valid;

    std::size_t num_symbols() const { return symbols.size(); }
    std::size_t num_days() const { return calendar.size(); }
    std::size_t cell(std::size_t symbol, std::size_t day) const {
        return symbol * calendar.size() + day;
    }
};

// Dense market history: every (symbol, day) cell holds a bar; cells that had
// to be imputed are flagged in the fill mask.
class PricePanel {
  public:
    PricePanel(std::vector<std::string> symbols,
               std::vector<Date> calendar,
               std::vector<double> open,
               std::vector<double> high,
               std::vector<double> low,
               std::vector<double> close,
               std::vector<double> volume,
               std::vector<std::uint8_t> fill_mask);

    std::size_t num_symbols() const { return symbols_.size(); }
    std::size_t num_days() const { return calendar_.size(); }
    const std::vector<std::string>& symbols() const { return symbols_; }
    const std::vector<Date>& calendar() const { return calendar_; }

    double open(std::size_t symbol, std::size_t day) const { return open_[cell(symbol, day)]; }
    double high(std::size_t symbol, std::size_t day) const { return high_[cell(symbol, day)]; }
    double low(std::size_t symbol, std::size_t day) const { return low_[cell(symbol, day)]; }
    double close(std::size_t symbol, std::size_t day) const { return close_[cell(symbol, day)]; }
    double volume(std::size_t symbol, std::size_t day) const { return volume_[cell(symbol, day)]; }
    bool filled(std::size_t symbol, std::size_t day) const { return fill_mask_[cell(symbol, day)] != 0; }

    Bar bar(std::size_t symbol, std::size_t day) const;

    std::optional<std::size_t> symbol_index(std::string_view symbol) const;
    std::optional<std::size_t> day_index(Date date) const;
    // First day with date >= the argument, or num_days() when past the end.
    std::size_t lower_bound_day(Date date) const;

    std::size_t filled_cell_count() const;

  private:
    std::size_t cell(std::size_t symbol, std::size_t day) const {
        return symbol * calendar_.size() + day;
    }

    std::vector<std::string> symbols_;
    std::vector<Date> calendar_;
    std::vector<double> open_, high_, low_, close_, volume_;
    std::vector<std::uint8_t> fill_mask_;
};

// Arrange validated bars into a sparse grid. Throws on duplicate
// (symbol, date) pairs and on an empty symbol set.
SparsePanel sparse_from_bars(const std::vector<Bar>& bars);

// Impute every hole with the nearest previous valid bar's prices (volume 0);
// cells with no previous valid bar take the nearest next one. Every symbol
// must have at least one valid bar. Untouched cells are copied bit for bit.
PricePanel fill_missing(const SparsePanel& sparse);

}  // namespace sigfolio
