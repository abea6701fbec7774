#include "sigfolio/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sigfolio {

void Bar::validate() const {
    std::ostringstream msg;
    if (symbol.empty()) {
        throw std::invalid_argument("bar has an empty symbol");
    }
    if (!(std::isfinite(open) && std::isfinite(high) && std::isfinite(low) &&
          std::isfinite(close)) ||
        open <= 0.0 || high <= 0.0 || low <= 0.0 || close <= 0.0) {
        msg << "bar " << symbol << " " << date.to_string() << ": prices must be finite and positive";
        throw std::invalid_argument(msg.str());
    }
    if (low > std::min(open, close)) {
        msg << "bar " << symbol << " " << date.to_string() << ": low " << low
            << " exceeds min(open, close)";
        throw std::invalid_argument(msg.str());
    }
    if (high < std::max(open, close)) {
        msg << "bar " << symbol << " " << date.to_string() << ": high " << high
            << " below max(open, close)";
        throw std::invalid_argument(msg.str());
    }
    if (!std::isfinite(volume) || volume < 0.0) {
        msg << "bar " << symbol << " " << date.to_string() << ": volume must be non-negative";
        throw std::invalid_argument(msg.str());
    }
}

PricePanel::PricePanel(std::vector<std::string> symbols,
                       std::vector<Date> calendar,
                       std::vector<double> open,
                       std::vector<double> high,
                       std::vector<double> low,
                       std::vector<double> close,
                       std::vector<double> volume,
                       std::vector<std::uint8_t> fill_mask)
    : symbols_(std::move(symbols)),
      calendar_(std::move(calendar)),
      open_(std::move(open)),
      high_(std::move(high)),
      low_(std::move(low)),
      close_(std::move(close)),
      volume_(std::move(volume)),
      fill_mask_(std::move(fill_mask)) {
    if (symbols_.empty()) {
        throw std::invalid_argument("panel has no symbols");
    }
    if (calendar_.empty()) {
        throw std::invalid_argument("panel has no trading days");
    }
    for (std::size_t i = 1; i < symbols_.size(); ++i) {
        if (!(symbols_[i - 1] < symbols_[i])) {
            throw std::invalid_argument("panel symbols must be sorted and unique");
        }
    }
    for (std::size_t i = 1; i < calendar_.size(); ++i) {
        if (!(calendar_[i - 1] < calendar_[i])) {
            throw std::invalid_argument("panel calendar is not strictly increasing");
        }
    }
    const std::size_t cells = symbols_.size() * calendar_.size();
    if (open_.size() != cells || high_.size() != cells || low_.size() != cells ||
        close_.size() != cells || volume_.size() != cells || fill_mask_.size() != cells) {
        throw std::invalid_argument("panel grid sizes are inconsistent");
    }
}

Bar PricePanel::bar(std::size_t symbol, std::size_t day) const {
    return Bar{calendar_[day], symbols_[symbol], open(symbol, day), high(symbol, day),
               low(symbol, day),  close(symbol, day), volume(symbol, day)};
}

std::optional<std::size_t> PricePanel::symbol_index(std::string_view symbol) const {
    const auto it = std::lower_bound(symbols_.begin(), symbols_.end(), symbol);
    if (it == symbols_.end() || *it != symbol) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - symbols_.begin());
}

std::optional<std::size_t> PricePanel::day_index(Date date) const {
    const auto it = std::lower_bound(calendar_.begin(), calendar_.end(), date);
    if (it == calendar_.end() || *it != date) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - calendar_.begin());
}

std::size_t PricePanel::lower_bound_day(Date date) const {
    return static_cast<std::size_t>(
        std::lower_bound(calendar_.begin(), calendar_.end(), date) - calendar_.begin());
}

std::size_t PricePanel::filled_cell_count() const {
    std::size_t count = 0;
    for (const auto flag : fill_mask_) {
        count += flag != 0;
    }
    return count;
}

SparsePanel sparse_from_bars(const std::vector<Bar>& bars) {
    if (bars.empty()) {
        throw std::invalid_argument("no bars to build a panel from");
    }

    std::vector<std::string> symbols;
    std::vector<Date> calendar;
    for (const Bar& bar : bars) {
        symbols.push_back(bar.symbol);
        calendar.push_back(bar.date);
    }
    std::sort(symbols.begin(), symbols.end());
    symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
    std::sort(calendar.begin(), calendar.end());
    calendar.erase(std::unique(calendar.begin(), calendar.end()), calendar.end());

    SparsePanel panel;
    panel.symbols = std::move(symbols);
    panel.calendar = std::move(calendar);
    const std::size_t cells = panel.symbols.size() * panel.calendar.size();
    const double nan = std::nan("");
    panel.open.assign(cells, nan);
    panel.high.assign(cells, nan);
    panel.low.assign(cells, nan);
    panel.close.assign(cells, nan);
    panel.volume.assign(cells, nan);
    panel.valid.assign(cells, 0);

    for (const Bar& bar : bars) {
        bar.validate();
        const auto sit = std::lower_bound(panel.symbols.begin(), panel.symbols.end(), bar.symbol);
        const auto dit = std::lower_bound(panel.calendar.begin(), panel.calendar.end(), bar.date);
        const std::size_t s = static_cast<std::size_t>(sit - panel.symbols.begin());
        const std::size_t d = static_cast<std::size_t>(dit - panel.calendar.begin());
        const std::size_t c = panel.cell(s, d);
        if (panel.valid[c]) {
            throw std::invalid_argument("duplicate bar for " + bar.symbol + " on " +
                                        bar.date.to_string());
        }
        panel.open[c] = bar.open;
        panel.high[c] = bar.high;
        panel.low[c] = bar.low;
        panel.close[c] = bar.close;
        panel.volume[c] = bar.volume;
        panel.valid[c] = 1;
    }
    return panel;
}

PricePanel fill_missing(const SparsePanel& sparse) {
    const std::size_t m = sparse.num_symbols();
    const std::size_t t = sparse.num_days();
    if (m == 0 || t == 0) {
        throw std::invalid_argument("cannot fill an empty panel");
    }

    std::vector<double> open = sparse.open;
    std::vector<double> high = sparse.high;
    std::vector<double> low = sparse.low;
    std::vector<double> close = sparse.close;
    std::vector<double> volume = sparse.volume;
    std::vector<std::uint8_t> mask(m * t, 0);

    for (std::size_t s = 0; s < m; ++s) {
        // Position of the nearest valid cell at or before each day, else the
        // nearest valid one after it.
        std::ptrdiff_t last_valid = -1;
        std::vector<std::ptrdiff_t> source(t, -1);
        for (std::size_t d = 0; d < t; ++d) {
            if (sparse.valid[sparse.cell(s, d)]) {
                last_valid = static_cast<std::ptrdiff_t>(d);
            }
            source[d] = last_valid;
        }
        std::ptrdiff_t next_valid = -1;
        for (std::size_t rd = t; rd-- > 0;) {
            if (sparse.valid[sparse.cell(s, rd)]) {
                next_valid = static_cast<std::ptrdiff_t>(rd);
            }
            if (source[rd] < 0) {
                source[rd] = next_valid;
            }
        }

        for (std::size_t d = 0; d < t; ++d) {
            const std::size_t c = sparse.cell(s, d);
            if (sparse.valid[c]) {
                continue;
            }
            if (source[d] < 0) {
                throw std::invalid_argument("symbol " + sparse.symbols[s] +
                                            " has no valid bars to fill from");
            }
            const std::size_t src = sparse.cell(s, static_cast<std::size_t>(source[d]));
            open[c] = sparse.open[src];
            high[c] = sparse.high[src];
            low[c] = sparse.low[src];
            close[c] = sparse.close[src];
            volume[c] = 0.0;  // a closed symbol trades nothing
            mask[c] = 1;
        }
    }

    return PricePanel(sparse.symbols, sparse.calendar, std::move(open), std::move(high),
                      std::move(low), std::move(close), std::move(volume), std::move(mask));
}

}  // namespace sigfolio
