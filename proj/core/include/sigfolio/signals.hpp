#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sigfolio/calendar.hpp"
#include "sigfolio/panel.hpp"

namespace sigfolio {

// One expert's dated advisory on one symbol. Return and risk are percentages
// as published (e.g. 48.39 means +48.39%); risk is usually negative.
struct SignalRecord {
    std::string expert_id;
    std::string symbol;
    Date start_date;
    Date close_date;
    double expected_return = 0.0;
    double expected_risk = 0.0;

    bool operator==(const SignalRecord&) const = default;
};

// Whose records are averaged together on a day both cover. The narrow
// reading averages only signals from the same expert; the wide one averages
// every expert's live signal on that symbol.
enum class OverlapScope {
    SameExpert,
    AcrossExperts,
};

// Replace day-overlapping records by non-overlapping segments carrying the
// arithmetic mean of every covering record's expected return and risk.
// Records without overlaps pass through unchanged. Output is sorted by
// (expert, symbol, start date) and applying the function twice equals
// applying it once.
std::vector<SignalRecord> resolve_overlaps(std::vector<SignalRecord> records,
                                           OverlapScope scope = OverlapScope::SameExpert);

// Per-day view of one (expert, symbol) pair across the panel calendar.
// expected_return / expected_risk are overlap-averaged percentages, active
// on covered days only. instant_return is the mark-to-market return of the
// expert's own covering signals (mean when several overlap), zero when
// inactive. status is 0 up to and including a signal's close day, then +1 or
// -1 from the following day on, by the sign of the realized return of the
// most recently closed signal (ties keep 0); a newly active signal resets it
// to 0 while it runs.
struct SignalTrack {
    std::string expert_id;
    std::string symbol;
    std::size_t expert_index = 0;
    std::size_t symbol_index = 0;
    std::vector<std::uint8_t> active;
    std::vector<double> expected_return;
    std::vector<double> expected_risk;
    std::vector<double> instant_return;
    std::vector<std::int8_t> status;
};

struct TrackBuildReport {
    std::vector<std::string> warnings;
    std::size_t dropped_records = 0;
};

class SignalTrackSet {
  public:
    SignalTrackSet(std::vector<std::string> expert_ids,
                   std::size_t num_symbols,
                   std::vector<SignalTrack> tracks);

    static SignalTrackSet empty(std::size_t num_symbols);

    const std::vector<std::string>& expert_ids() const { return expert_ids_; }
    std::size_t num_experts() const { return expert_ids_.size(); }
    std::size_t num_symbols() const { return num_symbols_; }
    const std::vector<SignalTrack>& tracks() const { return tracks_; }

    // Null when the expert never signalled that symbol.
    const SignalTrack* find(std::size_t expert_index, std::size_t symbol_index) const;

  private:
    std::vector<std::string> expert_ids_;
    std::size_t num_symbols_;
    std::vector<SignalTrack> tracks_;
    std::vector<std::int32_t> index_;  // num_experts x num_symbols, -1 when absent
};

// Precompute per-day signal features over the panel calendar. Records are
// clipped to the calendar; records entirely outside it are dropped with a
// warning. Expert channel order is the lexicographic order of expert ids,
// frozen here. Unknown symbols are an error.
SignalTrackSet build_signal_tracks(const std::vector<SignalRecord>& records,
                                   const PricePanel& panel,
                                   OverlapScope scope = OverlapScope::SameExpert,
                                   TrackBuildReport* report = nullptr);

}  // namespace sigfolio
