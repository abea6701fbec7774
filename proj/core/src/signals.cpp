#include "sigfolio/signals.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace sigfolio {

namespace {

auto canonical_key(const SignalRecord& r) {
    return std::tie(r.expert_id, r.symbol, r.start_date, r.close_date, r.expected_return,
                    r.expected_risk);
}

void canonical_sort(std::vector<SignalRecord>& records) {
    std::sort(records.begin(), records.end(), [](const SignalRecord& a, const SignalRecord& b) {
        return canonical_key(a) < canonical_key(b);
    });
}

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

// Record clipped to the panel calendar, with day indices resolved.
struct ClippedRecord {
    const SignalRecord* record;
    std::size_t symbol_index;
    std::size_t start_day;
    std::size_t close_day;
    double realized_return;  // close(close_day) vs close(start_day)

    bool covers(std::size_t day) const { return start_day <= day && day <= close_day; }
};

}  // namespace

std::vector<SignalRecord> resolve_overlaps(std::vector<SignalRecord> records,
                                           OverlapScope scope) {
    for (const SignalRecord& r : records) {
        if (r.close_date < r.start_date) {
            throw std::invalid_argument("signal for " + r.symbol + " from " + r.expert_id +
                                        " closes before it starts");
        }
    }
    canonical_sort(records);

    std::vector<SignalRecord> resolved;
    resolved.reserve(records.size());

    std::size_t group_begin = 0;
    while (group_begin < records.size()) {
        std::size_t group_end = group_begin;
        const auto& head = records[group_begin];
        while (group_end < records.size() && records[group_end].expert_id == head.expert_id &&
               records[group_end].symbol == head.symbol) {
            ++group_end;
        }

        // Records whose values are averaged in: the group itself, or every
        // record on the same symbol when averaging across experts.
        std::vector<const SignalRecord*> contributing;
        if (scope == OverlapScope::SameExpert) {
            for (std::size_t i = group_begin; i < group_end; ++i) {
                contributing.push_back(&records[i]);
            }
        } else {
            for (const SignalRecord& r : records) {
                if (r.symbol == head.symbol) {
                    contributing.push_back(&r);
                }
            }
        }

        std::int32_t min_day = records[group_begin].start_date.days_since_epoch();
        std::int32_t max_day = records[group_begin].close_date.days_since_epoch();
        for (std::size_t i = group_begin; i < group_end; ++i) {
            min_day = std::min(min_day, records[i].start_date.days_since_epoch());
            max_day = std::max(max_day, records[i].close_date.days_since_epoch());
        }

        // Sweep days; emit a segment per maximal run with a constant covering
        // set (own and contributing alike).
        std::vector<std::size_t> run_own, run_contrib;
        std::int32_t run_start = 0;
        bool in_run = false;
        auto covering_own = [&](std::int32_t day) {
            std::vector<std::size_t> out;
            for (std::size_t i = group_begin; i < group_end; ++i) {
                if (records[i].start_date.days_since_epoch() <= day &&
                    day <= records[i].close_date.days_since_epoch()) {
                    out.push_back(i);
                }
            }
            return out;
        };
        auto covering_contrib = [&](std::int32_t day) {
            std::vector<std::size_t> out;
            for (std::size_t i = 0; i < contributing.size(); ++i) {
                if (contributing[i]->start_date.days_since_epoch() <= day &&
                    day <= contributing[i]->close_date.days_since_epoch()) {
                    out.push_back(i);
                }
            }
            return out;
        };
        auto emit = [&](std::int32_t end_day) {
            double ret_sum = 0.0;
            double risk_sum = 0.0;
            for (const std::size_t c : run_contrib) {
                ret_sum += contributing[c]->expected_return;
                risk_sum += contributing[c]->expected_risk;
            }
            const double n = static_cast<double>(run_contrib.size());
            resolved.push_back(SignalRecord{head.expert_id, head.symbol,
                                            Date::from_days(run_start), Date::from_days(end_day),
                                            ret_sum / n, risk_sum / n});
        };

        for (std::int32_t day = min_day; day <= max_day; ++day) {
            auto own = covering_own(day);
            if (own.empty()) {
                if (in_run) {
                    emit(day - 1);
                    in_run = false;
                }
                continue;
            }
            auto contrib = covering_contrib(day);
            if (in_run && (own != run_own || contrib != run_contrib)) {
                emit(day - 1);
                in_run = false;
            }
            if (!in_run) {
                run_own = std::move(own);
                run_contrib = std::move(contrib);
                run_start = day;
                in_run = true;
            }
        }
        if (in_run) {
            emit(max_day);
        }

        group_begin = group_end;
    }
    return resolved;
}

SignalTrackSet::SignalTrackSet(std::vector<std::string> expert_ids,
                               std::size_t num_symbols,
                               std::vector<SignalTrack> tracks)
    : expert_ids_(std::move(expert_ids)),
      num_symbols_(num_symbols),
      tracks_(std::move(tracks)),
      index_(expert_ids_.size() * num_symbols, -1) {
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        const SignalTrack& track = tracks_[i];
        if (track.expert_index >= expert_ids_.size() || track.symbol_index >= num_symbols_) {
            throw std::invalid_argument("signal track indexes out of range");
        }
        index_[track.expert_index * num_symbols_ + track.symbol_index] =
            static_cast<std::int32_t>(i);
    }
}

SignalTrackSet SignalTrackSet::empty(std::size_t num_symbols) {
    return SignalTrackSet({}, num_symbols, {});
}

const SignalTrack* SignalTrackSet::find(std::size_t expert_index,
                                        std::size_t symbol_index) const {
    if (expert_index >= expert_ids_.size() || symbol_index >= num_symbols_) {
        return nullptr;
    }
    const std::int32_t slot = index_[expert_index * num_symbols_ + symbol_index];
    return slot < 0 ? nullptr : &tracks_[static_cast<std::size_t>(slot)];
}

SignalTrackSet build_signal_tracks(const std::vector<SignalRecord>& records,
                                   const PricePanel& panel,
                                   OverlapScope scope,
                                   TrackBuildReport* report) {
    std::vector<SignalRecord> sorted = records;
    canonical_sort(sorted);

    // Expert channel order is frozen from the full record set, before any
    // clipping, so the layout does not depend on the panel date range.
    std::vector<std::string> expert_ids;
    for (const SignalRecord& r : sorted) {
        expert_ids.push_back(r.expert_id);
    }
    std::sort(expert_ids.begin(), expert_ids.end());
    expert_ids.erase(std::unique(expert_ids.begin(), expert_ids.end()), expert_ids.end());

    const std::size_t num_days = panel.num_days();
    std::vector<ClippedRecord> clipped;
    clipped.reserve(sorted.size());
    for (const SignalRecord& r : sorted) {
        if (r.close_date < r.start_date) {
            throw std::invalid_argument("signal for " + r.symbol + " from " + r.expert_id +
                                        " closes before it starts");
        }
        const auto symbol = panel.symbol_index(r.symbol);
        if (!symbol) {
            throw std::invalid_argument("signal references unknown symbol " + r.symbol);
        }
        const std::size_t start = panel.lower_bound_day(r.start_date);
        std::size_t end = panel.lower_bound_day(r.close_date);
        if (end == num_days || (end < num_days && panel.calendar()[end] != r.close_date)) {
            if (end == 0) {
                end = num_days;  // closes before the calendar starts
            } else {
                --end;
            }
        }
        if (start >= num_days || end >= num_days || start > end) {
            if (report) {
                report->warnings.push_back("signal " + r.expert_id + "/" + r.symbol + " " +
                                           r.start_date.to_string() + ".." +
                                           r.close_date.to_string() +
                                           " lies outside the panel calendar; dropped");
                ++report->dropped_records;
            }
            continue;
        }
        const double start_close = panel.close(*symbol, start);
        const double end_close = panel.close(*symbol, end);
        clipped.push_back(ClippedRecord{&r, *symbol, start, end,
                                        (end_close - start_close) / start_close});
    }

    // Group by (expert, symbol); sorted order of `sorted` keeps groups sorted.
    std::vector<SignalTrack> tracks;
    std::size_t begin = 0;
    while (begin < clipped.size()) {
        std::size_t end = begin;
        const SignalRecord& head = *clipped[begin].record;
        while (end < clipped.size() && clipped[end].record->expert_id == head.expert_id &&
               clipped[end].record->symbol == head.symbol) {
            ++end;
        }

        std::vector<const ClippedRecord*> contributing;
        if (scope == OverlapScope::SameExpert) {
            for (std::size_t i = begin; i < end; ++i) {
                contributing.push_back(&clipped[i]);
            }
        } else {
            for (const ClippedRecord& c : clipped) {
                if (c.record->symbol == head.symbol) {
                    contributing.push_back(&c);
                }
            }
        }

        SignalTrack track;
        track.expert_id = head.expert_id;
        track.symbol = head.symbol;
        track.expert_index = static_cast<std::size_t>(
            std::lower_bound(expert_ids.begin(), expert_ids.end(), head.expert_id) -
            expert_ids.begin());
        track.symbol_index = clipped[begin].symbol_index;
        track.active.assign(num_days, 0);
        track.expected_return.assign(num_days, 0.0);
        track.expected_risk.assign(num_days, 0.0);
        track.instant_return.assign(num_days, 0.0);
        track.status.assign(num_days, 0);

        const std::size_t s = track.symbol_index;
        for (std::size_t d = 0; d < num_days; ++d) {
            double instant_sum = 0.0;
            std::size_t own_count = 0;
            for (std::size_t i = begin; i < end; ++i) {
                if (clipped[i].covers(d)) {
                    const double anchor = panel.close(s, clipped[i].start_day);
                    instant_sum += (panel.close(s, d) - anchor) / anchor;
                    ++own_count;
                }
            }
            if (own_count > 0) {
                double ret_sum = 0.0;
                double risk_sum = 0.0;
                std::size_t contrib_count = 0;
                for (const ClippedRecord* c : contributing) {
                    if (c->covers(d)) {
                        ret_sum += c->record->expected_return;
                        risk_sum += c->record->expected_risk;
                        ++contrib_count;
                    }
                }
                track.active[d] = 1;
                track.expected_return[d] = ret_sum / static_cast<double>(contrib_count);
                track.expected_risk[d] = risk_sum / static_cast<double>(contrib_count);
                track.instant_return[d] = instant_sum / static_cast<double>(own_count);
                track.status[d] = 0;
            } else {
                // Outcome of the most recently closed own signal, if any.
                bool found = false;
                std::size_t latest_close = 0;
                double realized_sum = 0.0;
                for (std::size_t i = begin; i < end; ++i) {
                    if (clipped[i].close_day >= d) {
                        continue;
                    }
                    if (!found || clipped[i].close_day > latest_close) {
                        found = true;
                        latest_close = clipped[i].close_day;
                        realized_sum = clipped[i].realized_return;
                    } else if (clipped[i].close_day == latest_close) {
                        realized_sum += clipped[i].realized_return;
                    }
                }
                track.status[d] = found ? static_cast<std::int8_t>(sign_of(realized_sum)) : 0;
            }
        }

        tracks.push_back(std::move(track));
        begin = end;
    }

    return SignalTrackSet(std::move(expert_ids), panel.num_symbols(), std::move(tracks));
}

}  // namespace sigfolio
