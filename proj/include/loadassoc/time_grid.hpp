#pragma once

#include <cstdint>
#include <string>

#include "loadassoc/errors.hpp"

namespace loadassoc {

constexpr std::int64_t kSecondsPerDay = 86400;

/// Uniform sampling grid: `count` slots of `step` seconds starting at `start`
/// (unix seconds, UTC). Slot i covers [start + i*step, start + (i+1)*step).
struct TimeGrid {
    std::int64_t start = 0;
    std::int64_t step = 0;
    std::int64_t count = 0;

    std::int64_t slot_time(std::int64_t i) const { return start + i * step; }
    std::int64_t end() const { return start + count * step; }
    std::int64_t span_seconds() const { return count * step; }

    // Whole days covered by the grid; a trailing partial day is ignored.
    std::int64_t whole_days() const { return span_seconds() / kSecondsPerDay; }

    std::int64_t slots_per_day() const { return kSecondsPerDay / step; }

    bool operator==(const TimeGrid&) const = default;

    void validate() const {
        if (step <= 0) throw DataError("TimeGrid: step must be > 0");
        if (count < 1) throw DataError("TimeGrid: count must be >= 1");
    }
};

// Calendar day index of an epoch timestamp (UTC + fixed offset).
inline std::int64_t day_of_timestamp(std::int64_t t, std::int64_t utc_offset_seconds = 0) {
    std::int64_t shifted = t + utc_offset_seconds;
    // floor division for pre-1970 timestamps
    return shifted >= 0 ? shifted / kSecondsPerDay
                        : (shifted - kSecondsPerDay + 1) / kSecondsPerDay;
}

} // namespace loadassoc
