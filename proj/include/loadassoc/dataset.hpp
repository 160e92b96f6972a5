#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadassoc/time_grid.hpp"

namespace loadassoc {

/// One appliance channel: mean real power (watts) per grid slot.
struct ApplianceSeries {
    std::string id;   // channel code, e.g. "CWE"
    std::string name; // free text
    std::vector<double> power;
    TimeGrid grid;

    void validate() const;
};

struct WeatherSeries {
    std::vector<double> temperature; // degrees C
    std::vector<double> humidity;    // percent, [0, 100]
    std::vector<double> dew_point;   // degrees C
    TimeGrid grid;

    bool empty() const { return temperature.empty(); }
    void validate() const;
};

/// Per-day and per-slot calendar context on the forecast grid.
struct CalendarFeatures {
    std::vector<int> day_of_week;  // 0=Monday .. 6=Sunday, one per day
    std::vector<bool> is_holiday;  // one per day
    int slots_per_day = 0;         // slot_of_day = slot index % slots_per_day

    void validate() const;
};

struct GapReport {
    struct Channel {
        std::string id;
        std::int64_t forward_filled = 0;
        std::int64_t zero_filled = 0;
    };
    std::vector<Channel> channels;
    std::int64_t total_filled() const;
};

struct HouseholdDataset {
    std::vector<ApplianceSeries> appliances;
    ApplianceSeries total; // main meter
    WeatherSeries weather;
    CalendarFeatures calendar;
    std::int64_t days = 0; // N^d, whole days spanned by the grid
    GapReport gaps;

    const TimeGrid& grid() const { return total.grid; }
    const ApplianceSeries* find(const std::string& id) const;

    // Elementwise sum of all appliance channels (not the main meter).
    std::vector<double> appliance_sum() const;

    void validate() const;
};

// Canonical on-disk dump: one CSV per channel plus dataset.json with grid,
// channel list, calendar and the gap report. Deterministic byte-for-byte.
void save_dataset(const HouseholdDataset& ds, const std::string& dir);
HouseholdDataset load_dataset(const std::string& dir);

} // namespace loadassoc
