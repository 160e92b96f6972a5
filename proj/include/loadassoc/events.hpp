#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadassoc/dataset.hpp"

namespace loadassoc {

/// ON/OFF state of one appliance plus its start-up/shut-down instants.
/// A startup is the timestamp of the first slot of an ON run; the matching
/// shutdown is the first OFF slot after the run (absent if the series ends ON).
struct EventStream {
    std::string appliance_id;
    std::vector<std::int64_t> startups;  // epoch seconds, strictly increasing
    std::vector<std::int64_t> shutdowns;
    std::vector<bool> on_mask;           // one flag per source slot
    TimeGrid grid;

    void validate() const;
};

struct ExclusionReport {
    std::vector<std::string> excluded;
    std::vector<std::string> retained;
    double rule_threshold = 0.0; // watts, applied to the 99th-percentile power
    std::size_t retained_count() const { return retained.size(); }
};

/// Thresholds the power trace (ON iff power > on_threshold) and debounces it:
/// ON runs shorter than min_duration are suppressed first, then OFF runs
/// shorter than min_duration are filled. The result has no run shorter than
/// min_duration, so re-extraction is a fixed point.
EventStream extract_events(const ApplianceSeries& series, double on_threshold,
                           std::int64_t min_duration);

/// 99th-percentile-peak screen (single spikes cannot rescue a channel).
/// Appliances below the threshold are excluded from association mining but
/// stay in the dataset for later cluster attachment.
ExclusionReport exclude_low_power(const HouseholdDataset& dataset, double peak_threshold);

double percentile(std::vector<double> values, double q); // nearest-rank, q in (0,1]

// events.csv round-trip: appliance_id,kind,timestamp.
void save_events(const std::vector<EventStream>& streams, const std::string& path);
std::vector<EventStream> load_events(const std::string& path, const TimeGrid& grid);

} // namespace loadassoc
