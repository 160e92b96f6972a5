#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loadassoc/dataset.hpp"

namespace loadassoc {

/// Column mapping for the raw CSV inputs. Loaded from a JSON schema file;
/// see README for the layout. Timestamps are unix seconds, UTC.
struct IngestSchema {
    struct Channel {
        std::string column;
        std::string id;
        std::string name;
    };

    std::string timestamp_column = "timestamp";
    std::optional<Channel> total;  // synthesized from the appliance sum if absent
    std::vector<Channel> appliances;
    std::string temperature_column; // weather columns are optional as a group
    std::string humidity_column;
    std::string dew_point_column;
    std::vector<std::string> holidays; // "YYYY-MM-DD"
    std::int64_t utc_offset_seconds = 0;
    std::int64_t step_override = 0;    // 0 = infer from the data
    std::int64_t max_ffill_gap = 5;    // longer gaps are zero-filled

    bool has_weather() const { return !temperature_column.empty(); }
};

IngestSchema load_schema(const std::string& path);

/// Reads the raw CSVs, places every mapped channel on the inferred source
/// grid, fills gaps (forward-fill up to max_ffill_gap samples, zeros beyond)
/// and attaches weather by holding the last observation at each power slot.
HouseholdDataset ingest_csv(const std::vector<std::string>& paths, const IngestSchema& schema);

// "YYYY-MM-DD" -> unix seconds at 00:00 UTC.
std::int64_t parse_date(const std::string& date);

} // namespace loadassoc
