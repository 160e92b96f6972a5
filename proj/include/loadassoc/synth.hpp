#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadassoc/dataset.hpp"
#include "loadassoc/events.hpp"

namespace loadassoc {

/// Planted-structure household generator: appliances in the same cluster
/// co-fire around shared per-day anchor events, so the association matrix,
/// the clustering and the end-to-end comparison all have known ground truth.
struct SynthSpec {
    struct Appliance {
        std::string id;
        double power_watts = 500.0;
        double startups_per_day = 2.0;
        std::int64_t duration_slots = 30;
        int cluster = 0;
    };

    std::vector<Appliance> appliances;
    double co_activation = 0.8;          // P(member fires at a cluster anchor)
    std::int64_t target_window_s = 1800; // co-fired startups land within this window
    std::int64_t days = 60;
    double noise_sigma = 0.0;            // gaussian watts on the power traces
    std::uint64_t seed = 1;
    std::int64_t step_seconds = 60;
    std::int64_t start = 1577836800;     // 2020-01-01 00:00 UTC
    bool daily_pattern = false;          // deterministic time-of-day anchors with
                                         // a weekday factor (for forecasting runs)

    int cluster_count() const;
    void validate() const;
};

struct SynthResult {
    HouseholdDataset dataset;
    std::vector<int> planted_labels;         // per appliance, spec order
    std::vector<EventStream> planted_events; // per appliance, spec order
};

SynthResult generate(const SynthSpec& spec);

SynthSpec load_synth_spec(const std::string& path);
void save_synth_spec(const SynthSpec& spec, const std::string& path);

/// Noise-free slot series: daily template scaled by a per-weekday factor.
/// `start_dow` is the day-of-week (0=Monday) of day 0.
std::vector<double> pattern_series(std::int64_t days, int slots_per_day,
                                   const std::vector<double>& daily_template,
                                   const std::vector<double>& weekday_factor, int start_dow);

std::uint64_t splitmix64(std::uint64_t x);

} // namespace loadassoc
