#pragma once

#include "loadassoc/dataset.hpp"

namespace loadassoc {

/// Mean-power downsampling onto a coarser grid. target.step must be an
/// integer multiple of the source step and the target span must lie inside
/// the source span. Each target slot is the arithmetic mean of the source
/// slots it covers, so units stay in watts and energy is conserved.
ApplianceSeries resample(const ApplianceSeries& series, const TimeGrid& target);

// Resamples every channel (and weather) onto the forecast grid and rebuilds
// the per-slot calendar. The forecast grid starts at the dataset start and
// covers its whole days.
HouseholdDataset resample_dataset(const HouseholdDataset& ds, std::int64_t target_step,
                                  std::int64_t utc_offset_seconds = 0);

TimeGrid forecast_grid(const TimeGrid& source, std::int64_t target_step);

// Calendar context for a grid: ISO day-of-week per day, holiday flags from
// explicit day indices.
CalendarFeatures make_calendar(const TimeGrid& grid,
                               const std::vector<std::int64_t>& holiday_days = {},
                               std::int64_t utc_offset_seconds = 0);

} // namespace loadassoc
