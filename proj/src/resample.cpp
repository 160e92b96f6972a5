#include "loadassoc/resample.hpp"

#include <algorithm>

#include "loadassoc/errors.hpp"

namespace loadassoc {

ApplianceSeries resample(const ApplianceSeries& series, const TimeGrid& target) {
    const TimeGrid& src = series.grid;
    src.validate();
    target.validate();
    if (target.step % src.step != 0)
        throw DataError("resample: target step is not an integer multiple of source step");
    if (target.start < src.start || target.end() > src.end())
        throw DataError("resample: target span is not contained in source span");
    if ((target.start - src.start) % src.step != 0)
        throw DataError("resample: target start is not aligned to the source grid");

    const std::int64_t ratio = target.step / src.step;
    const std::int64_t offset = (target.start - src.start) / src.step;

    ApplianceSeries out;
    out.id = series.id;
    out.name = series.name;
    out.grid = target;
    out.power.resize(static_cast<std::size_t>(target.count));
    for (std::int64_t j = 0; j < target.count; ++j) {
        double sum = 0.0;
        const std::int64_t base = offset + j * ratio;
        for (std::int64_t i = 0; i < ratio; ++i) sum += series.power[base + i];
        out.power[static_cast<std::size_t>(j)] = sum / static_cast<double>(ratio);
    }
    return out;
}

TimeGrid forecast_grid(const TimeGrid& source, std::int64_t target_step) {
    TimeGrid g;
    g.start = source.start;
    g.step = target_step;
    g.count = source.whole_days() * (kSecondsPerDay / target_step);
    if (kSecondsPerDay % target_step != 0)
        throw DataError("forecast grid: step must divide a day");
    return g;
}

CalendarFeatures make_calendar(const TimeGrid& grid,
                               const std::vector<std::int64_t>& holiday_days,
                               std::int64_t utc_offset_seconds) {
    CalendarFeatures cal;
    const std::int64_t days = grid.whole_days();
    cal.slots_per_day = static_cast<int>(grid.slots_per_day());
    cal.day_of_week.reserve(static_cast<std::size_t>(days));
    cal.is_holiday.assign(static_cast<std::size_t>(days), false);
    for (std::int64_t d = 0; d < days; ++d) {
        std::int64_t epoch_day =
            day_of_timestamp(grid.start + d * kSecondsPerDay, utc_offset_seconds);
        // 1970-01-01 was a Thursday; 0 = Monday.
        int dow = static_cast<int>(((epoch_day % 7) + 7 + 3) % 7);
        cal.day_of_week.push_back(dow);
    }
    for (std::int64_t h : holiday_days)
        if (h >= 0 && h < days) cal.is_holiday[static_cast<std::size_t>(h)] = true;
    return cal;
}

HouseholdDataset resample_dataset(const HouseholdDataset& ds, std::int64_t target_step,
                                  std::int64_t utc_offset_seconds) {
    TimeGrid target = forecast_grid(ds.grid(), target_step);

    HouseholdDataset out;
    out.total = resample(ds.total, target);
    out.appliances.reserve(ds.appliances.size());
    for (const auto& a : ds.appliances) out.appliances.push_back(resample(a, target));

    if (!ds.weather.empty()) {
        auto one = [&](const std::vector<double>& v) {
            ApplianceSeries tmp;
            tmp.id = "w";
            tmp.power = v;
            tmp.grid = ds.weather.grid;
            TimeGrid wt = target;
            return resample(tmp, wt).power;
        };
        // Weather may carry negative temperatures; resample() itself does not
        // range-check, validation happens at the dataset level for power only.
        out.weather.temperature = one(ds.weather.temperature);
        out.weather.humidity = one(ds.weather.humidity);
        out.weather.dew_point = one(ds.weather.dew_point);
        out.weather.grid = target;
    }

    std::vector<std::int64_t> holidays;
    for (std::size_t d = 0; d < ds.calendar.is_holiday.size(); ++d)
        if (ds.calendar.is_holiday[d]) holidays.push_back(static_cast<std::int64_t>(d));
    out.calendar = make_calendar(target, holidays, utc_offset_seconds);
    out.days = target.whole_days();
    out.gaps = ds.gaps;
    return out;
}

} // namespace loadassoc
