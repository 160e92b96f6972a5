#include "loadassoc/metrics.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "loadassoc/csv.hpp"
#include "loadassoc/errors.hpp"

using nlohmann::json;

namespace loadassoc {

double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw DataError("rmse: length mismatch");
    if (pred.empty()) throw DataError("rmse: empty input");
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(pred.size()));
}

double mae(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size()) throw DataError("mae: length mismatch");
    if (pred.empty()) throw DataError("mae: empty input");
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) abs_sum += std::fabs(pred[i] - truth[i]);
    return abs_sum / static_cast<double>(pred.size());
}

EvalReport compare_methods(const std::vector<ForecastSeries>& cluster_forecasts,
                           const ForecastSeries& overall_forecast,
                           const ForecastSeries& truth_total, int slots_per_day) {
    if (cluster_forecasts.empty())
        throw DataError("compare_methods: no cluster forecasts (coverage gap)");
    const std::size_t n = truth_total.values.size();
    if (overall_forecast.values.size() != n || overall_forecast.first_day != truth_total.first_day)
        throw DataError("compare_methods: overall forecast misaligned with truth");
    for (const auto& c : cluster_forecasts)
        if (c.values.size() != n || c.first_day != truth_total.first_day)
            throw DataError("compare_methods: cluster forecast '" + c.id +
                            "' misaligned with truth");
    if (slots_per_day < 1 || n % static_cast<std::size_t>(slots_per_day) != 0)
        throw DataError("compare_methods: series length not a whole number of days");

    std::vector<double> proposed(n, 0.0);
    for (const auto& c : cluster_forecasts)
        for (std::size_t i = 0; i < n; ++i) proposed[i] += c.values[i];

    EvalReport r;
    r.first_day = truth_total.first_day;
    r.slots_per_day = slots_per_day;
    r.days = static_cast<std::int64_t>(n) / slots_per_day;
    r.overall = {rmse(overall_forecast.values, truth_total.values),
                 mae(overall_forecast.values, truth_total.values)};
    r.proposed = {rmse(proposed, truth_total.values), mae(proposed, truth_total.values)};
    r.delta_rmse_pct = (r.proposed.rmse - r.overall.rmse) / r.overall.rmse * 100.0;
    r.delta_mae_pct = (r.proposed.mae - r.overall.mae) / r.overall.mae * 100.0;

    auto breakdown = [&](const std::vector<double>& pred, std::vector<double>& per_day,
                         std::vector<double>& per_slot) {
        const auto spd = static_cast<std::size_t>(slots_per_day);
        per_day.assign(static_cast<std::size_t>(r.days), 0.0);
        per_slot.assign(spd, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pred[i] - truth_total.values[i];
            per_day[i / spd] += d * d;
            per_slot[i % spd] += d * d;
        }
        for (auto& v : per_day) v = std::sqrt(v / static_cast<double>(spd));
        for (auto& v : per_slot) v = std::sqrt(v / static_cast<double>(r.days));
    };
    breakdown(overall_forecast.values, r.per_day_rmse_overall, r.per_slot_rmse_overall);
    breakdown(proposed, r.per_day_rmse_proposed, r.per_slot_rmse_proposed);

    // RMSE >= MAE by Cauchy-Schwarz; a violation means a scoring bug
    if (r.overall.rmse < r.overall.mae - 1e-9 || r.proposed.rmse < r.proposed.mae - 1e-9)
        throw StageError("compare_methods: RMSE < MAE, metric implementation error");
    return r;
}

std::int64_t split_slot(const TimeGrid& grid, int train_months) {
    using namespace std::chrono;
    const std::int64_t day_sec = grid.start - day_of_timestamp(grid.start) * kSecondsPerDay;
    sys_days start_day{days{day_of_timestamp(grid.start)}};
    year_month_day ymd{start_day};
    ymd += months{train_months};
    if (!ymd.ok()) ymd = ymd.year() / ymd.month() / last; // clamp to month end
    const std::int64_t split_ts =
        static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * kSecondsPerDay +
        day_sec;
    if ((split_ts - grid.start) % grid.step != 0)
        throw DataError("split: month boundary does not align with the grid");
    return (split_ts - grid.start) / grid.step;
}

HouseholdDataset slice_dataset(const HouseholdDataset& ds, std::int64_t first_slot,
                               std::int64_t count) {
    const TimeGrid& g = ds.grid();
    if (first_slot < 0 || count < 1 || first_slot + count > g.count)
        throw DataError("slice_dataset: slot range out of bounds");

    TimeGrid sub{g.slot_time(first_slot), g.step, count};
    auto cut = [&](const ApplianceSeries& s) {
        ApplianceSeries out;
        out.id = s.id;
        out.name = s.name;
        out.grid = sub;
        out.power.assign(s.power.begin() + static_cast<std::ptrdiff_t>(first_slot),
                         s.power.begin() + static_cast<std::ptrdiff_t>(first_slot + count));
        return out;
    };

    HouseholdDataset out;
    out.total = cut(ds.total);
    for (const auto& a : ds.appliances) out.appliances.push_back(cut(a));
    if (!ds.weather.empty()) {
        auto cutv = [&](const std::vector<double>& v) {
            return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first_slot),
                                       v.begin() + static_cast<std::ptrdiff_t>(first_slot + count));
        };
        out.weather.temperature = cutv(ds.weather.temperature);
        out.weather.humidity = cutv(ds.weather.humidity);
        out.weather.dew_point = cutv(ds.weather.dew_point);
        out.weather.grid = sub;
    }
    const std::int64_t spd = g.slots_per_day();
    const std::int64_t first_day = first_slot / spd;
    out.days = sub.whole_days();
    const auto day_end = std::min<std::int64_t>(
        first_day + out.days, static_cast<std::int64_t>(ds.calendar.day_of_week.size()));
    for (std::int64_t d = first_day; d < day_end; ++d) {
        out.calendar.day_of_week.push_back(ds.calendar.day_of_week[static_cast<std::size_t>(d)]);
        out.calendar.is_holiday.push_back(ds.calendar.is_holiday[static_cast<std::size_t>(d)]);
    }
    out.calendar.slots_per_day = ds.calendar.slots_per_day;
    out.gaps = ds.gaps;
    return out;
}

std::pair<HouseholdDataset, HouseholdDataset> split_dataset(const HouseholdDataset& dataset,
                                                            int train_months) {
    if (train_months < 1) throw ConfigError("split: train_months must be >= 1");
    const std::int64_t at = split_slot(dataset.grid(), train_months);
    if (at <= 0 || at >= dataset.grid().count)
        throw DataError("split: dataset does not span more than the training period");
    return {slice_dataset(dataset, 0, at),
            slice_dataset(dataset, at, dataset.grid().count - at)};
}

void save_report(const EvalReport& r, const std::string& json_path) {
    json j;
    j["test_period"] = {{"first_day", r.first_day},
                        {"days", r.days},
                        {"slots_per_day", r.slots_per_day}};
    j["overall"] = {{"rmse", r.overall.rmse}, {"mae", r.overall.mae}};
    j["proposed"] = {{"rmse", r.proposed.rmse}, {"mae", r.proposed.mae}};
    j["delta_rmse_pct"] = r.delta_rmse_pct;
    j["delta_mae_pct"] = r.delta_mae_pct;
    j["per_day_rmse"] = {{"overall", r.per_day_rmse_overall},
                         {"proposed", r.per_day_rmse_proposed}};
    j["per_slot_rmse"] = {{"overall", r.per_slot_rmse_overall},
                          {"proposed", r.per_slot_rmse_proposed}};
    std::ofstream out(json_path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write " + json_path);
}

void save_forecast(const ForecastSeries& f, const TimeGrid& grid, const std::string& csv_path) {
    const std::int64_t spd = grid.slots_per_day();
    std::vector<std::vector<double>> rows;
    rows.reserve(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const std::int64_t day = f.first_day + static_cast<std::int64_t>(i) / spd;
        const std::int64_t slot = static_cast<std::int64_t>(i) % spd;
        rows.push_back({static_cast<double>(day), static_cast<double>(slot),
                        static_cast<double>(grid.start + day * kSecondsPerDay + slot * grid.step),
                        f.values[i]});
    }
    write_csv(csv_path, {"day", "slot", "timestamp", "watts"}, rows);
}

ForecastSeries load_forecast(const std::string& csv_path, const TimeGrid&) {
    CsvTable t = read_csv(csv_path);
    ForecastSeries f;
    if (t.rows.empty()) throw DataError("empty forecast file: " + csv_path);
    f.first_day = static_cast<std::int64_t>(t.rows.front()[0]);
    for (const auto& row : t.rows) f.values.push_back(row[3]);
    return f;
}

} // namespace loadassoc
