#include "loadassoc/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "loadassoc/csv.hpp"
#include "loadassoc/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace loadassoc {

void ApplianceSeries::validate() const {
    grid.validate();
    if (static_cast<std::int64_t>(power.size()) != grid.count)
        throw DataError("series '" + id + "': length does not match grid");
    for (double v : power)
        if (!std::isfinite(v) || v < 0)
            throw DataError("series '" + id + "': power values must be finite and >= 0");
}

void WeatherSeries::validate() const {
    if (empty()) return;
    grid.validate();
    const auto n = static_cast<std::size_t>(grid.count);
    if (temperature.size() != n || humidity.size() != n || dew_point.size() != n)
        throw DataError("weather: series length does not match grid");
    for (double h : humidity)
        if (h < 0.0 || h > 100.0) throw DataError("weather: humidity outside [0, 100]");
}

void CalendarFeatures::validate() const {
    if (day_of_week.size() != is_holiday.size())
        throw DataError("calendar: day_of_week and is_holiday length mismatch");
    for (int d : day_of_week)
        if (d < 0 || d > 6) throw DataError("calendar: day_of_week outside [0, 6]");
}

std::int64_t GapReport::total_filled() const {
    std::int64_t n = 0;
    for (const auto& c : channels) n += c.forward_filled + c.zero_filled;
    return n;
}

const ApplianceSeries* HouseholdDataset::find(const std::string& id) const {
    for (const auto& a : appliances)
        if (a.id == id) return &a;
    return nullptr;
}

std::vector<double> HouseholdDataset::appliance_sum() const {
    std::vector<double> sum(static_cast<std::size_t>(grid().count), 0.0);
    for (const auto& a : appliances)
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += a.power[i];
    return sum;
}

void HouseholdDataset::validate() const {
    total.validate();
    for (const auto& a : appliances) {
        a.validate();
        if (a.grid != total.grid)
            throw DataError("series '" + a.id + "': grid differs from dataset grid");
    }
    weather.validate();
    calendar.validate();
    if (days != grid().whole_days())
        throw DataError("dataset: days does not match grid span");
}

namespace {

json grid_to_json(const TimeGrid& g) {
    return json{{"start", g.start}, {"step", g.step}, {"count", g.count}};
}

TimeGrid grid_from_json(const json& j) {
    TimeGrid g;
    g.start = j.at("start").get<std::int64_t>();
    g.step = j.at("step").get<std::int64_t>();
    g.count = j.at("count").get<std::int64_t>();
    return g;
}

void save_channel(const fs::path& dir, const ApplianceSeries& s) {
    std::vector<std::vector<double>> rows;
    rows.reserve(s.power.size());
    for (std::int64_t i = 0; i < s.grid.count; ++i)
        rows.push_back({static_cast<double>(s.grid.slot_time(i)), s.power[i]});
    write_csv((dir / ("channel_" + s.id + ".csv")).string(), {"timestamp", "watts"}, rows);
}

std::vector<double> load_channel(const fs::path& dir, const std::string& id,
                                 const TimeGrid& grid) {
    CsvTable t = read_csv((dir / ("channel_" + id + ".csv")).string());
    if (static_cast<std::int64_t>(t.rows.size()) != grid.count)
        throw DataError("channel '" + id + "': row count does not match grid");
    std::vector<double> power(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) power[i] = t.rows[i][1];
    return power;
}

} // namespace

void save_dataset(const HouseholdDataset& ds, const std::string& dir_str) {
    fs::path dir(dir_str);
    fs::create_directories(dir);

    json meta;
    meta["format_version"] = 1;
    meta["grid"] = grid_to_json(ds.grid());
    meta["days"] = ds.days;
    meta["total"] = {{"id", ds.total.id}, {"name", ds.total.name}};
    json apps = json::array();
    for (const auto& a : ds.appliances) apps.push_back({{"id", a.id}, {"name", a.name}});
    meta["appliances"] = apps;
    meta["weather_present"] = !ds.weather.empty();
    if (!ds.weather.empty()) meta["weather_grid"] = grid_to_json(ds.weather.grid);
    meta["calendar"] = {{"day_of_week", ds.calendar.day_of_week},
                        {"is_holiday", std::vector<int>(ds.calendar.is_holiday.begin(),
                                                        ds.calendar.is_holiday.end())},
                        {"slots_per_day", ds.calendar.slots_per_day}};
    json gaps = json::array();
    for (const auto& c : ds.gaps.channels)
        gaps.push_back({{"id", c.id},
                        {"forward_filled", c.forward_filled},
                        {"zero_filled", c.zero_filled}});
    meta["gaps"] = gaps;

    std::ofstream out(dir / "dataset.json");
    out << meta.dump(2) << '\n';
    if (!out) throw DataError("cannot write dataset.json in " + dir_str);

    save_channel(dir, ds.total);
    for (const auto& a : ds.appliances) save_channel(dir, a);

    if (!ds.weather.empty()) {
        std::vector<std::vector<double>> rows;
        rows.reserve(static_cast<std::size_t>(ds.weather.grid.count));
        for (std::int64_t i = 0; i < ds.weather.grid.count; ++i)
            rows.push_back({static_cast<double>(ds.weather.grid.slot_time(i)),
                            ds.weather.temperature[i], ds.weather.humidity[i],
                            ds.weather.dew_point[i]});
        write_csv((dir / "weather.csv").string(),
                  {"timestamp", "temperature", "humidity", "dew_point"}, rows);
    }
}

HouseholdDataset load_dataset(const std::string& dir_str) {
    fs::path dir(dir_str);
    std::ifstream in(dir / "dataset.json");
    if (!in) throw DataError("missing dataset.json in " + dir_str);
    json meta = json::parse(in);

    HouseholdDataset ds;
    TimeGrid grid = grid_from_json(meta.at("grid"));
    ds.days = meta.at("days").get<std::int64_t>();

    ds.total.id = meta.at("total").at("id").get<std::string>();
    ds.total.name = meta.at("total").at("name").get<std::string>();
    ds.total.grid = grid;
    ds.total.power = load_channel(dir, ds.total.id, grid);

    for (const auto& a : meta.at("appliances")) {
        ApplianceSeries s;
        s.id = a.at("id").get<std::string>();
        s.name = a.at("name").get<std::string>();
        s.grid = grid;
        s.power = load_channel(dir, s.id, grid);
        ds.appliances.push_back(std::move(s));
    }

    if (meta.at("weather_present").get<bool>()) {
        ds.weather.grid = grid_from_json(meta.at("weather_grid"));
        CsvTable t = read_csv((dir / "weather.csv").string());
        for (const auto& row : t.rows) {
            ds.weather.temperature.push_back(row[1]);
            ds.weather.humidity.push_back(row[2]);
            ds.weather.dew_point.push_back(row[3]);
        }
        if (static_cast<std::int64_t>(ds.weather.temperature.size()) != ds.weather.grid.count)
            throw DataError("weather.csv row count does not match weather grid");
    }

    const auto& cal = meta.at("calendar");
    ds.calendar.day_of_week = cal.at("day_of_week").get<std::vector<int>>();
    for (int h : cal.at("is_holiday").get<std::vector<int>>())
        ds.calendar.is_holiday.push_back(h != 0);
    ds.calendar.slots_per_day = cal.at("slots_per_day").get<int>();

    for (const auto& g : meta.at("gaps")) {
        GapReport::Channel c;
        c.id = g.at("id").get<std::string>();
        c.forward_filled = g.at("forward_filled").get<std::int64_t>();
        c.zero_filled = g.at("zero_filled").get<std::int64_t>();
        ds.gaps.channels.push_back(std::move(c));
    }

    ds.validate();
    return ds;
}

} // namespace loadassoc
