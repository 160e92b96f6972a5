#include "loadassoc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "loadassoc/csv.hpp"
#include "loadassoc/errors.hpp"
#include "loadassoc/resample.hpp"

using nlohmann::json;

namespace loadassoc {

std::int64_t parse_date(const std::string& date) {
    int y = 0, m = 0, d = 0;
    if (date.size() != 10 || date[4] != '-' || date[7] != '-')
        throw ConfigError("bad date '" + date + "', expected YYYY-MM-DD");
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
        auto [p, ec] = std::from_chars(date.data() + pos, date.data() + pos + len, out);
        if (ec != std::errc()) throw ConfigError("bad date '" + date + "'");
    };
    num(0, 4, y);
    num(5, 2, m);
    num(8, 2, d);
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw ConfigError("invalid calendar date '" + date + "'");
    return static_cast<std::int64_t>(sys_days{ymd}.time_since_epoch().count()) * kSecondsPerDay;
}

IngestSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("schema parse error in " + path + ": " + e.what());
    }

    IngestSchema s;
    s.timestamp_column = j.value("timestamp_column", std::string("timestamp"));
    auto read_channel = [](const json& c) {
        IngestSchema::Channel ch;
        ch.column = c.at("column").get<std::string>();
        ch.id = c.value("id", ch.column);
        ch.name = c.value("name", std::string());
        return ch;
    };
    if (j.contains("total")) s.total = read_channel(j.at("total"));
    if (!j.contains("appliances") || j.at("appliances").empty())
        throw ConfigError("schema: at least one appliance mapping is required");
    for (const auto& c : j.at("appliances")) s.appliances.push_back(read_channel(c));
    if (j.contains("weather")) {
        const auto& w = j.at("weather");
        s.temperature_column = w.at("temperature").get<std::string>();
        s.humidity_column = w.at("humidity").get<std::string>();
        s.dew_point_column = w.at("dew_point").get<std::string>();
    }
    if (j.contains("holidays")) s.holidays = j.at("holidays").get<std::vector<std::string>>();
    s.utc_offset_seconds = 3600 * j.value("utc_offset_hours", std::int64_t{0});
    s.step_override = j.value("step_seconds", std::int64_t{0});
    s.max_ffill_gap = j.value("max_ffill_gap", std::int64_t{5});
    return s;
}

namespace {

struct RawColumn {
    const CsvTable* table = nullptr;
    int ts_col = -1;
    int col = -1;
};

// Most common positive delta between consecutive timestamps; ties go to the
// smaller delta.
std::int64_t infer_step(const std::vector<std::int64_t>& ts) {
    std::map<std::int64_t, std::int64_t> freq;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        std::int64_t d = ts[i] - ts[i - 1];
        if (d > 0) ++freq[d];
    }
    if (freq.empty()) throw DataError("cannot infer grid step: no increasing timestamps");
    std::int64_t best = 0, best_count = -1;
    for (const auto& [d, n] : freq)
        if (n > best_count) best = d, best_count = n;
    return best;
}

std::vector<std::int64_t> column_timestamps(const CsvTable& t, int ts_col,
                                            const std::string& path) {
    std::vector<std::int64_t> ts;
    ts.reserve(t.rows.size());
    std::int64_t prev = std::numeric_limits<std::int64_t>::min();
    for (const auto& row : t.rows) {
        double v = row[static_cast<std::size_t>(ts_col)];
        if (std::isnan(v)) throw DataError("missing timestamp in " + path);
        auto tt = static_cast<std::int64_t>(v);
        if (tt < prev) throw DataError("timestamps not in nondecreasing order in " + path);
        prev = tt;
        ts.push_back(tt);
    }
    return ts;
}

// Place a raw column onto the grid, then fill missing slots: runs of up to
// max_gap missing samples take the preceding value, longer runs (and leading
// slots) become zero.
std::vector<double> grid_channel(const RawColumn& rc, const std::vector<std::int64_t>& ts,
                                 const TimeGrid& grid, std::int64_t max_gap,
                                 GapReport::Channel& report) {
    std::vector<double> v(static_cast<std::size_t>(grid.count),
                          std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < ts.size(); ++r) {
        std::int64_t off = ts[r] - grid.start;
        if (off < 0 || off % grid.step != 0) continue;
        std::int64_t slot = off / grid.step;
        if (slot >= grid.count) continue;
        v[static_cast<std::size_t>(slot)] = rc.table->rows[r][static_cast<std::size_t>(rc.col)];
    }

    std::size_t i = 0;
    while (i < v.size()) {
        if (!std::isnan(v[i])) {
            if (v[i] < 0) v[i] = 0.0; // meter glitches
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < v.size() && std::isnan(v[j])) ++j;
        const std::int64_t run = static_cast<std::int64_t>(j - i);
        const bool leading = (i == 0);
        if (!leading && run <= max_gap) {
            for (std::size_t k = i; k < j; ++k) v[k] = v[i - 1];
            report.forward_filled += run;
        } else {
            for (std::size_t k = i; k < j; ++k) v[k] = 0.0;
            report.zero_filled += run;
        }
        i = j;
    }
    return v;
}

// Step-function alignment of (possibly coarser) weather observations onto the
// power grid: each slot takes the most recent observation.
std::vector<double> hold_onto_grid(const std::vector<std::int64_t>& obs_ts,
                                   const std::vector<double>& obs_v, const TimeGrid& grid) {
    std::vector<double> out(static_cast<std::size_t>(grid.count), 0.0);
    if (obs_ts.empty()) return out;
    std::size_t k = 0;
    double cur = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t v0 = 0; v0 < obs_v.size(); ++v0)
        if (!std::isnan(obs_v[v0])) {
            cur = obs_v[v0];
            break;
        }
    for (std::int64_t i = 0; i < grid.count; ++i) {
        std::int64_t t = grid.slot_time(i);
        while (k < obs_ts.size() && obs_ts[k] <= t) {
            if (!std::isnan(obs_v[k])) cur = obs_v[k];
            ++k;
        }
        out[static_cast<std::size_t>(i)] = std::isnan(cur) ? 0.0 : cur;
    }
    return out;
}

} // namespace

HouseholdDataset ingest_csv(const std::vector<std::string>& paths, const IngestSchema& schema) {
    if (paths.empty()) throw ConfigError("ingest: no input files");

    std::vector<CsvTable> tables;
    tables.reserve(paths.size());
    for (const auto& p : paths) tables.push_back(read_csv(p));

    auto locate = [&](const std::string& column) -> RawColumn {
        for (std::size_t f = 0; f < tables.size(); ++f) {
            int c = tables[f].column(column);
            if (c < 0) continue;
            int tc = tables[f].column(schema.timestamp_column);
            if (tc < 0)
                throw DataError("file " + paths[f] + " has column '" + column +
                                "' but no timestamp column '" + schema.timestamp_column + "'");
            return {&tables[f], tc, c};
        }
        throw DataError("mapped column '" + column + "' not found in any input file");
    };

    // Per-file timestamp vectors, computed lazily.
    std::vector<std::vector<std::int64_t>> file_ts(tables.size());
    auto timestamps_for = [&](const RawColumn& rc) -> const std::vector<std::int64_t>& {
        auto idx = static_cast<std::size_t>(rc.table - tables.data());
        if (file_ts[idx].empty())
            file_ts[idx] = column_timestamps(*rc.table, rc.ts_col, paths[idx]);
        return file_ts[idx];
    };

    // The grid comes from the file holding the first appliance column.
    RawColumn anchor = locate(schema.appliances.front().column);
    const auto& anchor_ts = timestamps_for(anchor);
    if (anchor_ts.empty()) throw DataError("ingest: no data rows");

    TimeGrid grid;
    grid.start = anchor_ts.front();
    grid.step = schema.step_override > 0 ? schema.step_override : infer_step(anchor_ts);
    grid.count = (anchor_ts.back() - anchor_ts.front()) / grid.step + 1;
    grid.validate();

    HouseholdDataset ds;
    auto add_channel = [&](const IngestSchema::Channel& ch) {
        RawColumn rc = locate(ch.column);
        GapReport::Channel rep;
        rep.id = ch.id;
        ApplianceSeries s;
        s.id = ch.id;
        s.name = ch.name;
        s.grid = grid;
        s.power = grid_channel(rc, timestamps_for(rc), grid, schema.max_ffill_gap, rep);
        ds.gaps.channels.push_back(rep);
        return s;
    };

    for (const auto& ch : schema.appliances) ds.appliances.push_back(add_channel(ch));

    if (schema.total) {
        ds.total = add_channel(*schema.total);
    } else {
        ds.total.id = "TOTAL";
        ds.total.name = "sum of mapped appliances";
        ds.total.grid = grid;
        ds.total.power = ds.appliance_sum();
    }

    if (schema.has_weather()) {
        RawColumn temp = locate(schema.temperature_column);
        RawColumn hum = locate(schema.humidity_column);
        RawColumn dew = locate(schema.dew_point_column);
        auto pull = [&](const RawColumn& rc) {
            std::vector<double> v;
            v.reserve(rc.table->rows.size());
            for (const auto& row : rc.table->rows)
                v.push_back(row[static_cast<std::size_t>(rc.col)]);
            return v;
        };
        ds.weather.temperature = hold_onto_grid(timestamps_for(temp), pull(temp), grid);
        ds.weather.humidity = hold_onto_grid(timestamps_for(hum), pull(hum), grid);
        ds.weather.dew_point = hold_onto_grid(timestamps_for(dew), pull(dew), grid);
        for (double& h : ds.weather.humidity) h = std::clamp(h, 0.0, 100.0);
        ds.weather.grid = grid;
    }

    std::vector<std::int64_t> holiday_days;
    const std::int64_t day0 = day_of_timestamp(grid.start, schema.utc_offset_seconds);
    for (const auto& h : schema.holidays) {
        std::int64_t hd = day_of_timestamp(parse_date(h), 0) - day0;
        holiday_days.push_back(hd);
    }
    ds.calendar = make_calendar(grid, holiday_days, schema.utc_offset_seconds);
    ds.days = grid.whole_days();
    return ds;
}

} // namespace loadassoc
