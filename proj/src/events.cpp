#include "loadassoc/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "loadassoc/errors.hpp"

namespace loadassoc {

void EventStream::validate() const {
    for (std::size_t i = 1; i < startups.size(); ++i)
        if (startups[i] <= startups[i - 1])
            throw DataError("event stream '" + appliance_id + "': startups not increasing");
    if (shutdowns.size() > startups.size())
        throw DataError("event stream '" + appliance_id + "': more shutdowns than startups");
    for (std::size_t i = 0; i < shutdowns.size(); ++i)
        if (shutdowns[i] <= startups[i])
            throw DataError("event stream '" + appliance_id + "': shutdown precedes startup");
}

namespace {

// Suppress runs of `state` shorter than min_duration. Leading/trailing runs
// are treated the same as interior ones.
void suppress_short_runs(std::vector<bool>& mask, bool state, std::int64_t min_duration) {
    std::size_t i = 0;
    while (i < mask.size()) {
        std::size_t j = i;
        while (j < mask.size() && mask[j] == mask[i]) ++j;
        if (mask[i] == state && static_cast<std::int64_t>(j - i) < min_duration)
            for (std::size_t k = i; k < j; ++k) mask[k] = !state;
        i = j;
    }
}

} // namespace

EventStream extract_events(const ApplianceSeries& series, double on_threshold,
                           std::int64_t min_duration) {
    if (on_threshold <= 0) throw ConfigError("extract_events: on_threshold must be > 0");
    if (min_duration < 1) throw ConfigError("extract_events: min_duration must be >= 1");

    EventStream ev;
    ev.appliance_id = series.id;
    ev.grid = series.grid;
    ev.on_mask.resize(series.power.size());
    for (std::size_t i = 0; i < series.power.size(); ++i)
        ev.on_mask[i] = series.power[i] > on_threshold;

    if (min_duration > 1) {
        suppress_short_runs(ev.on_mask, true, min_duration);
        suppress_short_runs(ev.on_mask, false, min_duration);
    }

    bool prev = false;
    for (std::size_t i = 0; i < ev.on_mask.size(); ++i) {
        if (ev.on_mask[i] && !prev) ev.startups.push_back(ev.grid.slot_time(static_cast<std::int64_t>(i)));
        if (!ev.on_mask[i] && prev) ev.shutdowns.push_back(ev.grid.slot_time(static_cast<std::int64_t>(i)));
        prev = ev.on_mask[i];
    }
    return ev;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("percentile of empty vector");
    std::sort(values.begin(), values.end());
    auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n));
    if (rank == 0) rank = 1;
    return values[std::min(rank - 1, values.size() - 1)];
}

ExclusionReport exclude_low_power(const HouseholdDataset& dataset, double peak_threshold) {
    if (peak_threshold <= 0) throw ConfigError("exclude_low_power: threshold must be > 0");
    ExclusionReport rep;
    rep.rule_threshold = peak_threshold;
    for (const auto& a : dataset.appliances) {
        if (percentile(a.power, 0.99) < peak_threshold)
            rep.excluded.push_back(a.id);
        else
            rep.retained.push_back(a.id);
    }
    if (rep.retained.empty())
        throw DataError("exclude_low_power: every appliance fell below the threshold");
    return rep;
}

void save_events(const std::vector<EventStream>& streams, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write events file: " + path);
    out << "appliance_id,kind,timestamp\n";
    for (const auto& ev : streams) {
        std::size_t si = 0, di = 0;
        // interleave chronologically; within a stream startups/shutdowns alternate
        while (si < ev.startups.size() || di < ev.shutdowns.size()) {
            bool take_start = di >= ev.shutdowns.size() ||
                              (si < ev.startups.size() && ev.startups[si] <= ev.shutdowns[di]);
            if (take_start) {
                out << ev.appliance_id << ",startup," << ev.startups[si++] << '\n';
            } else {
                out << ev.appliance_id << ",shutdown," << ev.shutdowns[di++] << '\n';
            }
        }
    }
    if (!out) throw DataError("failed writing events file: " + path);
}

std::vector<EventStream> load_events(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open events file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty events file: " + path);

    std::map<std::string, EventStream> by_id;
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw DataError("malformed events row: " + line);
        std::string id = line.substr(0, c1);
        std::string kind = line.substr(c1 + 1, c2 - c1 - 1);
        std::int64_t t = std::stoll(line.substr(c2 + 1));
        auto [it, inserted] = by_id.try_emplace(id);
        if (inserted) {
            it->second.appliance_id = id;
            it->second.grid = grid;
            order.push_back(id);
        }
        if (kind == "startup")
            it->second.startups.push_back(t);
        else if (kind == "shutdown")
            it->second.shutdowns.push_back(t);
        else
            throw DataError("unknown event kind '" + kind + "'");
    }

    std::vector<EventStream> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        auto& ev = by_id[id];
        // Rebuild the mask from the event list so downstream consumers get a
        // consistent view even though the CSV does not carry it.
        ev.on_mask.assign(static_cast<std::size_t>(grid.count), false);
        std::size_t di = 0;
        for (std::size_t si = 0; si < ev.startups.size(); ++si) {
            std::int64_t a = (ev.startups[si] - grid.start) / grid.step;
            std::int64_t b = grid.count;
            if (di < ev.shutdowns.size()) b = (ev.shutdowns[di++] - grid.start) / grid.step;
            for (std::int64_t s = std::max<std::int64_t>(a, 0); s < std::min(b, grid.count); ++s)
                ev.on_mask[static_cast<std::size_t>(s)] = true;
        }
        ev.validate();
        out.push_back(std::move(ev));
    }
    return out;
}

} // namespace loadassoc
