#include "loadassoc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "loadassoc/errors.hpp"
#include "loadassoc/resample.hpp"

using nlohmann::json;

namespace loadassoc {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

int SynthSpec::cluster_count() const {
    int k = 0;
    for (const auto& a : appliances) k = std::max(k, a.cluster + 1);
    return k;
}

void SynthSpec::validate() const {
    if (appliances.empty()) throw ConfigError("synth spec: no appliances");
    if (co_activation < 0.0 || co_activation > 1.0)
        throw ConfigError("synth spec: co_activation outside [0, 1]");
    if (days < 1 || step_seconds < 1 || target_window_s < 1)
        throw ConfigError("synth spec: days, step and window must be positive");
    for (const auto& a : appliances) {
        if (a.power_watts <= 0) throw ConfigError("synth spec: power must be > 0");
        if (a.startups_per_day < 0) throw ConfigError("synth spec: negative startup rate");
        if (a.duration_slots < 1) throw ConfigError("synth spec: duration must be >= 1 slot");
        if (a.cluster < 0) throw ConfigError("synth spec: negative cluster label");
    }
}

namespace {

struct ApplianceDraft {
    std::vector<std::int64_t> startups; // epoch seconds, unsorted while building
};

} // namespace

SynthResult generate(const SynthSpec& spec) {
    spec.validate();
    const std::int64_t spd = kSecondsPerDay / spec.step_seconds;
    const std::int64_t slots = spec.days * spd;
    TimeGrid grid{spec.start, spec.step_seconds, slots};

    const int n_clusters = spec.cluster_count();
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_clusters));
    for (std::size_t i = 0; i < spec.appliances.size(); ++i)
        members[static_cast<std::size_t>(spec.appliances[i].cluster)].push_back(i);

    CalendarFeatures cal = make_calendar(grid);

    // anchors per cluster-day; the anchor rate is the mean member rate
    std::vector<std::vector<std::vector<std::int64_t>>> anchors(
        static_cast<std::size_t>(n_clusters));
    for (int c = 0; c < n_clusters; ++c) {
        const auto& m = members[static_cast<std::size_t>(c)];
        anchors[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(spec.days));
        if (m.empty()) continue;
        double rate = 0.0;
        for (std::size_t i : m) rate += spec.appliances[i].startups_per_day;
        rate /= static_cast<double>(m.size());

        std::mt19937_64 rng(splitmix64(spec.seed ^ (0xA11C0000ULL + static_cast<std::uint64_t>(c))));
        for (std::int64_t d = 0; d < spec.days; ++d) {
            auto& day_anchors =
                anchors[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)];
            if (spec.daily_pattern) {
                // deterministic count modulated by weekday, evenly spread over a
                // cluster-specific active window with a small jitter
                const int dow = cal.day_of_week[static_cast<std::size_t>(d)];
                const double wf = dow >= 5 ? 1.5 : 1.0;
                const auto count = static_cast<int>(std::lround(rate * wf));
                const double base_hour = 6.0 + 4.0 * static_cast<double>(c);
                std::uniform_real_distribution<double> jitter(-600.0, 600.0);
                for (int a = 0; a < count; ++a) {
                    double sec = std::fmod((base_hour + 2.5 * a) * 3600.0, kSecondsPerDay) +
                                 jitter(rng);
                    sec = std::clamp(sec, 0.0, static_cast<double>(kSecondsPerDay - 1));
                    day_anchors.push_back(spec.start + d * kSecondsPerDay +
                                          static_cast<std::int64_t>(sec));
                }
            } else {
                std::poisson_distribution<int> pois(rate);
                std::uniform_int_distribution<std::int64_t> uni(0, kSecondsPerDay - 1);
                const int count = pois(rng);
                for (int a = 0; a < count; ++a)
                    day_anchors.push_back(spec.start + d * kSecondsPerDay + uni(rng));
            }
            std::sort(day_anchors.begin(), day_anchors.end());
        }
    }

    // member startups: anchor-driven (probability co_activation, jitter within
    // half the target window) plus a private poisson remainder
    std::vector<ApplianceDraft> drafts(spec.appliances.size());
    for (std::size_t i = 0; i < spec.appliances.size(); ++i) {
        const auto& a = spec.appliances[i];
        std::mt19937_64 rng(splitmix64(spec.seed ^ (0xAB000000ULL + static_cast<std::uint64_t>(i))));
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        const double half_jitter = 0.45 * static_cast<double>(spec.target_window_s);
        std::uniform_real_distribution<double> jitter(-half_jitter, half_jitter);

        const auto& cluster_anchors = anchors[static_cast<std::size_t>(a.cluster)];
        double anchor_rate = 0.0;
        for (const auto& day : cluster_anchors) anchor_rate += static_cast<double>(day.size());
        anchor_rate /= static_cast<double>(spec.days);
        const double private_rate =
            std::max(0.0, a.startups_per_day - anchor_rate * spec.co_activation);

        for (std::int64_t d = 0; d < spec.days; ++d) {
            for (std::int64_t t : cluster_anchors[static_cast<std::size_t>(d)]) {
                if (coin(rng) < spec.co_activation) {
                    auto ts = t + static_cast<std::int64_t>(jitter(rng));
                    ts = std::clamp(ts, grid.start, grid.end() - 1);
                    drafts[i].startups.push_back(ts);
                }
            }
            std::poisson_distribution<int> pois(private_rate);
            std::uniform_int_distribution<std::int64_t> uni(0, kSecondsPerDay - 1);
            const int extra = pois(rng);
            for (int e = 0; e < extra; ++e)
                drafts[i].startups.push_back(spec.start + d * kSecondsPerDay + uni(rng));
        }
    }

    SynthResult result;
    result.dataset.days = spec.days;
    std::mt19937_64 noise_rng(splitmix64(spec.seed ^ 0x4015E0ULL));

    for (std::size_t i = 0; i < spec.appliances.size(); ++i) {
        const auto& a = spec.appliances[i];
        auto& startups = drafts[i].startups;
        std::sort(startups.begin(), startups.end());

        // enforce separation so pulses never merge under extraction
        const std::int64_t min_gap = (a.duration_slots + 3) * spec.step_seconds;
        std::vector<std::int64_t> kept;
        for (std::int64_t t : startups) {
            // snap to the grid so the planted instant equals the slot time
            t -= (t - grid.start) % spec.step_seconds;
            if (kept.empty() || t - kept.back() >= min_gap) kept.push_back(t);
        }

        ApplianceSeries s;
        s.id = a.id;
        s.name = "synthetic appliance " + a.id;
        s.grid = grid;
        s.power.assign(static_cast<std::size_t>(slots), 0.0);

        EventStream ev;
        ev.appliance_id = a.id;
        ev.grid = grid;
        ev.on_mask.assign(static_cast<std::size_t>(slots), false);
        for (std::int64_t t : kept) {
            const std::int64_t s0 = (t - grid.start) / spec.step_seconds;
            const std::int64_t s1 = std::min(slots, s0 + a.duration_slots);
            for (std::int64_t sl = s0; sl < s1; ++sl) {
                s.power[static_cast<std::size_t>(sl)] = a.power_watts;
                ev.on_mask[static_cast<std::size_t>(sl)] = true;
            }
            ev.startups.push_back(t);
            if (s1 < slots) ev.shutdowns.push_back(grid.slot_time(s1));
        }
        ev.validate();

        if (spec.noise_sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, spec.noise_sigma);
            for (auto& p : s.power) p = std::max(0.0, p + noise(noise_rng));
        }

        result.dataset.appliances.push_back(std::move(s));
        result.planted_events.push_back(std::move(ev));
        result.planted_labels.push_back(a.cluster);
    }

    result.dataset.total.id = "TOTAL";
    result.dataset.total.name = "sum of synthetic appliances";
    result.dataset.total.grid = grid;
    result.dataset.total.power = result.dataset.appliance_sum();

    // seasonal sinusoid weather with mild noise
    {
        std::mt19937_64 rng(splitmix64(spec.seed ^ 0x3EA73E3ULL));
        std::normal_distribution<double> n1(0.0, 1.0);
        WeatherSeries w;
        w.grid = grid;
        w.temperature.resize(static_cast<std::size_t>(slots));
        w.humidity.resize(static_cast<std::size_t>(slots));
        w.dew_point.resize(static_cast<std::size_t>(slots));
        for (std::int64_t d = 0; d < spec.days; ++d) {
            const double season = std::sin(2.0 * M_PI * static_cast<double>(d) / 365.0);
            const double temp = 10.0 + 10.0 * season + n1(rng);
            const double hum =
                std::clamp(60.0 + 20.0 * std::sin(2.0 * M_PI * static_cast<double>(d) / 180.0 + 1.0) +
                               3.0 * n1(rng),
                           0.0, 100.0);
            const double dew = temp - 5.0 + n1(rng);
            for (std::int64_t sl = 0; sl < spd; ++sl) {
                const auto idx = static_cast<std::size_t>(d * spd + sl);
                w.temperature[idx] = temp;
                w.humidity[idx] = hum;
                w.dew_point[idx] = dew;
            }
        }
        result.dataset.weather = std::move(w);
    }

    result.dataset.calendar = std::move(cal);
    result.dataset.validate();
    return result;
}

std::vector<double> pattern_series(std::int64_t days, int slots_per_day,
                                   const std::vector<double>& daily_template,
                                   const std::vector<double>& weekday_factor, int start_dow) {
    if (daily_template.size() != static_cast<std::size_t>(slots_per_day))
        throw ConfigError("pattern_series: template length must equal slots per day");
    if (weekday_factor.size() != 7) throw ConfigError("pattern_series: need 7 weekday factors");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(days * slots_per_day));
    for (std::int64_t d = 0; d < days; ++d) {
        const double f = weekday_factor[static_cast<std::size_t>((start_dow + d) % 7)];
        for (int s = 0; s < slots_per_day; ++s)
            out.push_back(f * daily_template[static_cast<std::size_t>(s)]);
    }
    return out;
}

SynthSpec load_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open synth spec: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("synth spec parse error: " + std::string(e.what()));
    }

    SynthSpec s;
    s.co_activation = j.value("co_activation", s.co_activation);
    s.target_window_s = j.value("target_window_s", s.target_window_s);
    s.days = j.value("days", s.days);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.seed = j.value("seed", s.seed);
    s.step_seconds = j.value("step_seconds", s.step_seconds);
    s.start = j.value("start", s.start);
    s.daily_pattern = j.value("daily_pattern", s.daily_pattern);
    for (const auto& a : j.at("appliances")) {
        SynthSpec::Appliance app;
        app.id = a.at("id").get<std::string>();
        app.power_watts = a.value("power_watts", app.power_watts);
        app.startups_per_day = a.value("startups_per_day", app.startups_per_day);
        app.duration_slots = a.value("duration_slots", app.duration_slots);
        app.cluster = a.value("cluster", 0);
        s.appliances.push_back(std::move(app));
    }
    s.validate();
    return s;
}

void save_synth_spec(const SynthSpec& s, const std::string& path) {
    json j;
    j["co_activation"] = s.co_activation;
    j["target_window_s"] = s.target_window_s;
    j["days"] = s.days;
    j["noise_sigma"] = s.noise_sigma;
    j["seed"] = s.seed;
    j["step_seconds"] = s.step_seconds;
    j["start"] = s.start;
    j["daily_pattern"] = s.daily_pattern;
    json apps = json::array();
    for (const auto& a : s.appliances)
        apps.push_back({{"id", a.id},
                        {"power_watts", a.power_watts},
                        {"startups_per_day", a.startups_per_day},
                        {"duration_slots", a.duration_slots},
                        {"cluster", a.cluster}});
    j["appliances"] = apps;
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write synth spec: " + path);
}

} // namespace loadassoc
