#include "loadassoc/association.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "loadassoc/csv.hpp"
#include "loadassoc/errors.hpp"

using nlohmann::json;

namespace loadassoc {

void AssociationConfig::validate() const {
    if (target_window_s <= 0 || candidate_window_s <= 0 ||
        target_window_s >= candidate_window_s)
        throw ConfigError("association windows must satisfy 0 < T_e < T_s");
}

namespace {

std::vector<std::int64_t> startup_days(const EventStream& ev, std::int64_t offset) {
    std::vector<std::int64_t> days;
    days.reserve(ev.startups.size());
    for (std::int64_t t : ev.startups) days.push_back(day_of_timestamp(t, offset));
    days.erase(std::unique(days.begin(), days.end()), days.end());
    return days;
}

std::int64_t count_common(const std::vector<std::int64_t>& a,
                          const std::vector<std::int64_t>& b) {
    std::int64_t n = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (b[j] < a[i])
            ++j;
        else
            ++n, ++i, ++j;
    }
    return n;
}

} // namespace

PairCounters count_pair(const EventStream& events_i, const EventStream& events_j,
                        const AssociationConfig& cfg) {
    cfg.validate();
    if (events_i.grid != events_j.grid)
        throw DataError("count_pair: event streams on different grids");

    const auto& si = events_i.startups;
    const auto& sj = events_j.startups;

    struct Candidate {
        std::int64_t dt; // |t_i - t_j|
        std::int64_t tj;
        std::int64_t ti;
        std::uint32_t p;
        std::uint32_t q;
    };
    std::vector<Candidate> cands;

    // Startups are sorted, so the window of admissible partners slides forward.
    std::size_t lo = 0;
    for (std::size_t p = 0; p < si.size(); ++p) {
        while (lo < sj.size() && sj[lo] < si[p] - cfg.candidate_window_s) ++lo;
        for (std::size_t q = lo; q < sj.size() && sj[q] <= si[p] + cfg.candidate_window_s; ++q)
            cands.push_back({std::abs(si[p] - sj[q]), sj[q], si[p],
                             static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q)});
    }

    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dt != b.dt) return a.dt < b.dt;
        if (a.tj != b.tj) return a.tj < b.tj;
        return a.ti < b.ti;
    });

    std::vector<char> used_i(si.size(), 0), used_j(sj.size(), 0);
    PairCounters c;
    for (const auto& cd : cands) {
        if (used_i[cd.p] || used_j[cd.q]) continue;
        used_i[cd.p] = used_j[cd.q] = 1;
        ++c.ns;
        if (cd.dt <= cfg.target_window_s) ++c.ne;
    }

    c.nd_pair = count_common(startup_days(events_i, cfg.utc_offset_seconds),
                             startup_days(events_j, cfg.utc_offset_seconds));
    return c;
}

AssociationMatrix association_matrix(const std::vector<EventStream>& streams,
                                     const AssociationConfig& cfg, std::int64_t day_count) {
    cfg.validate();
    if (streams.size() < 2) throw DataError("association_matrix: need at least 2 streams");
    if (day_count < 1) throw DataError("association_matrix: day count must be >= 1");

    const std::size_t n = streams.size();
    AssociationMatrix m;
    m.nd = day_count;
    m.ids.reserve(n);
    for (const auto& s : streams) m.ids.push_back(s.appliance_id);
    m.q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.counters.assign(n * n, PairCounters{});

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            PairCounters c = count_pair(streams[i], streams[j], cfg);
            m.counters[i * n + j] = c;
            m.counters[j * n + i] = c;
            double value = 0.0;
            if (c.ns > 0)
                value = (static_cast<double>(c.ne) / static_cast<double>(c.ns)) *
                        (static_cast<double>(c.nd_pair) / static_cast<double>(day_count));
            m.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
            m.q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
        }
    }
    return m;
}

void save_association(const AssociationMatrix& m, const std::string& q_csv_path) {
    std::ofstream out(q_csv_path);
    if (!out) throw DataError("cannot write " + q_csv_path);
    out << "id";
    for (const auto& id : m.ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.ids[i];
        for (std::size_t j = 0; j < m.size(); ++j)
            out << ',' << format_double(m.q(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(j)));
        out << '\n';
    }
    if (!out) throw DataError("failed writing " + q_csv_path);

    json side;
    side["nd"] = m.nd;
    json pairs = json::array();
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            const auto& c = m.pair(i, j);
            pairs.push_back({{"i", m.ids[i]},
                             {"j", m.ids[j]},
                             {"ne", c.ne},
                             {"ns", c.ns},
                             {"nd_pair", c.nd_pair}});
        }
    side["pairs"] = pairs;
    std::ofstream sout(q_csv_path + ".counters.json");
    sout << side.dump(2) << '\n';
    if (!sout) throw DataError("cannot write counters sidecar for " + q_csv_path);
}

AssociationMatrix load_association(const std::string& q_csv_path) {
    std::ifstream in(q_csv_path);
    if (!in) throw DataError("cannot open " + q_csv_path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty association file: " + q_csv_path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    AssociationMatrix m;
    std::size_t pos = line.find(',');
    while (pos != std::string::npos) {
        std::size_t next = line.find(',', pos + 1);
        m.ids.push_back(line.substr(pos + 1, next == std::string::npos ? next : next - pos - 1));
        pos = next;
    }
    const std::size_t n = m.ids.size();
    if (n == 0) throw DataError("association header has no channel ids");
    m.q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw DataError("association matrix truncated");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t cell = line.find(',');
        for (std::size_t j = 0; j < n; ++j) {
            if (cell == std::string::npos) throw DataError("association row too short");
            std::size_t next = line.find(',', cell + 1);
            m.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::stod(line.substr(cell + 1, next == std::string::npos ? next : next - cell - 1));
            cell = next;
        }
    }

    m.counters.assign(n * n, PairCounters{});
    std::ifstream sin(q_csv_path + ".counters.json");
    if (sin) {
        json side = json::parse(sin);
        m.nd = side.at("nd").get<std::int64_t>();
        auto index_of = [&](const std::string& id) {
            for (std::size_t k = 0; k < n; ++k)
                if (m.ids[k] == id) return k;
            throw DataError("counters sidecar references unknown id '" + id + "'");
        };
        for (const auto& p : side.at("pairs")) {
            PairCounters c;
            c.ne = p.at("ne").get<std::int64_t>();
            c.ns = p.at("ns").get<std::int64_t>();
            c.nd_pair = p.at("nd_pair").get<std::int64_t>();
            std::size_t i = index_of(p.at("i").get<std::string>());
            std::size_t j = index_of(p.at("j").get<std::string>());
            m.counters[i * n + j] = c;
            m.counters[j * n + i] = c;
        }
    }
    return m;
}

} // namespace loadassoc
