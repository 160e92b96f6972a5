#include "loadassoc/dcor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "loadassoc/csv.hpp"
#include "loadassoc/errors.hpp"

namespace loadassoc {

namespace {

// pairwise |v_i - v_j| with rows/columns/grand mean removed
Eigen::MatrixXd centered_distances(const std::vector<double>& v) {
    const auto n = static_cast<Eigen::Index>(v.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            d(i, j) = std::fabs(v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)]);
    Eigen::VectorXd row_mean = d.rowwise().mean();
    double grand = d.mean();
    d.colwise() -= row_mean;
    d.rowwise() -= row_mean.transpose();
    d.array() += grand;
    return d;
}

} // namespace

double distance_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("distance_correlation: length mismatch");
    if (x.size() < 2) throw DataError("distance_correlation: need at least 2 observations");
    for (double v : x)
        if (!std::isfinite(v)) throw DataError("distance_correlation: non-finite value in x");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("distance_correlation: non-finite value in y");

    Eigen::MatrixXd a = centered_distances(x);
    Eigen::MatrixXd b = centered_distances(y);

    const double dcov2 = (a.array() * b.array()).mean();
    const double dvarx2 = a.array().square().mean();
    const double dvary2 = b.array().square().mean();
    if (dvarx2 <= 0.0 || dvary2 <= 0.0) return 0.0; // constant input

    double r2 = dcov2 / std::sqrt(dvarx2 * dvary2);
    // the V-statistic is nonnegative in exact arithmetic; clamp rounding noise
    r2 = std::clamp(r2, 0.0, 1.0);
    return std::sqrt(r2);
}

int FeatureTable::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
        if (feature_names[i] == name) return static_cast<int>(i);
    return -1;
}

int FeatureTable::target_index(const std::string& name) const {
    for (std::size_t i = 0; i < target_names.size(); ++i)
        if (target_names[i] == name) return static_cast<int>(i);
    return -1;
}

FeatureTable build_feature_table(const HouseholdDataset& forecast_ds,
                                 const std::vector<ApplianceSeries>& cluster_loads,
                                 const std::vector<int>& lags_days, std::int64_t train_days) {
    const auto spd = static_cast<std::int64_t>(forecast_ds.grid().slots_per_day());
    std::int64_t max_lag = 0;
    for (int l : lags_days) max_lag = std::max<std::int64_t>(max_lag, l);
    if (train_days <= max_lag)
        throw DataError("build_feature_table: not enough history for the largest lag");
    if (train_days > forecast_ds.days)
        throw DataError("build_feature_table: train period exceeds dataset");

    FeatureTable t;
    for (int l : lags_days) t.feature_names.push_back("lag_" + std::to_string(l) + "d");
    const bool weather = !forecast_ds.weather.empty();
    if (weather) {
        t.feature_names.push_back("temperature");
        t.feature_names.push_back("humidity");
        t.feature_names.push_back("dew_point");
    }

    std::vector<std::pair<std::string, const std::vector<double>*>> targets;
    std::vector<double> total = forecast_ds.appliance_sum();
    targets.emplace_back("total", &total);
    for (const auto& c : cluster_loads) targets.emplace_back(c.id, &c.power);
    for (const auto& [name, _] : targets) t.target_names.push_back(name);

    t.dcc.resize(static_cast<Eigen::Index>(t.feature_names.size()),
                 static_cast<Eigen::Index>(t.target_names.size()));

    // aligned (day, slot) pairs from day max_lag to the end of the train split
    const std::int64_t n_days = train_days - max_lag;
    const auto n = static_cast<std::size_t>(n_days * spd);

    auto slot_range = [&](const std::vector<double>& series, std::int64_t lag) {
        std::vector<double> v(n);
        for (std::int64_t d = 0; d < n_days; ++d)
            for (std::int64_t s = 0; s < spd; ++s)
                v[static_cast<std::size_t>(d * spd + s)] =
                    series[static_cast<std::size_t>((d + max_lag - lag) * spd + s)];
        return v;
    };

    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        std::vector<double> y = slot_range(*targets[ti].second, 0);
        Eigen::Index fi = 0;
        for (int lag : lags_days) {
            std::vector<double> f = slot_range(*targets[ti].second, lag);
            t.dcc(fi++, static_cast<Eigen::Index>(ti)) = distance_correlation(f, y);
        }
        if (weather) {
            for (const auto* field :
                 {&forecast_ds.weather.temperature, &forecast_ds.weather.humidity,
                  &forecast_ds.weather.dew_point}) {
                std::vector<double> f = slot_range(*field, 0);
                t.dcc(fi++, static_cast<Eigen::Index>(ti)) = distance_correlation(f, y);
            }
        }
    }
    return t;
}

std::map<std::string, std::vector<std::string>> select_features(const FeatureTable& table,
                                                                double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ConfigError("select_features: threshold must lie in [0, 1]");

    std::map<std::string, std::vector<std::string>> out;
    for (std::size_t ti = 0; ti < table.target_names.size(); ++ti) {
        std::vector<std::string> kept;
        int best_lag = -1;
        double best_lag_dcc = -1.0;
        for (std::size_t fi = 0; fi < table.feature_names.size(); ++fi) {
            const bool is_lag = table.feature_names[fi].rfind("lag_", 0) == 0;
            const double v = table.dcc(static_cast<Eigen::Index>(fi), static_cast<Eigen::Index>(ti));
            if (is_lag && v > best_lag_dcc) {
                best_lag_dcc = v;
                best_lag = static_cast<int>(fi);
            }
            if (v >= threshold) kept.push_back(table.feature_names[fi]);
        }
        if (best_lag >= 0 &&
            std::find(kept.begin(), kept.end(), table.feature_names[static_cast<std::size_t>(
                                                    best_lag)]) == kept.end())
            kept.insert(kept.begin(), table.feature_names[static_cast<std::size_t>(best_lag)]);
        out[table.target_names[ti]] = std::move(kept);
    }
    return out;
}

void save_feature_table(const FeatureTable& t, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write " + csv_path);
    out << "feature";
    for (const auto& name : t.target_names) out << ',' << name;
    out << '\n';
    for (std::size_t fi = 0; fi < t.feature_names.size(); ++fi) {
        out << t.feature_names[fi];
        for (std::size_t ti = 0; ti < t.target_names.size(); ++ti)
            out << ','
                << format_double(t.dcc(static_cast<Eigen::Index>(fi), static_cast<Eigen::Index>(ti)));
        out << '\n';
    }
    if (!out) throw DataError("failed writing " + csv_path);
}

FeatureTable load_feature_table(const std::string& csv_path) {
    CsvTable csv = read_csv(csv_path);
    FeatureTable t;
    for (std::size_t c = 1; c < csv.header.size(); ++c) t.target_names.push_back(csv.header[c]);
    t.dcc.resize(static_cast<Eigen::Index>(csv.rows.size()),
                 static_cast<Eigen::Index>(t.target_names.size()));

    // re-read feature names (first column parses as NaN in the numeric table)
    std::ifstream in(csv_path);
    std::string line;
    std::getline(in, line);
    std::size_t r = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.feature_names.push_back(line.substr(0, line.find(',')));
        ++r;
    }
    if (r != csv.rows.size()) throw DataError("feature table parse mismatch in " + csv_path);

    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        for (std::size_t j = 0; j < t.target_names.size(); ++j)
            t.dcc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = csv.rows[i][j + 1];
    return t;
}

} // namespace loadassoc
