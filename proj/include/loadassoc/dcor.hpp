#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loadassoc/dataset.hpp"

namespace loadassoc {

/// Distance correlation (biased / V-statistic form): double-center the
/// pairwise-distance matrices A and B, then
///   dCov^2 = mean(A.*B),  dCor = dCov / sqrt(dVar_x * dVar_y),
/// with 0 when either vector is constant. Result lies in [0, 1].
double distance_correlation(const std::vector<double>& x, const std::vector<double>& y);

/// DCC of every (feature, target) pair on the training split; rows are the
/// lag and weather features, columns the total load and each cluster.
struct FeatureTable {
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    Eigen::MatrixXd dcc; // features x targets

    int feature_index(const std::string& name) const;
    int target_index(const std::string& name) const;
};

FeatureTable build_feature_table(const HouseholdDataset& forecast_ds,
                                 const std::vector<ApplianceSeries>& cluster_loads,
                                 const std::vector<int>& lags_days, std::int64_t train_days);

/// Per-target selection: every feature with DCC >= threshold, plus the best
/// lag feature unconditionally (the forecaster needs an autoregressive
/// input).
std::map<std::string, std::vector<std::string>> select_features(const FeatureTable& table,
                                                                double threshold);

void save_feature_table(const FeatureTable& t, const std::string& csv_path);
FeatureTable load_feature_table(const std::string& csv_path);

} // namespace loadassoc
