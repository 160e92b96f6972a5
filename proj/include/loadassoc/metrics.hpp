#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadassoc/dataset.hpp"

namespace loadassoc {

double rmse(const std::vector<double>& pred, const std::vector<double>& truth);
double mae(const std::vector<double>& pred, const std::vector<double>& truth);

/// One method's day-ahead output over the test period, day-major with
/// slots_per_day values per day.
struct ForecastSeries {
    std::string id;
    std::int64_t first_day = 0; // forecast-grid day index
    std::vector<double> values;
};

struct MethodScore {
    double rmse = 0.0;
    double mae = 0.0;
};

struct EvalReport {
    MethodScore overall;
    MethodScore proposed; // slotwise sum of the cluster forecasts
    double delta_rmse_pct = 0.0; // (proposed - overall) / overall * 100
    double delta_mae_pct = 0.0;
    std::vector<double> per_day_rmse_overall, per_day_rmse_proposed;
    std::vector<double> per_slot_rmse_overall, per_slot_rmse_proposed;
    std::int64_t first_day = 0;
    std::int64_t days = 0;
    int slots_per_day = 0;
};

/// Cluster-sum vs. overall comparison against the metered total, pooled over
/// all test slots. All series must cover the same day range.
EvalReport compare_methods(const std::vector<ForecastSeries>& cluster_forecasts,
                           const ForecastSeries& overall_forecast,
                           const ForecastSeries& truth_total, int slots_per_day);

/// Contiguous chronological split: the first `train_months` calendar months
/// (civil arithmetic from the dataset start) go to train, the rest to test.
std::pair<HouseholdDataset, HouseholdDataset> split_dataset(const HouseholdDataset& dataset,
                                                            int train_months);

// Slot range view used by the splitter; exposed for tests.
HouseholdDataset slice_dataset(const HouseholdDataset& ds, std::int64_t first_slot,
                               std::int64_t count);

std::int64_t split_slot(const TimeGrid& grid, int train_months);

void save_report(const EvalReport& r, const std::string& json_path);
void save_forecast(const ForecastSeries& f, const TimeGrid& grid, const std::string& csv_path);
ForecastSeries load_forecast(const std::string& csv_path, const TimeGrid& grid);

} // namespace loadassoc
