#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadassoc/dataset.hpp"
#include "loadassoc/model.hpp"

namespace loadassoc {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 20;       // early-stop patience on the validation tail
    std::uint64_t seed = 0;
    double clip_norm = 5.0;  // global gradient norm
    double val_fraction = 0.1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct TrainResult {
    std::vector<double> train_loss; // per epoch, normalized MSE
    std::vector<double> val_loss;
    int best_epoch = -1;
    double best_val = 0.0;
};

/// Which inputs feed the network: load lags in days (descending) and weather
/// field names ("temperature", "humidity", "dew_point").
struct FeatureSelection {
    std::vector<int> lag_days = {1};
    std::vector<std::string> weather;

    int max_lag() const;
    void validate() const;
};

// Earliest day with enough history for a sample.
std::int64_t first_forecastable_day(const ModelConfig& cfg, const FeatureSelection& sel);

/// Min-max constants fitted on the training days only: target scale plus one
/// scale per weather channel.
void fit_model_norms(ForecastModel& model, const std::vector<double>& target_power,
                     const HouseholdDataset& forecast_ds, const FeatureSelection& sel,
                     std::int64_t train_days);

/// Input tensor and normalized target for forecast day `day`. The sequence
/// walks the window days chronologically; per step the channels are the
/// target's lagged loads, the target day's weather at the same slot, and the
/// target day's calendar ids.
Sample build_sample(const HouseholdDataset& forecast_ds, const std::vector<double>& target_power,
                    const FeatureSelection& sel, const ForecastModel& model, std::int64_t day);

std::vector<Sample> build_sample_range(const HouseholdDataset& forecast_ds,
                                       const std::vector<double>& target_power,
                                       const FeatureSelection& sel, const ForecastModel& model,
                                       std::int64_t first_day, std::int64_t end_day);

/// Mini-batch Adam with gradient clipping and early stopping on the
/// chronological validation tail; the model is left at the best-validation
/// parameters. Throws StageError naming the epoch if the loss goes
/// non-finite.
TrainResult train(ForecastModel& model, const std::vector<Sample>& samples,
                  const TrainConfig& cfg);

double evaluate_mse(const ForecastModel& model, const std::vector<Sample>& samples);

/// Forward pass + inverse target normalization, clamped at 0 watts.
Eigen::VectorXd predict_day_ahead(const ForecastModel& model,
                                  const HouseholdDataset& forecast_ds,
                                  const std::vector<double>& target_power,
                                  const FeatureSelection& sel, std::int64_t day);

} // namespace loadassoc
