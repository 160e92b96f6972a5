#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loadassoc/normalize.hpp"

namespace loadassoc {

/// Network hyperparameters. The two reference presets: small
/// (16/64 filters, 32 units, 1 layer) for per-cluster models and large
/// (32/128 filters, 64 units, 3 layers) for the overall baseline.
struct ModelConfig {
    int conv1_filters = 16;
    int conv2_filters = 64;
    int gru_units = 32;
    int gru_layers = 1;
    int kernel_size = 3;
    int embed_dim = 4;
    int input_window_days = 7;
    int output_slots = 12;
    int load_channels = 1;    // selected lag features
    int weather_channels = 0; // selected weather features

    static ModelConfig small_preset();
    static ModelConfig large_preset();

    int input_channels() const { return load_channels + weather_channels + embed_dim; }
    int seq_len() const { return input_window_days * output_slots; }
    // two valid convolutions shorten the sequence by 2*(kernel_size-1)
    int gru_seq_len() const { return seq_len() - 2 * (kernel_size - 1); }
    void validate() const;
};

/// One training/prediction input: static feature channels per step plus the
/// calendar ids resolved by the embedding tables at forward time.
struct Sample {
    Eigen::MatrixXd features;     // (load+weather channels) x seq_len, normalized
    std::vector<int> dow_id;      // per step, 0..6
    std::vector<int> slot_id;     // per step, 0..output_slots-1
    std::vector<int> holiday_id;  // per step, 0 or 1
    Eigen::VectorXd target;       // output_slots normalized loads
    std::int64_t day = -1;        // forecast day index, metadata only
};

struct GruLayer {
    Eigen::MatrixXd wz, uz, wr, ur, wn, un; // (H x I), (H x H)
    Eigen::MatrixXd bz, br, bn;             // (H x 1)
};

class ForecastModel {
  public:
    ForecastModel() = default;
    explicit ForecastModel(const ModelConfig& config);

    // uniform +-1/sqrt(fan_in) weights, zero biases
    void init_params(std::uint64_t seed);
    void zero_params();

    Eigen::VectorXd forward(const Sample& sample) const;

    /// Exact gradients of the mean-squared-error loss over the sample's
    /// output slots. `grads` must be a same-config model (used as a gradient
    /// holder); gradients are accumulated into it.
    double backward(const Sample& sample, ForecastModel& grads) const;

    const ModelConfig& config() const { return config_; }

    // Fixed-order tensor walk shared by the optimizer, the checkpoint writer
    // and the gradient check.
    void visit_tensors(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn);
    void visit_tensors(
        const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const;
    std::int64_t parameter_count() const;

    NormalizationParams input_norm;  // per weather channel
    NormalizationParams target_norm; // single feature: the target series

    Eigen::MatrixXd embed_dow, embed_slot, embed_holiday; // rows x embed_dim
    Eigen::MatrixXd conv1_w, conv2_w;                     // F x (C*K)
    Eigen::MatrixXd conv1_b, conv2_b;                     // F x 1
    std::vector<GruLayer> gru;
    Eigen::MatrixXd head_w; // output_slots x H, bias-free

  private:
    ModelConfig config_;
};

void save_model(const ForecastModel& model, const std::string& path);
ForecastModel load_model(const std::string& path);

} // namespace loadassoc
