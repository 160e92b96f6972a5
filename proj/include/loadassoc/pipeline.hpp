#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "loadassoc/model.hpp"
#include "loadassoc/train.hpp"

namespace loadassoc {

/// Everything the pipeline stages need, with the per-module defaults.
/// A JSON config file overrides any subset; the effective config is dumped
/// into every stage manifest.
struct PipelineConfig {
    // data source: either raw CSVs + schema, or a synthetic spec
    std::vector<std::string> data_csv;
    std::string schema_path;
    std::string synth_spec_path;

    // events
    double on_threshold_w = 15.0;
    std::int64_t min_duration_slots = 2;
    double exclude_below_w = 50.0;

    // associate
    std::int64_t te_seconds = 1800;
    std::int64_t ts_seconds = 86400;

    // cluster
    int k = 0; // 0 = auto (silhouette selection)
    std::uint64_t cluster_seed = 7;
    int attach_excluded_to = 0;

    // dcc
    std::vector<int> lags_days = {7, 2, 1};
    double dcc_threshold = 0.2;

    // forecast grid and split
    std::int64_t forecast_step_seconds = 7200;
    int input_window_days = 7;
    int train_months = 23;

    // training
    TrainConfig train_cfg;
    ModelConfig small_model = ModelConfig::small_preset();
    ModelConfig large_model = ModelConfig::large_preset();
    int jobs = 1;

    std::int64_t utc_offset_seconds = 0;

    void validate() const;
};

PipelineConfig load_pipeline_config(const std::string& path);
std::string dump_pipeline_config(const PipelineConfig& cfg); // canonical JSON

/// Where each stage reads and writes. `from_root` gives the fixed pipeline
/// layout; the CLI subcommands fill individual fields from their flags.
struct ArtifactPaths {
    std::string dataset_dir;
    std::string events_dir; // events.csv + grid.json
    std::string exclusions_json;
    std::string q_csv;
    std::string clusters_json;
    std::string dcc_csv;
    std::string train_dir;
    std::string forecast_dir;
    std::string report_json;

    static ArtifactPaths from_root(const std::string& root);
};

inline const std::vector<std::string> kStageOrder = {
    "ingest", "events", "associate", "cluster", "dcc", "train", "forecast", "evaluate"};

// Individual stages; each reads only prior-stage artifacts and writes its own
// outputs plus a manifest with config and input hashes.
void stage_ingest(const PipelineConfig& cfg, const ArtifactPaths& paths);
void stage_events(const PipelineConfig& cfg, const ArtifactPaths& paths);
void stage_associate(const PipelineConfig& cfg, const ArtifactPaths& paths);
void stage_cluster(const PipelineConfig& cfg, const ArtifactPaths& paths);
void stage_dcc(const PipelineConfig& cfg, const ArtifactPaths& paths);
void stage_train(const PipelineConfig& cfg, const ArtifactPaths& paths);
void stage_forecast(const PipelineConfig& cfg, const ArtifactPaths& paths);
void stage_evaluate(const PipelineConfig& cfg, const ArtifactPaths& paths);

/// Runs the stage range [from, to] in order. Stages whose manifest still
/// matches the config and inputs are skipped unless `force` is set. Throws
/// DataError naming the first missing upstream artifact.
void run_pipeline(const PipelineConfig& cfg, const std::string& root,
                  const std::string& from = "ingest", const std::string& to = "evaluate",
                  bool force = false);

/// One day-ahead forecast for a calendar date ("YYYY-MM-DD"): every model's
/// 12 slots plus the cluster sum, written as a single CSV.
void forecast_single_day(const PipelineConfig& cfg, const ArtifactPaths& paths,
                         const std::string& date, const std::string& out_csv);

std::uint64_t fnv1a_hash(const void* data, std::size_t size);
std::uint64_t hash_file(const std::string& path);

} // namespace loadassoc
