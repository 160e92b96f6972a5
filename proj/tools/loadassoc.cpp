// Command-line front end for the load-association forecasting pipeline.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 stage failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loadassoc/association.hpp"
#include "loadassoc/clustering.hpp"
#include "loadassoc/dataset.hpp"
#include "loadassoc/errors.hpp"
#include "loadassoc/ingest.hpp"
#include "loadassoc/pipeline.hpp"
#include "loadassoc/synth.hpp"

namespace fs = std::filesystem;
using namespace loadassoc;

int main(int argc, char** argv) {
    CLI::App app{"behavior-association household load forecasting pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a planted-structure household");
    std::string synth_spec, synth_out;
    synth->add_option("--spec", synth_spec, "synth spec JSON")->required();
    synth->add_option("--out", synth_out, "output dataset directory")->required();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "ingest raw CSVs onto the source grid");
    std::vector<std::string> ingest_data;
    std::string ingest_schema, ingest_out;
    ingest->add_option("--data", ingest_data, "input CSV file(s)")->required();
    ingest->add_option("--schema", ingest_schema, "column-mapping schema JSON")->required();
    ingest->add_option("--out", ingest_out, "output dataset directory")->required();

    // events
    auto* events = app.add_subcommand("events", "extract ON/OFF events per appliance");
    std::string events_in, events_out;
    double on_threshold = 15.0, exclude_below = 50.0;
    std::int64_t min_duration = 2;
    events->add_option("--in", events_in, "dataset directory")->required();
    events->add_option("--on-threshold", on_threshold, "ON power threshold (W)");
    events->add_option("--min-duration", min_duration, "debounce run length (slots)");
    events->add_option("--exclude-below", exclude_below, "low-power exclusion threshold (W)");
    events->add_option("--out", events_out, "output events directory")->required();

    // associate
    auto* associate = app.add_subcommand("associate", "behavior association matrix");
    std::string assoc_events, assoc_out;
    std::int64_t te = 1800, ts = 86400;
    associate->add_option("--events", assoc_events, "events directory")->required();
    associate->add_option("--te", te, "target window T_e (seconds)");
    associate->add_option("--ts", ts, "candidate window T_s (seconds)");
    associate->add_option("--out", assoc_out, "output q.csv path")->required();

    // cluster
    auto* cluster = app.add_subcommand("cluster", "spectral clustering of the association graph");
    std::string cluster_q, cluster_k = "auto", cluster_out;
    std::uint64_t cluster_seed = 7;
    int attach_excluded = 0;
    cluster->add_option("--q", cluster_q, "association matrix CSV")->required();
    cluster->add_option("--k", cluster_k, "cluster count or 'auto'");
    cluster->add_option("--seed", cluster_seed, "k-means RNG seed");
    cluster->add_option("--attach-excluded", attach_excluded,
                        "cluster index that absorbs excluded appliances");
    cluster->add_option("--out", cluster_out, "output clusters.json path")->required();

    // dcc
    auto* dcc = app.add_subcommand("dcc", "distance correlation feature table");
    std::string dcc_in, dcc_clusters, dcc_exclusions, dcc_out;
    std::vector<int> dcc_lags = {7, 2, 1};
    int dcc_train_months = 23;
    std::int64_t dcc_step = 7200;
    dcc->add_option("--in", dcc_in, "dataset directory")->required();
    dcc->add_option("--clusters", dcc_clusters, "clusters.json")->required();
    dcc->add_option("--exclusions", dcc_exclusions, "exclusions.json")->required();
    dcc->add_option("--lags", dcc_lags, "load lags in days");
    dcc->add_option("--train-months", dcc_train_months, "train split length (months)");
    dcc->add_option("--step", dcc_step, "forecast slot length (seconds)");
    dcc->add_option("--out", dcc_out, "output dcc.csv path")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train per-cluster and overall forecasters");
    std::string train_in, train_clusters, train_exclusions, train_features, train_config, train_out;
    train_cmd->add_option("--in", train_in, "dataset directory")->required();
    train_cmd->add_option("--clusters", train_clusters, "clusters.json")->required();
    train_cmd->add_option("--exclusions", train_exclusions, "exclusions.json")->required();
    train_cmd->add_option("--features", train_features, "dcc.csv")->required();
    train_cmd->add_option("--config", train_config, "pipeline config JSON (train section)");
    train_cmd->add_option("--out", train_out, "output models directory")->required();

    // forecast
    auto* forecast = app.add_subcommand("forecast", "forecast one day with trained models");
    std::string fc_in, fc_models, fc_clusters, fc_exclusions, fc_date, fc_out, fc_config;
    forecast->add_option("--in", fc_in, "dataset directory")->required();
    forecast->add_option("--models", fc_models, "models directory")->required();
    forecast->add_option("--clusters", fc_clusters, "clusters.json")->required();
    forecast->add_option("--exclusions", fc_exclusions, "exclusions.json")->required();
    forecast->add_option("--date", fc_date, "target date YYYY-MM-DD")->required();
    forecast->add_option("--config", fc_config, "pipeline config JSON");
    forecast->add_option("--out", fc_out, "output forecast.csv path")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "cluster-sum vs. overall comparison");
    std::string ev_forecasts, ev_truth, ev_clusters, ev_exclusions, ev_out, ev_config;
    evaluate->add_option("--forecasts", ev_forecasts, "forecast directory")->required();
    evaluate->add_option("--truth", ev_truth, "dataset directory with the metered truth")
        ->required();
    evaluate->add_option("--clusters", ev_clusters, "clusters.json")->required();
    evaluate->add_option("--exclusions", ev_exclusions, "exclusions.json")->required();
    evaluate->add_option("--config", ev_config, "pipeline config JSON");
    evaluate->add_option("--out", ev_out, "output report.json path")->required();

    // run
    auto* run = app.add_subcommand("run", "run the full pipeline");
    std::string run_config, run_out, run_from = "ingest", run_to = "evaluate";
    bool run_force = false;
    run->add_option("--config", run_config, "pipeline config JSON")->required();
    const char* env_root = std::getenv("LOADASSOC_ROOT");
    run_out = env_root ? env_root : "";
    run->add_option("--out", run_out, "artifact root directory (or $LOADASSOC_ROOT)");
    run->add_option("--from", run_from, "first stage to run");
    run->add_option("--to", run_to, "last stage to run");
    run->add_flag("--force", run_force, "re-run stages even if up to date");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            SynthSpec spec = load_synth_spec(synth_spec);
            SynthResult result = generate(spec);
            save_dataset(result.dataset, synth_out);
            std::cout << "wrote " << result.dataset.appliances.size() << " channels, "
                      << result.dataset.days << " days to " << synth_out << '\n';
        } else if (ingest->parsed()) {
            PipelineConfig cfg;
            cfg.data_csv = ingest_data;
            cfg.schema_path = ingest_schema;
            ArtifactPaths paths;
            paths.dataset_dir = ingest_out;
            stage_ingest(cfg, paths);
            std::cout << "dataset written to " << ingest_out << '\n';
        } else if (events->parsed()) {
            PipelineConfig cfg;
            cfg.on_threshold_w = on_threshold;
            cfg.min_duration_slots = min_duration;
            cfg.exclude_below_w = exclude_below;
            ArtifactPaths paths;
            paths.dataset_dir = events_in;
            paths.events_dir = events_out;
            paths.exclusions_json = (fs::path(events_out) / "exclusions.json").string();
            stage_events(cfg, paths);
            std::cout << "events written to " << events_out << '\n';
        } else if (associate->parsed()) {
            PipelineConfig cfg;
            cfg.te_seconds = te;
            cfg.ts_seconds = ts;
            ArtifactPaths paths;
            paths.events_dir = assoc_events;
            paths.exclusions_json = (fs::path(assoc_events) / "exclusions.json").string();
            paths.q_csv = assoc_out;
            stage_associate(cfg, paths);
            std::cout << "association matrix written to " << assoc_out << '\n';
        } else if (cluster->parsed()) {
            PipelineConfig cfg;
            cfg.k = cluster_k == "auto" ? 0 : std::stoi(cluster_k);
            cfg.cluster_seed = cluster_seed;
            cfg.attach_excluded_to = attach_excluded;
            ArtifactPaths paths;
            paths.q_csv = cluster_q;
            paths.clusters_json = cluster_out;
            stage_cluster(cfg, paths);
            std::cout << "clusters written to " << cluster_out << '\n';
        } else if (dcc->parsed()) {
            PipelineConfig cfg;
            cfg.lags_days = dcc_lags;
            cfg.train_months = dcc_train_months;
            cfg.forecast_step_seconds = dcc_step;
            ArtifactPaths paths;
            paths.dataset_dir = dcc_in;
            paths.clusters_json = dcc_clusters;
            paths.exclusions_json = dcc_exclusions;
            paths.dcc_csv = dcc_out;
            stage_dcc(cfg, paths);
            std::cout << "feature table written to " << dcc_out << '\n';
        } else if (train_cmd->parsed()) {
            PipelineConfig cfg;
            if (!train_config.empty()) {
                cfg = load_pipeline_config(train_config);
            }
            ArtifactPaths paths;
            paths.dataset_dir = train_in;
            paths.clusters_json = train_clusters;
            paths.exclusions_json = train_exclusions;
            paths.dcc_csv = train_features;
            paths.train_dir = train_out;
            stage_train(cfg, paths);
            std::cout << "models written to " << train_out << '\n';
        } else if (forecast->parsed()) {
            PipelineConfig cfg;
            if (!fc_config.empty()) cfg = load_pipeline_config(fc_config);
            ArtifactPaths paths;
            paths.dataset_dir = fc_in;
            paths.train_dir = fc_models;
            paths.clusters_json = fc_clusters;
            paths.exclusions_json = fc_exclusions;
            forecast_single_day(cfg, paths, fc_date, fc_out);
            std::cout << "forecast written to " << fc_out << '\n';
        } else if (evaluate->parsed()) {
            PipelineConfig cfg;
            if (!ev_config.empty()) cfg = load_pipeline_config(ev_config);
            ArtifactPaths paths;
            paths.dataset_dir = ev_truth;
            paths.forecast_dir = ev_forecasts;
            paths.clusters_json = ev_clusters;
            paths.exclusions_json = ev_exclusions;
            paths.report_json = ev_out;
            stage_evaluate(cfg, paths);
            std::cout << "report written to " << ev_out << '\n';
        } else if (run->parsed()) {
            if (run_out.empty())
                throw ConfigError("run: --out or $LOADASSOC_ROOT is required");
            PipelineConfig cfg = load_pipeline_config(run_config);
            run_pipeline(cfg, run_out, run_from, run_to, run_force);
            std::cout << "pipeline finished, artifacts under " << run_out << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const StageError& e) {
        std::cerr << "stage failure: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
