#include "loadassoc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "loadassoc/association.hpp"
#include "loadassoc/clustering.hpp"
#include "loadassoc/csv.hpp"
#include "loadassoc/dcor.hpp"
#include "loadassoc/errors.hpp"
#include "loadassoc/ingest.hpp"
#include "loadassoc/metrics.hpp"
#include "loadassoc/resample.hpp"
#include "loadassoc/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace loadassoc {

void PipelineConfig::validate() const {
    const bool have_csv = !data_csv.empty() && !schema_path.empty();
    const bool have_synth = !synth_spec_path.empty();
    if (have_csv && have_synth)
        throw ConfigError("config: data_csv and synth spec are mutually exclusive");
    if (on_threshold_w <= 0 || min_duration_slots < 1 || exclude_below_w <= 0)
        throw ConfigError("config: bad event-extraction parameters");
    if (te_seconds <= 0 || ts_seconds <= te_seconds)
        throw ConfigError("config: association windows must satisfy 0 < T_e < T_s");
    if (k < 0 || k == 1) throw ConfigError("config: k must be 0 (auto) or >= 2");
    if (lags_days.empty()) throw ConfigError("config: at least one lag is required");
    if (dcc_threshold < 0 || dcc_threshold > 1)
        throw ConfigError("config: dcc threshold outside [0, 1]");
    if (forecast_step_seconds <= 0 || kSecondsPerDay % forecast_step_seconds != 0)
        throw ConfigError("config: forecast step must divide a day");
    if (input_window_days < 1) throw ConfigError("config: input window must be >= 1 day");
    if (train_months < 1) throw ConfigError("config: train_months must be >= 1");
    if (jobs < 0) throw ConfigError("config: jobs must be >= 0");
    train_cfg.validate();
}

ArtifactPaths ArtifactPaths::from_root(const std::string& root) {
    fs::path r(root);
    ArtifactPaths p;
    p.dataset_dir = (r / "dataset").string();
    p.events_dir = (r / "events").string();
    p.exclusions_json = (r / "events" / "exclusions.json").string();
    p.q_csv = (r / "associate" / "q.csv").string();
    p.clusters_json = (r / "cluster" / "clusters.json").string();
    p.dcc_csv = (r / "dcc" / "dcc.csv").string();
    p.train_dir = (r / "train").string();
    p.forecast_dir = (r / "forecast").string();
    p.report_json = (r / "evaluate" / "report.json").string();
    return p;
}

namespace {

TrainConfig train_config_from_json(const json& j) {
    TrainConfig t;
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.max_epochs = j.value("max_epochs", t.max_epochs);
    t.patience = j.value("patience", t.patience);
    t.seed = j.value("seed", t.seed);
    t.clip_norm = j.value("clip_norm", t.clip_norm);
    t.val_fraction = j.value("val_fraction", t.val_fraction);
    return t;
}

void model_overrides_from_json(const json& j, ModelConfig& m) {
    m.conv1_filters = j.value("conv1_filters", m.conv1_filters);
    m.conv2_filters = j.value("conv2_filters", m.conv2_filters);
    m.gru_units = j.value("gru_units", m.gru_units);
    m.gru_layers = j.value("gru_layers", m.gru_layers);
    m.kernel_size = j.value("kernel_size", m.kernel_size);
    m.embed_dim = j.value("embed_dim", m.embed_dim);
}

} // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }

    PipelineConfig c;
    if (j.contains("source")) {
        const auto& s = j.at("source");
        if (s.contains("csv")) c.data_csv = s.at("csv").get<std::vector<std::string>>();
        if (s.contains("schema")) c.schema_path = s.at("schema").get<std::string>();
        if (s.contains("synth_spec")) c.synth_spec_path = s.at("synth_spec").get<std::string>();
    }
    if (j.contains("events")) {
        const auto& e = j.at("events");
        c.on_threshold_w = e.value("on_threshold_w", c.on_threshold_w);
        c.min_duration_slots = e.value("min_duration_slots", c.min_duration_slots);
        c.exclude_below_w = e.value("exclude_below_w", c.exclude_below_w);
    }
    if (j.contains("associate")) {
        const auto& a = j.at("associate");
        c.te_seconds = a.value("te_seconds", c.te_seconds);
        c.ts_seconds = a.value("ts_seconds", c.ts_seconds);
    }
    if (j.contains("cluster")) {
        const auto& k = j.at("cluster");
        if (k.contains("k")) {
            if (k.at("k").is_string()) {
                if (k.at("k").get<std::string>() != "auto")
                    throw ConfigError("config: cluster.k must be \"auto\" or an integer");
                c.k = 0;
            } else {
                c.k = k.at("k").get<int>();
            }
        }
        c.cluster_seed = k.value("seed", c.cluster_seed);
        c.attach_excluded_to = k.value("attach_excluded_to", c.attach_excluded_to);
    }
    if (j.contains("dcc")) {
        const auto& d = j.at("dcc");
        if (d.contains("lags_days")) c.lags_days = d.at("lags_days").get<std::vector<int>>();
        c.dcc_threshold = d.value("threshold", c.dcc_threshold);
    }
    if (j.contains("forecast")) {
        const auto& f = j.at("forecast");
        c.forecast_step_seconds = f.value("step_seconds", c.forecast_step_seconds);
        c.input_window_days = f.value("input_window_days", c.input_window_days);
    }
    if (j.contains("split")) c.train_months = j.at("split").value("train_months", c.train_months);
    if (j.contains("train")) c.train_cfg = train_config_from_json(j.at("train"));
    if (j.contains("models")) {
        if (j.at("models").contains("small"))
            model_overrides_from_json(j.at("models").at("small"), c.small_model);
        if (j.at("models").contains("large"))
            model_overrides_from_json(j.at("models").at("large"), c.large_model);
    }
    c.jobs = j.value("jobs", c.jobs);
    c.utc_offset_seconds = 3600 * j.value("utc_offset_hours", std::int64_t{0});
    c.validate();
    return c;
}

std::string dump_pipeline_config(const PipelineConfig& c) {
    json j;
    j["source"] = {{"csv", c.data_csv},
                   {"schema", c.schema_path},
                   {"synth_spec", c.synth_spec_path}};
    j["events"] = {{"on_threshold_w", c.on_threshold_w},
                   {"min_duration_slots", c.min_duration_slots},
                   {"exclude_below_w", c.exclude_below_w}};
    j["associate"] = {{"te_seconds", c.te_seconds}, {"ts_seconds", c.ts_seconds}};
    j["cluster"] = {{"k", c.k},
                    {"seed", c.cluster_seed},
                    {"attach_excluded_to", c.attach_excluded_to}};
    j["dcc"] = {{"lags_days", c.lags_days}, {"threshold", c.dcc_threshold}};
    j["forecast"] = {{"step_seconds", c.forecast_step_seconds},
                     {"input_window_days", c.input_window_days}};
    j["split"] = {{"train_months", c.train_months}};
    j["train"] = {{"learning_rate", c.train_cfg.learning_rate},
                  {"batch_size", c.train_cfg.batch_size},
                  {"max_epochs", c.train_cfg.max_epochs},
                  {"patience", c.train_cfg.patience},
                  {"seed", c.train_cfg.seed},
                  {"clip_norm", c.train_cfg.clip_norm},
                  {"val_fraction", c.train_cfg.val_fraction}};
    auto model_json = [](const ModelConfig& m) {
        return json{{"conv1_filters", m.conv1_filters}, {"conv2_filters", m.conv2_filters},
                    {"gru_units", m.gru_units},         {"gru_layers", m.gru_layers},
                    {"kernel_size", m.kernel_size},     {"embed_dim", m.embed_dim}};
    };
    j["models"] = {{"small", model_json(c.small_model)}, {"large", model_json(c.large_model)}};
    j["jobs"] = c.jobs;
    j["utc_offset_hours"] = c.utc_offset_seconds / 3600;
    return j.dump(2);
}

std::uint64_t fnv1a_hash(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const auto n = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (in.eof()) break;
    }
    return h;
}

namespace {

constexpr int kStageVersion = 1;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::string> list_dir_files(const std::string& dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<std::string> stage_inputs(const PipelineConfig& cfg, const ArtifactPaths& p,
                                      const std::string& stage) {
    if (stage == "ingest") {
        std::vector<std::string> in = cfg.data_csv;
        if (!cfg.schema_path.empty()) in.push_back(cfg.schema_path);
        if (!cfg.synth_spec_path.empty()) in.push_back(cfg.synth_spec_path);
        return in;
    }
    if (stage == "events") return list_dir_files(p.dataset_dir);
    if (stage == "associate") return list_dir_files(p.events_dir);
    if (stage == "cluster") return {p.q_csv, p.q_csv + ".counters.json"};
    if (stage == "dcc") {
        auto in = list_dir_files(p.dataset_dir);
        in.push_back(p.clusters_json);
        in.push_back(p.exclusions_json);
        return in;
    }
    if (stage == "train") {
        auto in = list_dir_files(p.dataset_dir);
        in.push_back(p.clusters_json);
        in.push_back(p.exclusions_json);
        in.push_back(p.dcc_csv);
        return in;
    }
    if (stage == "forecast") {
        auto in = list_dir_files(p.dataset_dir);
        auto models = list_dir_files(p.train_dir);
        in.insert(in.end(), models.begin(), models.end());
        in.push_back(p.clusters_json);
        in.push_back(p.exclusions_json);
        return in;
    }
    if (stage == "evaluate") {
        auto in = list_dir_files(p.forecast_dir);
        auto ds = list_dir_files(p.dataset_dir);
        in.insert(in.end(), ds.begin(), ds.end());
        in.push_back(p.clusters_json);
        in.push_back(p.exclusions_json);
        return in;
    }
    throw ConfigError("unknown stage '" + stage + "'");
}

std::vector<std::string> stage_key_outputs(const ArtifactPaths& p, const std::string& stage) {
    if (stage == "ingest") return {(fs::path(p.dataset_dir) / "dataset.json").string()};
    if (stage == "events")
        return {(fs::path(p.events_dir) / "events.csv").string(), p.exclusions_json,
                (fs::path(p.events_dir) / "grid.json").string()};
    if (stage == "associate") return {p.q_csv};
    if (stage == "cluster") return {p.clusters_json};
    if (stage == "dcc") return {p.dcc_csv};
    if (stage == "train") return {(fs::path(p.train_dir) / "selections.json").string()};
    if (stage == "forecast")
        return {(fs::path(p.forecast_dir) / "forecast_overall.csv").string(),
                (fs::path(p.forecast_dir) / "truth_total.csv").string()};
    if (stage == "evaluate") return {p.report_json};
    throw ConfigError("unknown stage '" + stage + "'");
}

json build_manifest(const PipelineConfig& cfg, const ArtifactPaths& p, const std::string& stage) {
    json m;
    m["stage"] = stage;
    m["stage_version"] = kStageVersion;
    const std::string dump = dump_pipeline_config(cfg);
    m["config_hash"] = hex64(fnv1a_hash(dump.data(), dump.size()));
    m["config"] = json::parse(dump);
    json inputs = json::object();
    for (const auto& path : stage_inputs(cfg, p, stage)) inputs[path] = hex64(hash_file(path));
    m["input_hashes"] = inputs;
    return m;
}

void write_manifest(const PipelineConfig& cfg, const ArtifactPaths& p, const std::string& stage) {
    json m = build_manifest(cfg, p, stage);
    fs::path stage_dir = fs::path(stage_key_outputs(p, stage).front()).parent_path();
    fs::create_directories(stage_dir);
    std::ofstream out(stage_dir / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out) throw StageError("cannot write manifest for stage " + stage);
}

bool stage_up_to_date(const PipelineConfig& cfg, const ArtifactPaths& p,
                      const std::string& stage) {
    for (const auto& out : stage_key_outputs(p, stage))
        if (!fs::exists(out)) return false;
    fs::path stage_dir = fs::path(stage_key_outputs(p, stage).front()).parent_path();
    std::ifstream in(stage_dir / "manifest.json");
    if (!in) return false;
    json stored;
    try {
        stored = json::parse(in);
    } catch (const json::exception&) {
        return false;
    }
    json wanted = build_manifest(cfg, p, stage);
    return stored.value("stage_version", -1) == wanted["stage_version"].get<int>() &&
           stored.value("config_hash", "") == wanted["config_hash"].get<std::string>() &&
           stored.value("input_hashes", json::object()) == wanted["input_hashes"];
}

void require_inputs(const PipelineConfig& cfg, const ArtifactPaths& p, const std::string& stage) {
    auto inputs = stage_inputs(cfg, p, stage);
    if (stage != "ingest" && inputs.empty())
        throw DataError("stage '" + stage + "': upstream artifacts are missing");
    for (const auto& path : inputs)
        if (!fs::exists(path)) throw DataError("stage '" + stage + "': missing artifact " + path);
}

ExclusionReport load_exclusions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing exclusions file: " + path);
    json j = json::parse(in);
    ExclusionReport r;
    r.excluded = j.at("excluded").get<std::vector<std::string>>();
    r.retained = j.at("retained").get<std::vector<std::string>>();
    r.rule_threshold = j.at("threshold").get<double>();
    return r;
}

struct ForecastContext {
    HouseholdDataset fg; // forecast-grid dataset
    ClusterAssignment clusters;
    ExclusionReport exclusions;
    std::vector<ApplianceSeries> cluster_loads;
    std::vector<double> total;
    std::int64_t train_days = 0;
    std::int64_t spd = 0;
};

ForecastContext make_forecast_context(const PipelineConfig& cfg, const ArtifactPaths& p) {
    ForecastContext ctx;
    HouseholdDataset ds = load_dataset(p.dataset_dir);
    ctx.fg = resample_dataset(ds, cfg.forecast_step_seconds, cfg.utc_offset_seconds);
    ctx.spd = ctx.fg.grid().slots_per_day();
    ctx.train_days = split_slot(ctx.fg.grid(), cfg.train_months) / ctx.spd;
    if (ctx.train_days <= 0 || ctx.train_days >= ctx.fg.days)
        throw DataError("train split does not leave both train and test days");

    ctx.clusters = load_clusters(p.clusters_json);
    ctx.exclusions = load_exclusions(p.exclusions_json);
    ctx.cluster_loads = aggregate_cluster_loads(ctx.fg, ctx.clusters, ctx.exclusions,
                                                ctx.clusters.attach_excluded_to);
    ctx.total = ctx.fg.appliance_sum();
    return ctx;
}

FeatureSelection selection_for(const FeatureTable& table, const std::string& target,
                               double threshold) {
    auto selected = select_features(table, threshold);
    auto it = selected.find(target);
    if (it == selected.end()) throw DataError("no feature column for target '" + target + "'");
    FeatureSelection sel;
    sel.lag_days.clear();
    for (const auto& f : it->second) {
        if (f.rfind("lag_", 0) == 0)
            sel.lag_days.push_back(std::stoi(f.substr(4, f.size() - 5)));
        else
            sel.weather.push_back(f);
    }
    sel.validate();
    return sel;
}

} // namespace

void stage_ingest(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    const bool have_csv = !cfg.data_csv.empty() && !cfg.schema_path.empty();
    if (!have_csv && cfg.synth_spec_path.empty())
        throw ConfigError("ingest: either data_csv+schema or a synth spec is required");
    fs::create_directories(paths.dataset_dir);
    HouseholdDataset ds;
    if (!cfg.synth_spec_path.empty()) {
        SynthSpec spec = load_synth_spec(cfg.synth_spec_path);
        ds = generate(spec).dataset;
    } else {
        IngestSchema schema = load_schema(cfg.schema_path);
        ds = ingest_csv(cfg.data_csv, schema);
    }
    ds.validate();
    save_dataset(ds, paths.dataset_dir);
    write_manifest(cfg, paths, "ingest");
}

void stage_events(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    HouseholdDataset ds = load_dataset(paths.dataset_dir);
    ExclusionReport excl = exclude_low_power(ds, cfg.exclude_below_w);

    std::vector<EventStream> streams;
    for (const auto& id : excl.retained) {
        const ApplianceSeries* a = ds.find(id);
        streams.push_back(extract_events(*a, cfg.on_threshold_w, cfg.min_duration_slots));
    }

    fs::create_directories(paths.events_dir);
    fs::create_directories(fs::path(paths.exclusions_json).parent_path());
    save_events(streams, (fs::path(paths.events_dir) / "events.csv").string());

    json excl_json{{"threshold", excl.rule_threshold},
                   {"excluded", excl.excluded},
                   {"retained", excl.retained}};
    std::ofstream eout(paths.exclusions_json);
    eout << excl_json.dump(2) << '\n';

    json grid_json{{"grid",
                    {{"start", ds.grid().start},
                     {"step", ds.grid().step},
                     {"count", ds.grid().count}}},
                   {"days", ds.days}};
    std::ofstream gout(fs::path(paths.events_dir) / "grid.json");
    gout << grid_json.dump(2) << '\n';
    if (!eout || !gout) throw StageError("events stage: failed writing outputs");
    write_manifest(cfg, paths, "events");
}

void stage_associate(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    std::ifstream gin(fs::path(paths.events_dir) / "grid.json");
    if (!gin) throw DataError("missing grid.json in " + paths.events_dir);
    json gj = json::parse(gin);
    TimeGrid grid{gj.at("grid").at("start").get<std::int64_t>(),
                  gj.at("grid").at("step").get<std::int64_t>(),
                  gj.at("grid").at("count").get<std::int64_t>()};
    const auto days = gj.at("days").get<std::int64_t>();

    std::vector<EventStream> streams =
        load_events((fs::path(paths.events_dir) / "events.csv").string(), grid);
    AssociationConfig acfg{cfg.te_seconds, cfg.ts_seconds, cfg.utc_offset_seconds};
    AssociationMatrix m = association_matrix(streams, acfg, days);

    fs::create_directories(fs::path(paths.q_csv).parent_path());
    save_association(m, paths.q_csv);
    write_manifest(cfg, paths, "associate");
}

void stage_cluster(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    AssociationMatrix m = load_association(paths.q_csv);
    ClusterAssignment assignment;
    if (cfg.k == 0 && m.size() >= 3)
        assignment = select_k(m, cfg.cluster_seed);
    else if (cfg.k == 0)
        assignment = assign_clusters(m, static_cast<int>(m.size()), cfg.cluster_seed);
    else
        assignment = assign_clusters(m, cfg.k, cfg.cluster_seed);
    assignment.attach_excluded_to = cfg.attach_excluded_to;
    if (assignment.attach_excluded_to >= assignment.k) assignment.attach_excluded_to = 0;

    if (assignment.degenerate_all_zero)
        std::cerr << "warning: all-zero association matrix, every appliance is its own cluster\n";

    fs::create_directories(fs::path(paths.clusters_json).parent_path());
    save_clusters(assignment, paths.clusters_json);
    write_manifest(cfg, paths, "cluster");
}

void stage_dcc(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    ForecastContext ctx = make_forecast_context(cfg, paths);
    FeatureTable table =
        build_feature_table(ctx.fg, ctx.cluster_loads, cfg.lags_days, ctx.train_days);
    fs::create_directories(fs::path(paths.dcc_csv).parent_path());
    save_feature_table(table, paths.dcc_csv);
    write_manifest(cfg, paths, "dcc");
}

void stage_train(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    ForecastContext ctx = make_forecast_context(cfg, paths);
    FeatureTable table = load_feature_table(paths.dcc_csv);

    struct Task {
        std::string target;
        std::string preset;
        const std::vector<double>* series;
    };
    std::vector<Task> tasks;
    tasks.push_back({"total", "large", &ctx.total});
    for (const auto& c : ctx.cluster_loads) tasks.push_back({c.id, "small", &c.power});

    fs::create_directories(paths.train_dir);

    auto run_one = [&](const Task& task, std::uint64_t seed) {
        FeatureSelection sel = selection_for(table, task.target, cfg.dcc_threshold);
        if (ctx.fg.weather.empty()) sel.weather.clear();

        ModelConfig mc = task.preset == "large" ? cfg.large_model : cfg.small_model;
        mc.input_window_days = cfg.input_window_days;
        mc.output_slots = static_cast<int>(ctx.spd);
        mc.load_channels = static_cast<int>(sel.lag_days.size());
        mc.weather_channels = static_cast<int>(sel.weather.size());

        ForecastModel model(mc);
        model.init_params(seed);
        fit_model_norms(model, *task.series, ctx.fg, sel, ctx.train_days);

        const std::int64_t first = first_forecastable_day(mc, sel);
        if (first >= ctx.train_days)
            throw DataError("train: not enough training days for window and lags");
        std::vector<Sample> samples =
            build_sample_range(ctx.fg, *task.series, sel, model, first, ctx.train_days);

        TrainConfig tc = cfg.train_cfg;
        tc.seed = seed;
        TrainResult res = train(model, samples, tc);
        return std::tuple{std::move(model), std::move(sel), std::move(res)};
    };

    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        seeds.push_back(splitmix64(cfg.train_cfg.seed ^ (0x7EA10000ULL + i)));

    using RunResult = std::tuple<ForecastModel, FeatureSelection, TrainResult>;
    std::vector<RunResult> results(tasks.size());
    const int jobs =
        cfg.jobs == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : cfg.jobs;
    if (jobs > 1) {
        std::vector<std::future<RunResult>> futures;
        for (std::size_t i = 0; i < tasks.size(); ++i)
            futures.push_back(std::async(std::launch::async, run_one, tasks[i], seeds[i]));
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = run_one(tasks[i], seeds[i]);
    }

    json selections;
    selections["train_days"] = ctx.train_days;
    selections["forecast_step_seconds"] = cfg.forecast_step_seconds;
    json targets = json::object();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto& [model, sel, res] = results[i];
        const std::string file = "model_" + tasks[i].target + ".json";
        save_model(model, (fs::path(paths.train_dir) / file).string());
        targets[tasks[i].target] = {{"model", file},
                                    {"preset", tasks[i].preset},
                                    {"lag_days", sel.lag_days},
                                    {"weather", sel.weather},
                                    {"best_epoch", res.best_epoch},
                                    {"best_val_mse", res.best_val},
                                    {"epochs_run", res.train_loss.size()},
                                    {"seed", seeds[i]}};
    }
    selections["targets"] = targets;
    std::ofstream sout(fs::path(paths.train_dir) / "selections.json");
    sout << selections.dump(2) << '\n';
    if (!sout) throw StageError("train stage: failed writing selections.json");
    write_manifest(cfg, paths, "train");
}

void stage_forecast(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    ForecastContext ctx = make_forecast_context(cfg, paths);
    std::ifstream sin(fs::path(paths.train_dir) / "selections.json");
    if (!sin) throw DataError("missing selections.json in " + paths.train_dir);
    json selections = json::parse(sin);

    fs::create_directories(paths.forecast_dir);

    auto predict_target = [&](const std::string& target, const std::vector<double>& series) {
        const auto& meta = selections.at("targets").at(target);
        ForecastModel model =
            load_model((fs::path(paths.train_dir) / meta.at("model").get<std::string>()).string());
        FeatureSelection sel;
        sel.lag_days = meta.at("lag_days").get<std::vector<int>>();
        sel.weather = meta.at("weather").get<std::vector<std::string>>();

        ForecastSeries out;
        out.id = target;
        out.first_day = ctx.train_days;
        for (std::int64_t d = ctx.train_days; d < ctx.fg.days; ++d) {
            Eigen::VectorXd y = predict_day_ahead(model, ctx.fg, series, sel, d);
            for (Eigen::Index s = 0; s < y.size(); ++s) out.values.push_back(y(s));
        }
        return out;
    };

    ForecastSeries overall = predict_target("total", ctx.total);
    save_forecast(overall, ctx.fg.grid(),
                  (fs::path(paths.forecast_dir) / "forecast_overall.csv").string());
    for (const auto& c : ctx.cluster_loads) {
        ForecastSeries f = predict_target(c.id, c.power);
        save_forecast(f, ctx.fg.grid(),
                      (fs::path(paths.forecast_dir) / ("forecast_" + c.id + ".csv")).string());
    }

    ForecastSeries truth;
    truth.id = "truth_total";
    truth.first_day = ctx.train_days;
    for (std::int64_t d = ctx.train_days; d < ctx.fg.days; ++d)
        for (std::int64_t s = 0; s < ctx.spd; ++s)
            truth.values.push_back(ctx.total[static_cast<std::size_t>(d * ctx.spd + s)]);
    save_forecast(truth, ctx.fg.grid(),
                  (fs::path(paths.forecast_dir) / "truth_total.csv").string());
    write_manifest(cfg, paths, "forecast");
}

void stage_evaluate(const PipelineConfig& cfg, const ArtifactPaths& paths) {
    ForecastContext ctx = make_forecast_context(cfg, paths);

    // coverage: every appliance is either clustered or attached
    for (const auto& a : ctx.fg.appliances) {
        const bool clustered = std::find(ctx.clusters.ids.begin(), ctx.clusters.ids.end(),
                                         a.id) != ctx.clusters.ids.end();
        const bool attached = std::find(ctx.exclusions.excluded.begin(),
                                        ctx.exclusions.excluded.end(),
                                        a.id) != ctx.exclusions.excluded.end();
        if (!clustered && !attached)
            throw DataError("evaluate: appliance '" + a.id + "' is in no cluster");
    }

    // conservation: cluster loads must sum to the appliance sum
    double max_rel = 0.0;
    for (std::int64_t i = 0; i < ctx.fg.grid().count; ++i) {
        double sum = 0.0;
        for (const auto& c : ctx.cluster_loads) sum += c.power[static_cast<std::size_t>(i)];
        const double ref = ctx.total[static_cast<std::size_t>(i)];
        const double denom = std::max(1.0, std::fabs(ref));
        max_rel = std::max(max_rel, std::fabs(sum - ref) / denom);
    }
    if (max_rel > 1e-9)
        throw StageError("evaluate: cluster loads do not conserve the appliance sum");

    const fs::path fdir(paths.forecast_dir);
    ForecastSeries truth = load_forecast((fdir / "truth_total.csv").string(), ctx.fg.grid());
    truth.id = "truth_total";
    ForecastSeries overall = load_forecast((fdir / "forecast_overall.csv").string(), ctx.fg.grid());
    overall.id = "overall";
    std::vector<ForecastSeries> cluster_fc;
    for (const auto& c : ctx.cluster_loads) {
        ForecastSeries f = load_forecast((fdir / ("forecast_" + c.id + ".csv")).string(),
                                         ctx.fg.grid());
        f.id = c.id;
        cluster_fc.push_back(std::move(f));
    }

    EvalReport report = compare_methods(cluster_fc, overall, truth, static_cast<int>(ctx.spd));
    fs::create_directories(fs::path(paths.report_json).parent_path());
    save_report(report, paths.report_json);
    write_manifest(cfg, paths, "evaluate");
}

void forecast_single_day(const PipelineConfig& cfg, const ArtifactPaths& paths,
                         const std::string& date, const std::string& out_csv) {
    ForecastContext ctx = make_forecast_context(cfg, paths);
    std::ifstream sin(fs::path(paths.train_dir) / "selections.json");
    if (!sin) throw DataError("missing selections.json in " + paths.train_dir);
    json selections = json::parse(sin);

    const std::int64_t day =
        day_of_timestamp(parse_date(date)) - day_of_timestamp(ctx.fg.grid().start);
    if (day < 0 || day >= ctx.fg.days)
        throw DataError("forecast date " + date + " is outside the dataset");

    auto predict = [&](const std::string& target, const std::vector<double>& series) {
        const auto& meta = selections.at("targets").at(target);
        ForecastModel model =
            load_model((fs::path(paths.train_dir) / meta.at("model").get<std::string>()).string());
        FeatureSelection sel;
        sel.lag_days = meta.at("lag_days").get<std::vector<int>>();
        sel.weather = meta.at("weather").get<std::vector<std::string>>();
        return predict_day_ahead(model, ctx.fg, series, sel, day);
    };

    std::vector<std::string> header = {"slot", "timestamp", "overall"};
    std::vector<Eigen::VectorXd> columns;
    columns.push_back(predict("total", ctx.total));
    for (const auto& c : ctx.cluster_loads) {
        header.push_back(c.id);
        columns.push_back(predict(c.id, c.power));
    }
    header.push_back("cluster_sum");

    std::vector<std::vector<double>> rows;
    for (std::int64_t s = 0; s < ctx.spd; ++s) {
        std::vector<double> row;
        row.push_back(static_cast<double>(s));
        row.push_back(static_cast<double>(ctx.fg.grid().start + day * kSecondsPerDay +
                                          s * ctx.fg.grid().step));
        double cluster_sum = 0.0;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            row.push_back(columns[c](s));
            if (c > 0) cluster_sum += columns[c](s);
        }
        row.push_back(cluster_sum);
        rows.push_back(std::move(row));
    }
    write_csv(out_csv, header, rows);
}

void run_pipeline(const PipelineConfig& cfg, const std::string& root, const std::string& from,
                  const std::string& to, bool force) {
    cfg.validate();
    auto find_stage = [&](const std::string& name) {
        auto it = std::find(kStageOrder.begin(), kStageOrder.end(), name);
        if (it == kStageOrder.end()) throw ConfigError("unknown stage '" + name + "'");
        return it - kStageOrder.begin();
    };
    const auto first = find_stage(from);
    const auto last = find_stage(to);
    if (first > last) throw ConfigError("--from stage comes after --to stage");

    fs::create_directories(root);
    const ArtifactPaths paths = ArtifactPaths::from_root(root);
    for (auto i = first; i <= last; ++i) {
        const std::string& stage = kStageOrder[static_cast<std::size_t>(i)];
        require_inputs(cfg, paths, stage);
        if (!force && stage_up_to_date(cfg, paths, stage)) {
            std::cout << "[" << stage << "] up to date, skipping\n";
            continue;
        }
        std::cout << "[" << stage << "] running\n";
        if (stage == "ingest") stage_ingest(cfg, paths);
        else if (stage == "events") stage_events(cfg, paths);
        else if (stage == "associate") stage_associate(cfg, paths);
        else if (stage == "cluster") stage_cluster(cfg, paths);
        else if (stage == "dcc") stage_dcc(cfg, paths);
        else if (stage == "train") stage_train(cfg, paths);
        else if (stage == "forecast") stage_forecast(cfg, paths);
        else if (stage == "evaluate") stage_evaluate(cfg, paths);
    }
}

} // namespace loadassoc
