#include "loadassoc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "loadassoc/errors.hpp"

namespace loadassoc {

void TrainConfig::validate() const {
    if (learning_rate <= 0 || batch_size < 1 || max_epochs < 1 || patience < 0 ||
        clip_norm <= 0 || val_fraction < 0 || val_fraction >= 1)
        throw ConfigError("train config: invalid values");
}

int FeatureSelection::max_lag() const {
    int m = 0;
    for (int l : lag_days) m = std::max(m, l);
    return m;
}

void FeatureSelection::validate() const {
    if (lag_days.empty())
        throw ConfigError("feature selection: at least one load lag is required");
    for (int l : lag_days)
        if (l < 1) throw ConfigError("feature selection: lags must be >= 1 day");
    for (const auto& w : weather)
        if (w != "temperature" && w != "humidity" && w != "dew_point")
            throw ConfigError("feature selection: unknown weather field '" + w + "'");
}

std::int64_t first_forecastable_day(const ModelConfig& cfg, const FeatureSelection& sel) {
    return cfg.input_window_days + sel.max_lag() - 1;
}

namespace {

const std::vector<double>& weather_field(const HouseholdDataset& ds, const std::string& name) {
    if (name == "temperature") return ds.weather.temperature;
    if (name == "humidity") return ds.weather.humidity;
    if (name == "dew_point") return ds.weather.dew_point;
    throw ConfigError("unknown weather field '" + name + "'");
}

} // namespace

void fit_model_norms(ForecastModel& model, const std::vector<double>& target_power,
                     const HouseholdDataset& forecast_ds, const FeatureSelection& sel,
                     std::int64_t train_days) {
    const auto spd = static_cast<std::int64_t>(model.config().output_slots);
    const auto n = static_cast<std::size_t>(train_days * spd);
    if (n == 0 || n > target_power.size())
        throw DataError("fit_model_norms: training day range out of bounds");

    model.target_norm =
        fit_normalizer(std::vector<double>(target_power.begin(),
                                           target_power.begin() + static_cast<std::ptrdiff_t>(n)));

    model.input_norm.min.clear();
    model.input_norm.max.clear();
    for (const auto& w : sel.weather) {
        const auto& v = weather_field(forecast_ds, w);
        if (v.size() < n) throw DataError("fit_model_norms: weather series too short");
        auto p = fit_normalizer(
            std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)));
        model.input_norm.min.push_back(p.min[0]);
        model.input_norm.max.push_back(p.max[0]);
    }
}

Sample build_sample(const HouseholdDataset& forecast_ds, const std::vector<double>& target_power,
                    const FeatureSelection& sel, const ForecastModel& model, std::int64_t day) {
    sel.validate();
    const ModelConfig& cfg = model.config();
    const auto spd = static_cast<std::int64_t>(cfg.output_slots);
    const auto w = static_cast<std::int64_t>(cfg.input_window_days);
    if (static_cast<int>(sel.lag_days.size()) != cfg.load_channels ||
        static_cast<int>(sel.weather.size()) != cfg.weather_channels)
        throw DataError("build_sample: selection does not match model channel layout");
    if (day < first_forecastable_day(cfg, sel))
        throw DataError("build_sample: insufficient history before day " + std::to_string(day));
    if ((day + 1) * spd > static_cast<std::int64_t>(target_power.size()))
        throw DataError("build_sample: day " + std::to_string(day) + " beyond series end");
    if (day >= static_cast<std::int64_t>(forecast_ds.calendar.day_of_week.size()))
        throw DataError("build_sample: day beyond calendar range");

    Sample s;
    s.day = day;
    const int c_static = cfg.load_channels + cfg.weather_channels;
    s.features.resize(c_static, cfg.seq_len());
    s.dow_id.resize(static_cast<std::size_t>(cfg.seq_len()));
    s.slot_id.resize(static_cast<std::size_t>(cfg.seq_len()));
    s.holiday_id.resize(static_cast<std::size_t>(cfg.seq_len()));

    const int target_dow = forecast_ds.calendar.day_of_week[static_cast<std::size_t>(day)];
    const int target_hol = forecast_ds.calendar.is_holiday[static_cast<std::size_t>(day)] ? 1 : 0;

    for (std::int64_t e = 0; e < w; ++e) {
        const std::int64_t window_day = day - w + e;
        for (std::int64_t slot = 0; slot < spd; ++slot) {
            const auto t = static_cast<int>(e * spd + slot);
            int ch = 0;
            for (int lag : sel.lag_days) {
                const std::int64_t src_day = window_day + 1 - lag;
                const double v = target_power[static_cast<std::size_t>(src_day * spd + slot)];
                s.features(ch++, t) = apply_scalar(model.target_norm, 0, v);
            }
            for (std::size_t wi = 0; wi < sel.weather.size(); ++wi) {
                const auto& field = weather_field(forecast_ds, sel.weather[wi]);
                const double v = field[static_cast<std::size_t>(day * spd + slot)];
                s.features(ch++, t) = apply_scalar(model.input_norm, wi, v);
            }
            const auto ti = static_cast<std::size_t>(t);
            s.dow_id[ti] = target_dow;
            s.slot_id[ti] = static_cast<int>(slot);
            s.holiday_id[ti] = target_hol;
        }
    }

    s.target.resize(spd);
    for (std::int64_t slot = 0; slot < spd; ++slot)
        s.target(slot) = apply_scalar(model.target_norm, 0,
                                      target_power[static_cast<std::size_t>(day * spd + slot)]);
    return s;
}

std::vector<Sample> build_sample_range(const HouseholdDataset& forecast_ds,
                                       const std::vector<double>& target_power,
                                       const FeatureSelection& sel, const ForecastModel& model,
                                       std::int64_t first_day, std::int64_t end_day) {
    std::vector<Sample> out;
    for (std::int64_t d = first_day; d < end_day; ++d)
        out.push_back(build_sample(forecast_ds, target_power, sel, model, d));
    return out;
}

namespace {

double global_grad_norm(ForecastModel& grads) {
    double sq = 0.0;
    grads.visit_tensors(
        [&](const std::string&, Eigen::MatrixXd& m) { sq += m.squaredNorm(); });
    return std::sqrt(sq);
}

struct Adam {
    ForecastModel m, v;
    std::int64_t step = 0;

    explicit Adam(const ModelConfig& cfg) : m(cfg), v(cfg) {}

    void update(ForecastModel& params, ForecastModel& grads, const TrainConfig& cfg) {
        ++step;
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));

        std::vector<Eigen::MatrixXd*> gs, ms, vs, ps;
        grads.visit_tensors([&](const std::string&, Eigen::MatrixXd& t) { gs.push_back(&t); });
        m.visit_tensors([&](const std::string&, Eigen::MatrixXd& t) { ms.push_back(&t); });
        v.visit_tensors([&](const std::string&, Eigen::MatrixXd& t) { vs.push_back(&t); });
        params.visit_tensors([&](const std::string&, Eigen::MatrixXd& t) { ps.push_back(&t); });

        for (std::size_t i = 0; i < gs.size(); ++i) {
            Eigen::ArrayXXd g = gs[i]->array();
            ms[i]->array() = cfg.adam_beta1 * ms[i]->array() + (1.0 - cfg.adam_beta1) * g;
            vs[i]->array() = cfg.adam_beta2 * vs[i]->array() + (1.0 - cfg.adam_beta2) * g * g;
            ps[i]->array() -= cfg.learning_rate * (ms[i]->array() / bc1) /
                              ((vs[i]->array() / bc2).sqrt() + cfg.adam_eps);
        }
    }
};

} // namespace

double evaluate_mse(const ForecastModel& model, const std::vector<Sample>& samples) {
    if (samples.empty()) throw DataError("evaluate_mse: no samples");
    double total = 0.0;
    for (const auto& s : samples) {
        Eigen::VectorXd y = model.forward(s);
        total += (y - s.target).squaredNorm() / static_cast<double>(s.target.size());
    }
    return total / static_cast<double>(samples.size());
}

TrainResult train(ForecastModel& model, const std::vector<Sample>& samples,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw DataError("train: empty training set");

    auto n = static_cast<std::int64_t>(samples.size());
    auto n_val = static_cast<std::int64_t>(
        std::llround(cfg.val_fraction * static_cast<double>(n)));
    n_val = std::min(n_val, n - 1);
    if (n_val < 0) n_val = 0;
    const std::int64_t n_train = n - n_val;

    std::vector<const Sample*> val;
    for (std::int64_t i = n_train; i < n; ++i) val.push_back(&samples[static_cast<std::size_t>(i)]);

    std::vector<std::size_t> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);

    Adam adam(model.config());
    ForecastModel grads(model.config());
    ForecastModel best = model;
    TrainResult result;
    result.best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        std::size_t done = 0;
        while (done < order.size()) {
            const std::size_t bsz =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                      order.size() - done);
            grads.zero_params();
            double batch_loss = 0.0;
            for (std::size_t b = 0; b < bsz; ++b)
                batch_loss += model.backward(samples[order[done + b]], grads);
            epoch_loss += batch_loss;

            const double scale = 1.0 / static_cast<double>(bsz);
            grads.visit_tensors([&](const std::string&, Eigen::MatrixXd& m) { m *= scale; });
            const double gnorm = global_grad_norm(grads);
            if (gnorm > cfg.clip_norm) {
                const double s = cfg.clip_norm / gnorm;
                grads.visit_tensors([&](const std::string&, Eigen::MatrixXd& m) { m *= s; });
            }
            adam.update(model, grads, cfg);
            done += bsz;
        }
        epoch_loss /= static_cast<double>(n_train);
        result.train_loss.push_back(epoch_loss);

        double vloss = epoch_loss;
        if (!val.empty()) {
            vloss = 0.0;
            for (const Sample* s : val) {
                Eigen::VectorXd y = model.forward(*s);
                vloss += (y - s->target).squaredNorm() / static_cast<double>(s->target.size());
            }
            vloss /= static_cast<double>(val.size());
        }
        result.val_loss.push_back(vloss);

        if (!std::isfinite(epoch_loss) || !std::isfinite(vloss))
            throw StageError("training diverged at epoch " + std::to_string(epoch));

        if (vloss < result.best_val) {
            result.best_val = vloss;
            result.best_epoch = epoch;
            best = model;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
    }

    model = best;
    return result;
}

Eigen::VectorXd predict_day_ahead(const ForecastModel& model,
                                  const HouseholdDataset& forecast_ds,
                                  const std::vector<double>& target_power,
                                  const FeatureSelection& sel, std::int64_t day) {
    Sample s = build_sample(forecast_ds, target_power, sel, model, day);
    Eigen::VectorXd y = model.forward(s);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = std::max(0.0, invert_scalar(model.target_norm, 0, y(i)));
    return y;
}

} // namespace loadassoc
