#include "loadassoc/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "loadassoc/errors.hpp"

using nlohmann::json;

namespace loadassoc {

ModelConfig ModelConfig::small_preset() {
    ModelConfig c;
    c.conv1_filters = 16;
    c.conv2_filters = 64;
    c.gru_units = 32;
    c.gru_layers = 1;
    return c;
}

ModelConfig ModelConfig::large_preset() {
    ModelConfig c;
    c.conv1_filters = 32;
    c.conv2_filters = 128;
    c.gru_units = 64;
    c.gru_layers = 3;
    return c;
}

void ModelConfig::validate() const {
    if (conv1_filters < 1 || conv2_filters < 1 || gru_units < 1 || gru_layers < 1 ||
        kernel_size < 1 || embed_dim < 1 || input_window_days < 1 || output_slots < 1 ||
        load_channels < 1 || weather_channels < 0)
        throw ConfigError("model config: all sizes must be positive");
    if (gru_seq_len() < 1)
        throw ConfigError("model config: window too short for two valid convolutions");
}

ForecastModel::ForecastModel(const ModelConfig& config) : config_(config) {
    config_.validate();
    const int c_in = config_.input_channels();
    const int k = config_.kernel_size;
    embed_dow = Eigen::MatrixXd::Zero(7, config_.embed_dim);
    embed_slot = Eigen::MatrixXd::Zero(config_.output_slots, config_.embed_dim);
    embed_holiday = Eigen::MatrixXd::Zero(2, config_.embed_dim);
    conv1_w = Eigen::MatrixXd::Zero(config_.conv1_filters, c_in * k);
    conv1_b = Eigen::MatrixXd::Zero(config_.conv1_filters, 1);
    conv2_w = Eigen::MatrixXd::Zero(config_.conv2_filters, config_.conv1_filters * k);
    conv2_b = Eigen::MatrixXd::Zero(config_.conv2_filters, 1);
    gru.resize(static_cast<std::size_t>(config_.gru_layers));
    const int h = config_.gru_units;
    for (int l = 0; l < config_.gru_layers; ++l) {
        const int in = l == 0 ? config_.conv2_filters : h;
        auto& g = gru[static_cast<std::size_t>(l)];
        g.wz = Eigen::MatrixXd::Zero(h, in);
        g.wr = Eigen::MatrixXd::Zero(h, in);
        g.wn = Eigen::MatrixXd::Zero(h, in);
        g.uz = Eigen::MatrixXd::Zero(h, h);
        g.ur = Eigen::MatrixXd::Zero(h, h);
        g.un = Eigen::MatrixXd::Zero(h, h);
        g.bz = Eigen::MatrixXd::Zero(h, 1);
        g.br = Eigen::MatrixXd::Zero(h, 1);
        g.bn = Eigen::MatrixXd::Zero(h, 1);
    }
    head_w = Eigen::MatrixXd::Zero(config_.output_slots, h);
}

void ForecastModel::visit_tensors(
    const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
    fn("embed_dow", embed_dow);
    fn("embed_slot", embed_slot);
    fn("embed_holiday", embed_holiday);
    fn("conv1_w", conv1_w);
    fn("conv1_b", conv1_b);
    fn("conv2_w", conv2_w);
    fn("conv2_b", conv2_b);
    for (std::size_t l = 0; l < gru.size(); ++l) {
        const std::string p = "gru" + std::to_string(l) + ".";
        fn(p + "wz", gru[l].wz);
        fn(p + "uz", gru[l].uz);
        fn(p + "bz", gru[l].bz);
        fn(p + "wr", gru[l].wr);
        fn(p + "ur", gru[l].ur);
        fn(p + "br", gru[l].br);
        fn(p + "wn", gru[l].wn);
        fn(p + "un", gru[l].un);
        fn(p + "bn", gru[l].bn);
    }
    fn("head_w", head_w);
}

void ForecastModel::visit_tensors(
    const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
    const_cast<ForecastModel*>(this)->visit_tensors(
        [&](const std::string& name, Eigen::MatrixXd& m) { fn(name, m); });
}

std::int64_t ForecastModel::parameter_count() const {
    std::int64_t n = 0;
    visit_tensors([&](const std::string&, const Eigen::MatrixXd& m) { n += m.size(); });
    return n;
}

void ForecastModel::init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto fill = [&](Eigen::MatrixXd& m, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    };
    fill(embed_dow, config_.embed_dim);
    fill(embed_slot, config_.embed_dim);
    fill(embed_holiday, config_.embed_dim);
    fill(conv1_w, static_cast<double>(conv1_w.cols()));
    fill(conv2_w, static_cast<double>(conv2_w.cols()));
    for (auto& g : gru) {
        fill(g.wz, static_cast<double>(g.wz.cols()));
        fill(g.uz, static_cast<double>(g.uz.cols()));
        fill(g.wr, static_cast<double>(g.wr.cols()));
        fill(g.ur, static_cast<double>(g.ur.cols()));
        fill(g.wn, static_cast<double>(g.wn.cols()));
        fill(g.un, static_cast<double>(g.un.cols()));
    }
    fill(head_w, static_cast<double>(head_w.cols()));
    // biases stay zero
}

void ForecastModel::zero_params() {
    visit_tensors([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int k) {
    const auto c = x.rows();
    const auto t_out = x.cols() - k + 1;
    Eigen::MatrixXd out(c * k, t_out);
    for (Eigen::Index t = 0; t < t_out; ++t)
        for (int kk = 0; kk < k; ++kk) out.block(kk * c, t, c, 1) = x.col(t + kk);
    return out;
}

Eigen::MatrixXd col2im(const Eigen::MatrixXd& dcol, Eigen::Index c, int k, Eigen::Index t_in) {
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(c, t_in);
    for (Eigen::Index t = 0; t < dcol.cols(); ++t)
        for (int kk = 0; kk < k; ++kk) dx.col(t + kk) += dcol.block(kk * c, t, c, 1);
    return dx;
}

struct GruTrace {
    Eigen::MatrixXd x;             // I x T layer input
    Eigen::MatrixXd z, r, n, h, u; // H x T
};

struct Trace {
    Eigen::MatrixXd x0;   // C x T assembled input
    Eigen::MatrixXd col1; // (C*K) x T1
    Eigen::MatrixXd a1;   // F1 x T1, post-ReLU
    Eigen::MatrixXd col2; // (F1*K) x T2
    Eigen::MatrixXd a2;   // F2 x T2, post-ReLU
    std::vector<GruTrace> gru;
    Eigen::VectorXd y;
};

void check_sample(const ModelConfig& cfg, const Sample& s) {
    const auto t = static_cast<std::size_t>(cfg.seq_len());
    if (s.features.rows() != cfg.load_channels + cfg.weather_channels ||
        s.features.cols() != cfg.seq_len())
        throw DataError("sample: feature matrix shape mismatch");
    if (s.dow_id.size() != t || s.slot_id.size() != t || s.holiday_id.size() != t)
        throw DataError("sample: calendar id length mismatch");
}

void run_forward(const ForecastModel& m, const Sample& s, Trace& tr) {
    const ModelConfig& cfg = m.config();
    check_sample(cfg, s);
    const int t_len = cfg.seq_len();
    const int c_static = cfg.load_channels + cfg.weather_channels;
    const int c_in = cfg.input_channels();
    const int k = cfg.kernel_size;

    tr.x0.resize(c_in, t_len);
    tr.x0.topRows(c_static) = s.features;
    for (int t = 0; t < t_len; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        tr.x0.col(t).tail(cfg.embed_dim) =
            (m.embed_dow.row(s.dow_id[ti]) + m.embed_slot.row(s.slot_id[ti]) +
             m.embed_holiday.row(s.holiday_id[ti]))
                .transpose();
    }

    tr.col1 = im2col(tr.x0, k);
    tr.a1 = ((m.conv1_w * tr.col1).colwise() + m.conv1_b.col(0)).cwiseMax(0.0);
    tr.col2 = im2col(tr.a1, k);
    tr.a2 = ((m.conv2_w * tr.col2).colwise() + m.conv2_b.col(0)).cwiseMax(0.0);

    const int h_dim = cfg.gru_units;
    const Eigen::Index t_gru = tr.a2.cols();
    tr.gru.resize(m.gru.size());
    const Eigen::MatrixXd* input = &tr.a2;
    for (std::size_t l = 0; l < m.gru.size(); ++l) {
        const GruLayer& g = m.gru[l];
        GruTrace& gt = tr.gru[l];
        gt.x = *input;
        gt.z.resize(h_dim, t_gru);
        gt.r.resize(h_dim, t_gru);
        gt.n.resize(h_dim, t_gru);
        gt.h.resize(h_dim, t_gru);
        gt.u.resize(h_dim, t_gru);
        Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h_dim);
        for (Eigen::Index t = 0; t < t_gru; ++t) {
            Eigen::VectorXd x_t = gt.x.col(t);
            Eigen::VectorXd z = (g.wz * x_t + g.uz * h_prev + g.bz.col(0))
                                    .unaryExpr([](double v) { return sigmoid(v); });
            Eigen::VectorXd r = (g.wr * x_t + g.ur * h_prev + g.br.col(0))
                                    .unaryExpr([](double v) { return sigmoid(v); });
            Eigen::VectorXd u = g.un * h_prev;
            Eigen::VectorXd n = (g.wn * x_t + r.cwiseProduct(u) + g.bn.col(0))
                                    .unaryExpr([](double v) { return std::tanh(v); });
            Eigen::VectorXd h =
                (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h_prev);
            gt.z.col(t) = z;
            gt.r.col(t) = r;
            gt.u.col(t) = u;
            gt.n.col(t) = n;
            gt.h.col(t) = h;
            h_prev = h;
        }
        input = &gt.h;
    }

    tr.y = m.head_w * tr.gru.back().h.col(t_gru - 1);
}

} // namespace

Eigen::VectorXd ForecastModel::forward(const Sample& sample) const {
    Trace tr;
    run_forward(*this, sample, tr);
    return tr.y;
}

double ForecastModel::backward(const Sample& sample, ForecastModel& grads) const {
    if (sample.target.size() != config_.output_slots)
        throw DataError("backward: target length mismatch");
    Trace tr;
    run_forward(*this, sample, tr);

    const int slots = config_.output_slots;
    Eigen::VectorXd diff = tr.y - sample.target;
    const double loss = diff.squaredNorm() / static_cast<double>(slots);
    Eigen::VectorXd dy = 2.0 * diff / static_cast<double>(slots);

    const Eigen::Index t_gru = tr.a2.cols();
    const int h_dim = config_.gru_units;

    grads.head_w += dy * tr.gru.back().h.col(t_gru - 1).transpose();

    // only the last hidden state of the top layer feeds the head
    Eigen::MatrixXd dh_ext = Eigen::MatrixXd::Zero(h_dim, t_gru);
    dh_ext.col(t_gru - 1) = head_w.transpose() * dy;

    for (std::size_t l = gru.size(); l-- > 0;) {
        const GruLayer& g = gru[l];
        GruTrace& gt = tr.gru[l];
        GruLayer& dg = grads.gru[l];
        Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(gt.x.rows(), t_gru);
        Eigen::VectorXd carry = Eigen::VectorXd::Zero(h_dim);

        for (Eigen::Index t = t_gru - 1; t >= 0; --t) {
            Eigen::VectorXd dh = dh_ext.col(t) + carry;
            Eigen::VectorXd h_prev =
                t > 0 ? Eigen::VectorXd(gt.h.col(t - 1)) : Eigen::VectorXd::Zero(h_dim);
            Eigen::VectorXd z = gt.z.col(t), r = gt.r.col(t), n = gt.n.col(t), u = gt.u.col(t);
            Eigen::VectorXd x_t = gt.x.col(t);

            Eigen::VectorXd dn = dh.cwiseProduct((1.0 - z.array()).matrix());
            Eigen::VectorXd dz = dh.cwiseProduct(h_prev - n);
            Eigen::VectorXd dh_prev = dh.cwiseProduct(z);

            Eigen::VectorXd dan = dn.cwiseProduct((1.0 - n.array().square()).matrix());
            dg.wn += dan * x_t.transpose();
            dg.bn.col(0) += dan;
            Eigen::VectorXd dr = dan.cwiseProduct(u);
            Eigen::VectorXd du = dan.cwiseProduct(r);
            dg.un += du * h_prev.transpose();
            dh_prev += g.un.transpose() * du;

            Eigen::VectorXd dar = dr.cwiseProduct(r).cwiseProduct((1.0 - r.array()).matrix());
            dg.wr += dar * x_t.transpose();
            dg.ur += dar * h_prev.transpose();
            dg.br.col(0) += dar;
            dh_prev += g.ur.transpose() * dar;

            Eigen::VectorXd daz = dz.cwiseProduct(z).cwiseProduct((1.0 - z.array()).matrix());
            dg.wz += daz * x_t.transpose();
            dg.uz += daz * h_prev.transpose();
            dg.bz.col(0) += daz;
            dh_prev += g.uz.transpose() * daz;

            dx.col(t) = g.wn.transpose() * dan + g.wr.transpose() * dar + g.wz.transpose() * daz;
            carry = dh_prev;
        }

        if (l > 0) {
            dh_ext = dx;
        } else {
            Eigen::MatrixXd dpre2 = dx.cwiseProduct((tr.a2.array() > 0.0).cast<double>().matrix());
            grads.conv2_w += dpre2 * tr.col2.transpose();
            grads.conv2_b.col(0) += dpre2.rowwise().sum();
            Eigen::MatrixXd dcol2 = conv2_w.transpose() * dpre2;
            Eigen::MatrixXd da1 = col2im(dcol2, tr.a1.rows(), config_.kernel_size, tr.a1.cols());

            Eigen::MatrixXd dpre1 = da1.cwiseProduct((tr.a1.array() > 0.0).cast<double>().matrix());
            grads.conv1_w += dpre1 * tr.col1.transpose();
            grads.conv1_b.col(0) += dpre1.rowwise().sum();
            Eigen::MatrixXd dcol1 = conv1_w.transpose() * dpre1;
            Eigen::MatrixXd dx0 = col2im(dcol1, tr.x0.rows(), config_.kernel_size, tr.x0.cols());

            // the calendar block is the tail of x0; scatter into the tables
            for (int t = 0; t < config_.seq_len(); ++t) {
                const auto ti = static_cast<std::size_t>(t);
                Eigen::RowVectorXd de = dx0.col(t).tail(config_.embed_dim).transpose();
                grads.embed_dow.row(sample.dow_id[ti]) += de;
                grads.embed_slot.row(sample.slot_id[ti]) += de;
                grads.embed_holiday.row(sample.holiday_id[ti]) += de;
            }
        }
    }
    return loss;
}

namespace {

json config_to_json(const ModelConfig& c) {
    return json{{"conv1_filters", c.conv1_filters},
                {"conv2_filters", c.conv2_filters},
                {"gru_units", c.gru_units},
                {"gru_layers", c.gru_layers},
                {"kernel_size", c.kernel_size},
                {"embed_dim", c.embed_dim},
                {"input_window_days", c.input_window_days},
                {"output_slots", c.output_slots},
                {"load_channels", c.load_channels},
                {"weather_channels", c.weather_channels}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.conv1_filters = j.at("conv1_filters").get<int>();
    c.conv2_filters = j.at("conv2_filters").get<int>();
    c.gru_units = j.at("gru_units").get<int>();
    c.gru_layers = j.at("gru_layers").get<int>();
    c.kernel_size = j.at("kernel_size").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.input_window_days = j.at("input_window_days").get<int>();
    c.output_slots = j.at("output_slots").get<int>();
    c.load_channels = j.at("load_channels").get<int>();
    c.weather_channels = j.at("weather_channels").get<int>();
    return c;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

void matrix_from_json(const json& j, Eigen::MatrixXd& m) {
    if (static_cast<Eigen::Index>(j.size()) != m.rows())
        throw DataError("model checkpoint: tensor row count mismatch");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != m.cols())
            throw DataError("model checkpoint: tensor column count mismatch");
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
}

json norm_to_json(const NormalizationParams& p) {
    return json{{"min", p.min}, {"max", p.max}};
}

NormalizationParams norm_from_json(const json& j) {
    NormalizationParams p;
    p.min = j.at("min").get<std::vector<double>>();
    p.max = j.at("max").get<std::vector<double>>();
    return p;
}

} // namespace

void save_model(const ForecastModel& model, const std::string& path) {
    json j;
    j["format_version"] = 1;
    j["config"] = config_to_json(model.config());
    j["input_norm"] = norm_to_json(model.input_norm);
    j["target_norm"] = norm_to_json(model.target_norm);
    json tensors = json::object();
    model.visit_tensors([&](const std::string& name, const Eigen::MatrixXd& m) {
        tensors[name] = matrix_to_json(m);
    });
    j["tensors"] = tensors;

    std::ofstream out(path);
    out << j.dump() << '\n';
    if (!out) throw DataError("cannot write model checkpoint: " + path);
}

ForecastModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model checkpoint: " + path);
    json j = json::parse(in);
    if (j.value("format_version", 0) != 1)
        throw DataError("unsupported model checkpoint version in " + path);

    ForecastModel model(config_from_json(j.at("config")));
    model.input_norm = norm_from_json(j.at("input_norm"));
    model.target_norm = norm_from_json(j.at("target_norm"));
    const auto& tensors = j.at("tensors");
    model.visit_tensors([&](const std::string& name, Eigen::MatrixXd& m) {
        matrix_from_json(tensors.at(name), m);
    });
    return model;
}

} // namespace loadassoc
