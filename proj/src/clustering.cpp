#include "loadassoc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "loadassoc/errors.hpp"

using nlohmann::json;

namespace loadassoc {

void ClusterAssignment::validate() const {
    if (ids.size() != labels.size())
        throw DataError("cluster assignment: ids/labels length mismatch");
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) {
        if (l < 0 || l >= k) throw DataError("cluster assignment: label out of range");
        ++sizes[static_cast<std::size_t>(l)];
    }
    for (std::int64_t s : sizes)
        if (s == 0) throw DataError("cluster assignment: empty cluster");
}

double mean_silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k) {
    const Eigen::Index n = points.rows();
    if (static_cast<std::size_t>(n) != labels.size())
        throw DataError("silhouette: points/labels size mismatch");

    std::vector<Eigen::Index> cluster_size(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++cluster_size[static_cast<std::size_t>(l)];

    double total = 0.0;
    std::vector<double> dist_sum(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int li = labels[static_cast<std::size_t>(i)];
        if (cluster_size[static_cast<std::size_t>(li)] <= 1) continue; // s = 0
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] +=
                (points.row(i) - points.row(j)).norm();
        }
        double a = dist_sum[static_cast<std::size_t>(li)] /
                   static_cast<double>(cluster_size[static_cast<std::size_t>(li)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == li || cluster_size[static_cast<std::size_t>(c)] == 0) continue;
            b = std::min(b, dist_sum[static_cast<std::size_t>(c)] /
                                static_cast<double>(cluster_size[static_cast<std::size_t>(c)]));
        }
        double denom = std::max(a, b);
        if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

namespace {

ClusterAssignment degenerate_assignment(const AssociationMatrix& q, std::uint64_t seed) {
    ClusterAssignment out;
    out.ids = q.ids;
    out.k = static_cast<int>(q.size());
    out.labels.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out.labels[i] = static_cast<int>(i);
    out.seed = seed;
    out.degenerate_all_zero = true;
    Eigen::VectorXd ev = laplacian_eigenvalues(q.q);
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    return out;
}

} // namespace

ClusterAssignment assign_clusters(const AssociationMatrix& q, int k, std::uint64_t seed) {
    const auto n = static_cast<int>(q.size());
    if (k < 2 || k > n) throw ConfigError("cluster count k must be in [2, N]");
    if (q.q.maxCoeff() <= 0.0) return degenerate_assignment(q, seed);

    ClusterAssignment out;
    out.ids = q.ids;
    out.k = k;
    out.seed = seed;
    out.labels = spectral_cluster(q.q, k, seed);
    Eigen::MatrixXd embedding = spectral_embedding(q.q, k);
    out.silhouette_by_k[k] = mean_silhouette(embedding, out.labels, k);
    Eigen::VectorXd ev = laplacian_eigenvalues(q.q);
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    out.validate();
    return out;
}

ClusterAssignment select_k(const AssociationMatrix& q, std::uint64_t seed) {
    const auto n = static_cast<int>(q.size());
    if (n < 3) throw DataError("select_k: need at least 3 retained appliances");
    if (q.q.maxCoeff() <= 0.0) return degenerate_assignment(q, seed);

    ClusterAssignment best;
    best.ids = q.ids;
    best.seed = seed;
    double best_score = -std::numeric_limits<double>::infinity();
    std::map<int, double> scores;

    for (int k = 2; k <= n - 1; ++k) {
        Eigen::MatrixXd embedding = spectral_embedding(q.q, k);
        std::vector<int> labels = kmeans(embedding, k, seed).labels;
        double score = mean_silhouette(embedding, labels, k);
        scores[k] = score;
        if (score > best_score) { // ties keep the smaller k
            best_score = score;
            best.k = k;
            best.labels = labels;
        }
    }

    best.silhouette_by_k = scores;
    Eigen::VectorXd ev = laplacian_eigenvalues(q.q);
    best.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    best.validate();
    return best;
}

std::vector<ApplianceSeries> aggregate_cluster_loads(const HouseholdDataset& dataset,
                                                     const ClusterAssignment& assignment,
                                                     const ExclusionReport& excluded,
                                                     int attach_cluster) {
    assignment.validate();
    if (!excluded.excluded.empty() && (attach_cluster < 0 || attach_cluster >= assignment.k))
        throw ConfigError("attach cluster index out of range");

    const auto slots = static_cast<std::size_t>(dataset.grid().count);
    std::vector<ApplianceSeries> clusters(static_cast<std::size_t>(assignment.k));
    for (int c = 0; c < assignment.k; ++c) {
        clusters[static_cast<std::size_t>(c)].id = "cluster_" + std::to_string(c);
        clusters[static_cast<std::size_t>(c)].name = "appliance cluster " + std::to_string(c);
        clusters[static_cast<std::size_t>(c)].grid = dataset.grid();
        clusters[static_cast<std::size_t>(c)].power.assign(slots, 0.0);
    }

    auto add_to = [&](int c, const ApplianceSeries& a) {
        auto& dst = clusters[static_cast<std::size_t>(c)].power;
        for (std::size_t s = 0; s < slots; ++s) dst[s] += a.power[s];
        if (!clusters[static_cast<std::size_t>(c)].name.empty())
            clusters[static_cast<std::size_t>(c)].name += " +" + a.id;
    };

    for (std::size_t i = 0; i < assignment.ids.size(); ++i) {
        const ApplianceSeries* a = dataset.find(assignment.ids[i]);
        if (!a) throw DataError("cluster member '" + assignment.ids[i] + "' not in dataset");
        add_to(assignment.labels[i], *a);
    }
    for (const auto& id : excluded.excluded) {
        const ApplianceSeries* a = dataset.find(id);
        if (!a) throw DataError("excluded appliance '" + id + "' not in dataset");
        add_to(attach_cluster, *a);
    }
    return clusters;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw DataError("adjusted_rand_index: size mismatch");
    const auto n = static_cast<std::int64_t>(a.size());
    if (n == 0) return 1.0;

    auto relabel = [](const std::vector<int>& v) {
        std::map<int, int> m;
        std::vector<int> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto [it, fresh] = m.try_emplace(v[i], static_cast<int>(m.size()));
            out[i] = it->second;
        }
        return std::pair{out, static_cast<int>(m.size())};
    };
    auto [la, ka] = relabel(a);
    auto [lb, kb] = relabel(b);

    std::vector<std::vector<std::int64_t>> table(static_cast<std::size_t>(ka),
                                                 std::vector<std::int64_t>(static_cast<std::size_t>(kb), 0));
    for (std::size_t i = 0; i < la.size(); ++i)
        ++table[static_cast<std::size_t>(la[i])][static_cast<std::size_t>(lb[i])];

    auto choose2 = [](std::int64_t m) { return static_cast<double>(m) * (m - 1) / 2.0; };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (int i = 0; i < ka; ++i) {
        std::int64_t row = 0;
        for (int j = 0; j < kb; ++j) {
            sum_ij += choose2(table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            row += table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        sum_a += choose2(row);
    }
    for (int j = 0; j < kb; ++j) {
        std::int64_t col = 0;
        for (int i = 0; i < ka; ++i) col += table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        sum_b += choose2(col);
    }
    double expected = sum_a * sum_b / choose2(n);
    double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0; // both partitions trivial
    return (sum_ij - expected) / (max_index - expected);
}

void save_clusters(const ClusterAssignment& c, const std::string& json_path) {
    json j;
    j["k"] = c.k;
    j["seed"] = c.seed;
    json labels = json::object();
    for (std::size_t i = 0; i < c.ids.size(); ++i) labels[c.ids[i]] = c.labels[i];
    j["labels"] = labels;
    j["ids"] = c.ids;
    json sil = json::object();
    for (const auto& [k, s] : c.silhouette_by_k) sil[std::to_string(k)] = s;
    j["silhouette_by_k"] = sil;
    j["eigenvalues"] = c.eigenvalues;
    json gaps = json::array();
    for (std::size_t i = 1; i < c.eigenvalues.size(); ++i)
        gaps.push_back(c.eigenvalues[i] - c.eigenvalues[i - 1]);
    j["eigenvalue_gaps"] = gaps;
    j["degenerate_all_zero"] = c.degenerate_all_zero;
    j["attach_excluded_to"] = c.attach_excluded_to;

    std::ofstream out(json_path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write " + json_path);
}

ClusterAssignment load_clusters(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw DataError("cannot open " + json_path);
    json j = json::parse(in);

    ClusterAssignment c;
    c.k = j.at("k").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.ids = j.at("ids").get<std::vector<std::string>>();
    const auto& labels = j.at("labels");
    for (const auto& id : c.ids) c.labels.push_back(labels.at(id).get<int>());
    for (const auto& [k, s] : j.at("silhouette_by_k").items())
        c.silhouette_by_k[std::stoi(k)] = s.get<double>();
    c.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    c.degenerate_all_zero = j.value("degenerate_all_zero", false);
    c.attach_excluded_to = j.value("attach_excluded_to", 0);
    c.validate();
    return c;
}

} // namespace loadassoc
