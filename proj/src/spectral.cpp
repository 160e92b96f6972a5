#include "loadassoc/spectral.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "loadassoc/errors.hpp"

namespace loadassoc {

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& q) {
    const Eigen::Index n = q.rows();
    if (q.cols() != n) throw DataError("laplacian: matrix not square");

    Eigen::VectorXd degree = q.rowwise().sum();
    Eigen::VectorXd inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i)
        inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;

    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) l(i, j) = -inv_sqrt(i) * q(i, j) * inv_sqrt(j);
    // isolated nodes already have an identity row: off-diagonals vanish with
    // inv_sqrt = 0 and the diagonal stays 1
    return l;
}

Eigen::VectorXd laplacian_eigenvalues(const Eigen::MatrixXd& q) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(q));
    if (solver.info() != Eigen::Success)
        throw StageError("laplacian eigendecomposition failed");
    return solver.eigenvalues();
}

Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& q, int k) {
    const Eigen::Index n = q.rows();
    if (k < 1 || k > n) throw ConfigError("spectral_embedding: k out of range");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(q));
    if (solver.info() != Eigen::Success)
        throw StageError("laplacian eigendecomposition failed");

    // Eigen returns eigenvalues in ascending order; equal eigenvalues keep
    // the solver's (deterministic) ordering.
    Eigen::MatrixXd embedding = solver.eigenvectors().leftCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        double norm = embedding.row(i).norm();
        if (norm > 0.0) embedding.row(i) /= norm;
    }
    return embedding;
}

namespace {

double squared_distance(const Eigen::MatrixXd& pts, Eigen::Index a,
                        const Eigen::MatrixXd& centers, Eigen::Index c) {
    return (pts.row(a) - centers.row(c)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& pts, int k, std::mt19937_64& rng) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd centers(k, pts.cols());
    std::uniform_int_distribution<Eigen::Index> uni(0, n - 1);
    centers.row(0) = pts.row(uni(rng));

    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = squared_distance(pts, i, centers, 0);

    for (int c = 1; c < k; ++c) {
        double total = d2.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> ur(0.0, total);
            double target = ur(rng);
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = uni(rng); // all points coincide with existing centers
        }
        centers.row(c) = pts.row(chosen);
        for (Eigen::Index i = 0; i < n; ++i)
            d2(i) = std::min(d2(i), (pts.row(i) - centers.row(c)).squaredNorm());
    }
    return centers;
}

KMeansResult lloyd(const Eigen::MatrixXd& pts, Eigen::MatrixXd centers, int max_iter,
                   double rel_tol) {
    const Eigen::Index n = pts.rows();
    const int k = static_cast<int>(centers.rows());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    double prev_inertia = std::numeric_limits<double>::infinity();
    double inertia = prev_inertia;

    for (int iter = 0; iter < max_iter; ++iter) {
        inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                double d = squared_distance(pts, i, centers, c);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            labels[static_cast<std::size_t>(i)] = best_c;
            inertia += best;
        }

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, pts.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += pts.row(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // steal the point farthest from its assigned center
                Eigen::Index worst = 0;
                double worst_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double d = squared_distance(pts, i, centers,
                                                labels[static_cast<std::size_t>(i)]);
                    if (d > worst_d) {
                        worst_d = d;
                        worst = i;
                    }
                }
                centers.row(c) = pts.row(worst);
                labels[static_cast<std::size_t>(worst)] = c;
            }
        }

        if (prev_inertia - inertia <= rel_tol * std::max(prev_inertia, 1e-300) &&
            std::isfinite(prev_inertia))
            break;
        prev_inertia = inertia;
    }

    // final assignment so labels match the last centers
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < k; ++c) {
            double d = squared_distance(pts, i, centers, c);
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        labels[static_cast<std::size_t>(i)] = best_c;
        inertia += best;
    }
    return {std::move(labels), inertia};
}

} // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts,
                    int max_iter, double rel_tol) {
    const Eigen::Index n = points.rows();
    if (k < 1 || k > n) throw ConfigError("kmeans: k out of range");

    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        KMeansResult res = lloyd(points, kmeanspp_init(points, k, rng), max_iter, rel_tol);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

std::vector<int> spectral_cluster(const Eigen::MatrixXd& q, int k, std::uint64_t seed) {
    const Eigen::Index n = q.rows();
    if (k < 2 || k > n) throw ConfigError("spectral_cluster: k must be in [2, N]");
    Eigen::MatrixXd embedding = spectral_embedding(q, k);
    return kmeans(embedding, k, seed).labels;
}

} // namespace loadassoc
