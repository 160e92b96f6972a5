#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace loadassoc {

/// Symmetric normalized Laplacian L = I - D^{-1/2} Q D^{-1/2} with D the
/// row-sum degree matrix. Degree-0 (isolated) nodes get an identity row, so
/// they fall out as singleton clusters.
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& q);

struct KMeansResult {
    std::vector<int> labels;
    double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding, deterministic under the seed.
/// `restarts` independent initializations, best inertia wins; empty clusters
/// are repaired by stealing the point farthest from its center.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int restarts = 50, int max_iter = 300, double rel_tol = 1e-6);

/// Row-normalized matrix of the eigenvectors for the k smallest eigenvalues
/// of laplacian(q); all-zero rows are left at zero.
Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& q, int k);

std::vector<int> spectral_cluster(const Eigen::MatrixXd& q, int k, std::uint64_t seed);

// Ascending spectrum of laplacian(q); used for the elbow diagnostic.
Eigen::VectorXd laplacian_eigenvalues(const Eigen::MatrixXd& q);

} // namespace loadassoc
