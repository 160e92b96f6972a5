#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loadassoc/association.hpp"
#include "loadassoc/dataset.hpp"
#include "loadassoc/events.hpp"
#include "loadassoc/spectral.hpp"

namespace loadassoc {

struct ClusterAssignment {
    int k = 0;
    std::vector<std::string> ids;  // retained channel codes, label order
    std::vector<int> labels;       // cluster index per retained appliance
    std::map<int, double> silhouette_by_k;
    std::vector<double> eigenvalues; // ascending Laplacian spectrum
    std::uint64_t seed = 0;
    bool degenerate_all_zero = false;
    int attach_excluded_to = 0; // cluster that absorbs the low-power appliances

    void validate() const;
};

/// Mean silhouette over all points with Euclidean distance; points in
/// singleton clusters score 0.
double mean_silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k);

/// Sweeps k over [2, N-1], clusters each k on its own spectral embedding and
/// keeps the k with the best mean silhouette (ties to the smaller k). The
/// eigenvalue spectrum is attached as an elbow diagnostic; an all-zero matrix
/// degenerates to one singleton cluster per appliance.
ClusterAssignment select_k(const AssociationMatrix& q, std::uint64_t seed);

// Fixed-k variant used when the cluster count is configured explicitly.
ClusterAssignment assign_clusters(const AssociationMatrix& q, int k, std::uint64_t seed);

/// Per-cluster load series: elementwise sum of member appliances, with every
/// excluded low-power appliance attached to `attach_cluster` first.
std::vector<ApplianceSeries> aggregate_cluster_loads(const HouseholdDataset& dataset,
                                                     const ClusterAssignment& assignment,
                                                     const ExclusionReport& excluded,
                                                     int attach_cluster);

/// Adjusted Rand index between two labelings (permutation invariant, 1 =
/// identical partitions).
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

void save_clusters(const ClusterAssignment& c, const std::string& json_path);
ClusterAssignment load_clusters(const std::string& json_path);

} // namespace loadassoc
