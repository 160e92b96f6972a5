#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loadassoc/events.hpp"

namespace loadassoc {

/// Windows for behavior association: a candidate pair of startups must lie
/// within target_window_s to count as associated, and within candidate_window_s
/// to count as a candidate at all.
struct AssociationConfig {
    std::int64_t target_window_s = 1800;     // T_e, 30 min
    std::int64_t candidate_window_s = 86400; // T_s, 24 h
    std::int64_t utc_offset_seconds = 0;     // for shared-use-day counting

    void validate() const;
};

struct PairCounters {
    std::int64_t ne = 0;      // matched startup pairs with |dt| <= T_e
    std::int64_t ns = 0;      // matched startup pairs with |dt| <= T_s
    std::int64_t nd_pair = 0; // calendar days on which both appliances started
};

/// Pairwise behavior association probabilities:
///   q[i][j] = (ne/ns) * (nd_pair/nd),  0/0 -> 0,  diagonal forced to 0.
/// Startups are matched one-to-one by increasing |dt|, ties broken toward the
/// earlier startup of the second stream, then of the first. Counters are
/// computed once per unordered pair and mirrored, so q is exactly symmetric.
struct AssociationMatrix {
    Eigen::MatrixXd q;
    std::vector<std::string> ids;
    std::vector<PairCounters> counters; // row-major N x N, symmetric
    std::int64_t nd = 0;

    std::size_t size() const { return ids.size(); }
    const PairCounters& pair(std::size_t i, std::size_t j) const {
        return counters[i * ids.size() + j];
    }
};

PairCounters count_pair(const EventStream& events_i, const EventStream& events_j,
                        const AssociationConfig& cfg);

AssociationMatrix association_matrix(const std::vector<EventStream>& streams,
                                     const AssociationConfig& cfg, std::int64_t day_count);

// q.csv is a square CSV with a header row/column of channel codes; counters
// go to a JSON sidecar next to it.
void save_association(const AssociationMatrix& m, const std::string& q_csv_path);
AssociationMatrix load_association(const std::string& q_csv_path);

} // namespace loadassoc
