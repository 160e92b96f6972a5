#pragma once

// Seeded random inputs for property tests.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "loadassoc/events.hpp"

namespace testgen {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = 0.0,
                                         double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// Random startup times over `days` days with roughly `rate` events per day,
// strictly increasing with a minimum separation.
inline std::vector<std::int64_t> random_startups(std::int64_t days, double rate,
                                                 std::mt19937_64& rng,
                                                 std::int64_t min_sep = 600) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> tod(0, 86399);
    std::poisson_distribution<int> pois(rate);
    std::vector<std::int64_t> t;
    for (std::int64_t d = 0; d < days; ++d) {
        const int n = pois(rng);
        for (int i = 0; i < n; ++i) t.push_back(d * 86400 + tod(rng));
    }
    std::sort(t.begin(), t.end());
    std::vector<std::int64_t> kept;
    for (std::int64_t x : t)
        if (kept.empty() || x - kept.back() >= min_sep) kept.push_back(x);
    return kept;
}

inline loadassoc::EventStream stream_from_startups(const std::string& id,
                                                   std::vector<std::int64_t> startups,
                                                   const loadassoc::TimeGrid& grid) {
    loadassoc::EventStream ev;
    ev.appliance_id = id;
    ev.grid = grid;
    ev.startups = std::move(startups);
    ev.on_mask.assign(static_cast<std::size_t>(grid.count), false);
    return ev;
}

// Planted block association matrix: within-block entries from [w_lo, w_hi],
// cross-block from [c_lo, c_hi], symmetric, zero diagonal.
inline std::pair<Eigen::MatrixXd, std::vector<int>> block_matrix(
    const std::vector<int>& block_sizes, std::uint64_t seed, double w_lo = 0.6,
    double w_hi = 0.9, double c_lo = 0.0, double c_hi = 0.1) {
    int n = 0;
    for (int b : block_sizes) n += b;
    std::vector<int> labels;
    for (std::size_t b = 0; b < block_sizes.size(); ++b)
        for (int i = 0; i < block_sizes[b]; ++i) labels.push_back(static_cast<int>(b));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> within(w_lo, w_hi), cross(c_lo, c_hi);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = labels[static_cast<std::size_t>(i)] ==
                                     labels[static_cast<std::size_t>(j)]
                                 ? within(rng)
                                 : cross(rng);
            q(i, j) = q(j, i) = v;
        }
    return {q, labels};
}

} // namespace testgen
