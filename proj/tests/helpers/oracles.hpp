#pragma once

// Independent reference implementations used to check the library. These are
// deliberately written in the most literal way possible (full enumeration,
// plain loops) and must stay decoupled from the code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

struct PairCounts {
    std::int64_t ne = 0;
    std::int64_t ns = 0;
    std::int64_t nd_pair = 0;
};

// One-to-one startup matching by repeated global-minimum extraction over the
// full candidate matrix: every round scans all unmatched (p, q) pairs with
// |dt| <= ts and takes the smallest (|dt|, t_j, t_i). No sorted greedy walk.
inline PairCounts count_pair(const std::vector<std::int64_t>& si,
                             const std::vector<std::int64_t>& sj, std::int64_t te,
                             std::int64_t ts) {
    PairCounts out;
    std::vector<char> used_i(si.size(), 0), used_j(sj.size(), 0);

    while (true) {
        bool found = false;
        std::size_t best_p = 0, best_q = 0;
        std::int64_t best_dt = 0, best_tj = 0, best_ti = 0;
        for (std::size_t p = 0; p < si.size(); ++p) {
            if (used_i[p]) continue;
            for (std::size_t q = 0; q < sj.size(); ++q) {
                if (used_j[q]) continue;
                const std::int64_t dt = std::llabs(si[p] - sj[q]);
                if (dt > ts) continue;
                const bool better =
                    !found || dt < best_dt || (dt == best_dt && sj[q] < best_tj) ||
                    (dt == best_dt && sj[q] == best_tj && si[p] < best_ti);
                if (better) {
                    found = true;
                    best_p = p;
                    best_q = q;
                    best_dt = dt;
                    best_tj = sj[q];
                    best_ti = si[p];
                }
            }
        }
        if (!found) break;
        used_i[best_p] = used_j[best_q] = 1;
        ++out.ns;
        if (best_dt <= te) ++out.ne;
    }

    std::set<std::int64_t> days_i, days_j;
    for (std::int64_t t : si) days_i.insert(t >= 0 ? t / 86400 : (t - 86399) / 86400);
    for (std::int64_t t : sj) days_j.insert(t >= 0 ? t / 86400 : (t - 86399) / 86400);
    for (std::int64_t d : days_i)
        if (days_j.count(d)) ++out.nd_pair;
    return out;
}

inline double q_entry(const PairCounts& c, std::int64_t nd) {
    if (c.ns == 0 || nd == 0) return 0.0;
    return (static_cast<double>(c.ne) / static_cast<double>(c.ns)) *
           (static_cast<double>(c.nd_pair) / static_cast<double>(nd));
}

// Distance correlation straight from the definition, element by element.
inline double dcor(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> arow(n, 0.0), brow(n, 0.0);
    double amean = 0.0, bmean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            arow[i] += std::fabs(x[i] - x[j]);
            brow[i] += std::fabs(y[i] - y[j]);
        }
        arow[i] /= static_cast<double>(n);
        brow[i] /= static_cast<double>(n);
        amean += arow[i];
        bmean += brow[i];
    }
    amean /= static_cast<double>(n);
    bmean /= static_cast<double>(n);

    double dcov2 = 0.0, dvarx2 = 0.0, dvary2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double a = std::fabs(x[i] - x[j]) - arow[i] - arow[j] + amean;
            const double b = std::fabs(y[i] - y[j]) - brow[i] - brow[j] + bmean;
            dcov2 += a * b;
            dvarx2 += a * a;
            dvary2 += b * b;
        }
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    dcov2 /= nn;
    dvarx2 /= nn;
    dvary2 /= nn;
    if (dvarx2 <= 0.0 || dvary2 <= 0.0) return 0.0;
    double r2 = dcov2 / std::sqrt(dvarx2 * dvary2);
    if (r2 < 0.0) r2 = 0.0;
    if (r2 > 1.0) r2 = 1.0;
    return std::sqrt(r2);
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

inline double mae(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

} // namespace oracle
