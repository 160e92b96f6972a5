#include "loadassoc/normalize.hpp"

#include <algorithm>

#include "loadassoc/errors.hpp"

namespace loadassoc {

NormalizationParams fit_normalizer(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DataError("fit_normalizer: empty input");
    const std::size_t nf = rows.front().size();
    NormalizationParams p;
    p.min.assign(nf, 0.0);
    p.max.assign(nf, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
        double lo = rows[0][f], hi = rows[0][f];
        for (const auto& r : rows) {
            lo = std::min(lo, r[f]);
            hi = std::max(hi, r[f]);
        }
        p.min[f] = lo;
        p.max[f] = hi;
    }
    return p;
}

NormalizationParams fit_normalizer(const std::vector<double>& values) {
    if (values.empty()) throw DataError("fit_normalizer: empty input");
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    NormalizationParams p;
    p.min = {*lo};
    p.max = {*hi};
    return p;
}

double apply_scalar(const NormalizationParams& p, std::size_t f, double v) {
    if (p.constant(f)) return 0.0;
    return (v - p.min[f]) / (p.max[f] - p.min[f]);
}

double invert_scalar(const NormalizationParams& p, std::size_t f, double v) {
    if (p.constant(f)) return p.min[f];
    return p.min[f] + v * (p.max[f] - p.min[f]);
}

std::vector<std::vector<double>> apply_normalizer(const NormalizationParams& p,
                                                  const std::vector<std::vector<double>>& rows) {
    auto out = rows;
    for (auto& r : out)
        for (std::size_t f = 0; f < p.features(); ++f) r[f] = apply_scalar(p, f, r[f]);
    return out;
}

std::vector<std::vector<double>> invert_normalizer(const NormalizationParams& p,
                                                   const std::vector<std::vector<double>>& rows) {
    auto out = rows;
    for (auto& r : out)
        for (std::size_t f = 0; f < p.features(); ++f) r[f] = invert_scalar(p, f, r[f]);
    return out;
}

} // namespace loadassoc
