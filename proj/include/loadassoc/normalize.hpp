#pragma once

#include <vector>

namespace loadassoc {

/// Per-feature min-max normalization: min -> 0, max -> 1. Constant features
/// map to 0 and invert back to their original value.
struct NormalizationParams {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t features() const { return min.size(); }
    bool constant(std::size_t f) const { return max[f] == min[f]; }
};

// `rows` is observation-major: rows[i][f] is feature f of observation i.
NormalizationParams fit_normalizer(const std::vector<std::vector<double>>& rows);

std::vector<std::vector<double>> apply_normalizer(const NormalizationParams& p,
                                                  const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> invert_normalizer(const NormalizationParams& p,
                                                   const std::vector<std::vector<double>>& rows);

// Single-feature conveniences used by the forecaster.
NormalizationParams fit_normalizer(const std::vector<double>& values);
double apply_scalar(const NormalizationParams& p, std::size_t f, double v);
double invert_scalar(const NormalizationParams& p, std::size_t f, double v);

} // namespace loadassoc
