#pragma once

#include <string>
#include <vector>

namespace loadassoc {

/// Minimal CSV support: comma-separated, one header row, no quoting or
/// embedded separators. Empty cells parse as NaN.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const; // -1 if absent
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Doubles are written with round-trip precision so dumps are reproducible.
std::string format_double(double v);

} // namespace loadassoc
