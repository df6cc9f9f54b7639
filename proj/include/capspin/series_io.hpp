#pragma once

#include <string>
#include <utility>
#include <vector>

namespace capspin {

// Columnar time series with an ordered '#'-prefixed metadata header.
struct ResultSeries {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<double> time_s;
    std::vector<double> p_singlet;
    std::vector<double> concurrence;  // empty when not computed
    bool has_concurrence() const { return !concurrence.empty(); }
};

// Deterministic text output, 17-significant-digit round-trip precision,
// atomic (write temp + rename). Refuses NaN/Inf values.
void write_series(const ResultSeries& series, const std::string& path);

ResultSeries parse_series(const std::string& path);

// %.17g formatting used across all numeric output.
std::string format_double(double v);

}  // namespace capspin
