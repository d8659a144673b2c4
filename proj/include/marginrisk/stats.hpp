#pragma once

#include <span>
#include <utility>
#include <vector>

namespace marginrisk {

/// Lower empirical quantile: the ceil(level * N)-th order statistic (1-based)
/// of the sample, with the rank computed as ceil(level * N - 1e-9) and
/// clamped to [1, N]. Throws on an empty sample.
double lower_quantile(std::vector<double> values, double level);

struct SummaryStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (level, value)
};

SummaryStats summarize(const std::vector<double>& values, std::span<const double> levels);

/// Per-loan statistic rows used by the ratio, proportion, and cost tables.
inline constexpr double kLoanLevels[] = {0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95};
/// Cross-stock aggregation columns.
inline constexpr double kStockLevels[] = {0.70, 0.80, 0.90, 0.95};
/// Cross-stock columns for the margin-call count table.
inline constexpr double kCallLevels[] = {0.30, 0.50, 0.80, 0.90, 0.95, 0.99};

}  // namespace marginrisk
