#include "marginrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace marginrisk {

double lower_quantile(std::vector<double> values, double level) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<long long>(values.size());
    // The 1e-9 backoff keeps clean products like 0.95 * 100 from being pushed
    // to the next rank by floating-point round-up.
    long long rank = static_cast<long long>(std::ceil(level * static_cast<double>(n) - 1e-9));
    rank = std::clamp(rank, 1LL, n);
    return values[static_cast<std::size_t>(rank - 1)];
}

SummaryStats summarize(const std::vector<double>& values, std::span<const double> levels) {
    if (values.empty()) throw std::invalid_argument("summary of an empty sample");
    SummaryStats s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
    s.quantiles.reserve(levels.size());
    for (double level : levels) s.quantiles.emplace_back(level, lower_quantile(values, level));
    return s;
}

}  // namespace marginrisk
