#include "marginrisk/synth.hpp"

#include <cmath>
#include <stdexcept>

namespace marginrisk {

std::pair<std::vector<double>, Matrix> mean_reverting_chain(int n_levels, double base_price,
                                                            double level_step,
                                                            double volatility) {
    if (n_levels < 2) throw InputError("need at least two levels");
    if (base_price <= 0.0 || level_step <= 0.0) throw InputError("prices must be positive");

    std::vector<double> levels(n_levels);
    for (int k = 0; k < n_levels; ++k)
        levels[k] = std::round((base_price + level_step * k) * 100.0) / 100.0;

    // Raw move weights for steps -2..+2, tilted toward the center level.
    Matrix one = Matrix::Zero(n_levels, n_levels);
    const double mid = (n_levels - 1) / 2.0;
    for (int i = 0; i < n_levels; ++i) {
        const double pull = 0.35 * (mid - i) / std::max(1.0, mid);  // >0 below center
        double weight[5];
        weight[0] = volatility * (0.08 - 0.04 * pull);  // -2
        weight[1] = volatility * (0.22 - 0.10 * pull);  // -1
        weight[2] = 0.40;                               //  0
        weight[3] = volatility * (0.22 + 0.10 * pull);  // +1
        weight[4] = volatility * (0.08 + 0.04 * pull);  // +2
        for (int s = -2; s <= 2; ++s) {
            // Out-of-range moves collapse onto the boundary level.
            const int j = std::min(n_levels - 1, std::max(0, i + s));
            one(i, j) += weight[s + 2];
        }
        one.row(i) /= one.row(i).sum();
    }
    return {std::move(levels), std::move(one)};
}

PriceSeries generate_series(const std::vector<double>& levels, const Matrix& one_step,
                            int days, std::uint64_t seed, const std::string& symbol,
                            Date start_date) {
    const int n = static_cast<int>(levels.size());
    if (n < 1) throw InputError("empty level ladder");
    if (one_step.rows() != n || one_step.cols() != n)
        throw InputError("matrix does not match the level ladder");
    if (!is_row_stochastic(one_step, 1e-9))
        throw InputError("matrix is not row-stochastic");
    if (days < 1) throw InputError("need at least one day");

    SplitMix64 rng(seed);
    int state = n / 2;

    // A level's band runs to the next level (the last reuses the previous
    // band width); closes land on 0.01 ticks inside the band.
    auto band_ticks = [&](int k) {
        const double width = k + 1 < n ? levels[k + 1] - levels[k]
                                       : levels[k] - levels[std::max(0, k - 1)];
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(width * 100.0)));
    };

    PriceSeries series;
    series.symbol = symbol;
    series.observations.reserve(days);
    Date date = start_date;
    for (int d = 0; d < days; ++d) {
        const double tick_offset = static_cast<double>(rng.below(band_ticks(state)));
        const double close = std::round((levels[state] + 0.01 * tick_offset) * 100.0) / 100.0;
        series.observations.push_back({date, close});
        date = date.next_weekday();

        // Next state by CDF inversion on one uniform draw.
        const double u = rng.uniform();
        double acc = 0.0;
        int next = n - 1;
        for (int j = 0; j < n; ++j) {
            acc += one_step(state, j);
            if (u < acc) {
                next = j;
                break;
            }
        }
        state = next;
    }
    return series;
}

}  // namespace marginrisk
