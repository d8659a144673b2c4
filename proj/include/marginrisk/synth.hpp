#pragma once

#include "marginrisk/markov.hpp"
#include "marginrisk/price_series.hpp"
#include "marginrisk/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace marginrisk {

/// Deterministic splitmix64 stream. Used instead of <random> distributions so
/// generated fixtures are identical across standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

private:
    std::uint64_t state_;
};

/// A mean-reverting chain on `n_levels` price levels: each day the level
/// moves by at most two steps, with a drift pulling toward the middle level.
/// Returns the level ladder (ascending prices) and the one-step matrix.
std::pair<std::vector<double>, Matrix> mean_reverting_chain(int n_levels, double base_price,
                                                            double level_step,
                                                            double volatility = 1.0);

/// Samples a price path from the chain. Each day's close sits inside its
/// level's price band on 0.01 ticks, so re-estimating a state space from the
/// output sees many distinct prices. Dates advance over weekdays.
PriceSeries generate_series(const std::vector<double>& levels, const Matrix& one_step,
                            int days, std::uint64_t seed, const std::string& symbol,
                            Date start_date);

}  // namespace marginrisk
