#include "marginrisk/optimizer.hpp"

#include "marginrisk/loan.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

namespace marginrisk {

namespace {

constexpr double kFeasibilityTol = 1e-9;  // grid values are clean hundredths

// Exact memo key from integer hundredths; never matches "close" values.
std::uint64_t key_of(long long q_hundredths, long long delta_hundredths,
                     long long w_hundredths) {
    return (static_cast<std::uint64_t>(q_hundredths) << 42) |
           (static_cast<std::uint64_t>(delta_hundredths) << 21) |
           static_cast<std::uint64_t>(w_hundredths);
}

long long hundredths(double v) { return std::llround(v * 100.0); }

}  // namespace

std::vector<double> GridConfig::percent_grid(int lo_hundredths, int hi_hundredths) {
    std::vector<double> g;
    g.reserve(hi_hundredths - lo_hundredths + 1);
    for (int k = lo_hundredths; k <= hi_hundredths; ++k) g.push_back(k / 100.0);
    return g;
}

GridConfig GridConfig::defaults(double alpha) {
    GridConfig g;
    g.initial_ratio_grid = percent_grid(0, 80);
    g.stock_fraction_grid = percent_grid(0, 80);
    g.maintenance_grid = percent_grid(100, 200);
    g.alpha = alpha;
    return g;
}

IndifferenceSet enumerate_indifference_set(const TransitionModel& model, int initial_state,
                                           double P0, double r, int horizon,
                                           const GridConfig& grid) {
    IndifferenceSet set;
    set.initial_state = initial_state;
    set.P0 = P0;
    set.r = r;
    set.horizon = horizon;
    set.alpha = grid.alpha;

    CpnrEvaluator eval(model, initial_state, P0, r, horizon);
    std::unordered_map<std::uint64_t, double> memo;
    memo.reserve(grid.initial_ratio_grid.size() * grid.maintenance_grid.size());

    for (double m : grid.initial_ratio_grid) {
        for (double delta : grid.stock_fraction_grid) {
            if (m < delta - kFeasibilityTol) continue;  // cash leg Q0 would be negative
            const long long q_h = hundredths(m) - hundredths(delta);
            const double Q0 = static_cast<double>(q_h) / 100.0 * P0;
            for (double w : grid.maintenance_grid) {
                if (1.0 + m < w - kFeasibilityTol) continue;  // on call at inception
                const auto key = key_of(q_h, hundredths(delta), hundredths(w));
                auto it = memo.find(key);
                double value;
                if (it != memo.end()) {
                    value = it->second;
                } else {
                    value = eval.evaluate(Q0, delta, w).cpnr;
                    memo.emplace(key, value);
                }
                if (value <= grid.alpha) set.elements.push_back({m, delta, w, value});
            }
        }
    }
    return set;
}

MarginTriple select_optimal(const IndifferenceSet& set) {
    const auto& els = set.elements;
    if (els.empty()) throw std::invalid_argument("indifference set is empty");

    // Sum over members of the squared distance from x decomposes as
    // q * |x - centroid|^2 + const, so the argmin is the member nearest the
    // centroid.
    double cm = 0.0, cd = 0.0, cw = 0.0;
    for (const auto& e : els) {
        cm += e.m;
        cd += e.delta;
        cw += e.w;
    }
    const double q = static_cast<double>(els.size());
    cm /= q;
    cd /= q;
    cw /= q;

    auto dist2 = [&](const MarginTriple& e) {
        const double dm = e.m - cm, dd = e.delta - cd, dw = e.w - cw;
        return dm * dm + dd * dd + dw * dw;
    };

    // Two passes keep the winner independent of element order: find the
    // minimum, then the lexicographically smallest member within tolerance.
    double best = dist2(els.front());
    for (const auto& e : els) best = std::min(best, dist2(e));

    const MarginTriple* pick = nullptr;
    for (const auto& e : els) {
        if (dist2(e) > best + 1e-12) continue;
        if (pick == nullptr) {
            pick = &e;
            continue;
        }
        const auto key = [](const MarginTriple& t) {
            return std::array<double, 3>{t.m, t.delta, t.w};
        };
        if (key(e) < key(*pick)) pick = &e;
    }
    return *pick;
}

std::optional<double> min_maintenance_ratio(const TransitionModel& model, int initial_state,
                                            double P0, double Q0, double delta, double r,
                                            int horizon, const GridConfig& grid) {
    const double m0 = initial_margin_ratio(Q0, delta, P0);
    CpnrEvaluator eval(model, initial_state, P0, r, horizon);
    for (double w : grid.maintenance_grid) {
        if (m0 + 1.0 < w - kFeasibilityTol) continue;
        if (eval.evaluate(Q0, delta, w).cpnr <= grid.alpha) return w;
    }
    return std::nullopt;
}

}  // namespace marginrisk
