#pragma once

#include "marginrisk/cpnr.hpp"
#include "marginrisk/markov.hpp"

#include <optional>
#include <vector>

namespace marginrisk {

/// Search grids for margin systems, in 0.01 steps. Defaults cover initial
/// ratios and stock fractions 0.00..0.80 and maintenance ratios 1.00..2.00.
struct GridConfig {
    std::vector<double> initial_ratio_grid;   // m candidates
    std::vector<double> stock_fraction_grid;  // delta candidates
    std::vector<double> maintenance_grid;     // w candidates
    double alpha = 0.05;

    /// {lo/100, (lo+1)/100, ..., hi/100} with every value derived from an
    /// integer count of hundredths.
    static std::vector<double> percent_grid(int lo_hundredths, int hi_hundredths);
    static GridConfig defaults(double alpha = 0.05);
};

struct MarginTriple {
    double m = 0.0;
    double delta = 0.0;
    double w = 0.0;
    double cpnr = 0.0;
};

/// All grid triples a broker is indifferent between at risk level alpha:
/// feasible (1 + m >= w, m >= delta) and CPNR <= alpha. Elements are in
/// lexicographic (m, delta, w) order.
struct IndifferenceSet {
    std::vector<MarginTriple> elements;
    // Evaluation context.
    int initial_state = 0;
    double P0 = 0.0;
    double r = 0.0;
    int horizon = 0;
    double alpha = 0.0;
};

/// Sweeps the grids against a fitted model with Q0 = (m - delta) * P0.
/// CPNR values are memoized on exact (Q0/P0, delta, w) keys; m enters the
/// evaluation only through Q0.
IndifferenceSet enumerate_indifference_set(const TransitionModel& model, int initial_state,
                                           double P0, double r, int horizon,
                                           const GridConfig& grid);

/// The set member minimizing the summed squared distance to all members,
/// i.e. the one nearest the set centroid. Ties (squared distance within
/// 1e-12) break to the lexicographically smallest (m, delta, w). Throws on an
/// empty set.
MarginTriple select_optimal(const IndifferenceSet& set);

/// Smallest maintenance grid value that is adequate (m0 + 1 >= w) and keeps
/// CPNR <= alpha for a fixed (Q0, delta) loan. Scans the whole grid ascending
/// rather than assuming CPNR is monotone in w. Empty when no value qualifies.
std::optional<double> min_maintenance_ratio(const TransitionModel& model, int initial_state,
                                            double P0, double Q0, double delta, double r,
                                            int horizon, const GridConfig& grid);

}  // namespace marginrisk
