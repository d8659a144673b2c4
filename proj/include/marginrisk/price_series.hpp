#pragma once

#include "marginrisk/types.hpp"

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

namespace marginrisk {

/// Calendar date, ISO 8601 (YYYY-MM-DD) on the wire.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    static Date parse(const std::string& text);
    std::string to_string() const;
    /// Next calendar day that is not a Saturday or Sunday.
    Date next_weekday() const;
};

struct PriceObservation {
    Date date;
    double close = 0.0;
};

/// Daily close series for one stock, strictly increasing in date.
/// Non-trading days are simply absent; day indices i = 0, 1, ... count
/// observations, not calendar days.
struct PriceSeries {
    std::string symbol;
    std::vector<PriceObservation> observations;

    std::size_t size() const { return observations.size(); }
    std::vector<double> closes() const;
};

/// Reads a CSV with header "date,close". Rows may arrive out of order (they
/// are sorted, and a warning is appended to `warnings` if non-null); duplicate
/// dates and non-positive or non-numeric closes are errors naming the 1-based
/// file row.
PriceSeries load_price_series(const std::string& path, const std::string& symbol,
                              std::vector<std::string>* warnings = nullptr);

void save_price_series(const std::string& path, const PriceSeries& series);

struct SufficiencyVerdict {
    bool sufficient = false;
    std::size_t required = 0;
    std::size_t actual = 0;
};

/// A series supports a backtest iff it holds at least
/// history + horizon + n_loans observations.
SufficiencyVerdict check_window_sufficiency(const PriceSeries& series, std::size_t history,
                                            std::size_t horizon, std::size_t n_loans);

}  // namespace marginrisk
