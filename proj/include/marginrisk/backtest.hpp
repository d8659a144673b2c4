#pragma once

#include "marginrisk/loan.hpp"
#include "marginrisk/optimizer.hpp"
#include "marginrisk/price_series.hpp"
#include "marginrisk/stats.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace marginrisk {

/// Rolling out-of-sample protocol settings. Defaults: fit on 800 prior
/// closes grouped 25 per state, lend over 30 days, roll 200 consecutive
/// daily loans per stock, and bound CPNR at 0.05. The exchange-required
/// system tops up to 150% of the loan; its stock fraction (not fixed by any
/// exchange rule) defaults to 0.25 so collateral splits evenly between cash
/// and stock.
struct BacktestConfig {
    int history = 800;
    int group_size = 25;
    int horizon = 30;
    int n_loans = 200;
    double alpha = 0.05;
    double r = 0.0;  // riskless daily rate
    double R = 0.0;  // loan daily rate
    MarginSystem required_system{0.50, 0.25, 1.30, 1.50, Provenance::required};
    int threads = 0;  // 0 = hardware concurrency
};

/// One loan start date: the deduced system chosen that day (when the
/// indifference set is nonempty) and both scenarios under both systems.
struct LoanRecord {
    Date start_date;
    std::size_t start_index = 0;
    double P0 = 0.0;
    int initial_state = 0;

    bool deduced_feasible = false;
    MarginTriple deduced;             // valid only when deduced_feasible
    std::size_t indifference_size = 0;
    double stock_proportion_deduced = 0.0;

    DefaultScenario default_required;
    TopupScenario topup_required;
    DefaultScenario default_deduced;  // valid only when deduced_feasible
    TopupScenario topup_deduced;
};

struct StockReport {
    std::string symbol;
    BacktestConfig config;
    std::vector<LoanRecord> records;

    int n_feasible = 0;
    int n_infeasible = 0;
    double neg_freq_deduced = 0.0;   // over feasible loans (0 if none)
    double neg_freq_required = 0.0;  // over all loans
    bool passed = false;             // neg_freq_deduced <= alpha
    int n_calls_deduced = 0;         // loans with at least one call
    int n_calls_required = 0;

    // Per-loan distributions at kLoanLevels; deduced-system stats are absent
    // when no loan had a feasible deduced system.
    std::optional<SummaryStats> initial_ratio_stats;  // m* per loan
    std::optional<SummaryStats> maintenance_stats;    // w* per loan
    std::optional<SummaryStats> proportion_stats;     // stock share p per loan
    std::optional<SummaryStats> cost_deduced_stats;
    SummaryStats cost_required_stats;
};

/// Walks the last n_loans eligible start dates in order. Each loan refits the
/// state space and transition matrix on the `history` closes strictly before
/// its start date, prices the loan at that day's close, deduces a system from
/// the indifference set, and simulates days t0+1..t0+T. Loans are independent
/// and run on cfg.threads workers; records come back in date order either way.
StockReport run_stock_backtest(const PriceSeries& series, const BacktestConfig& cfg);

struct TableRow {
    std::string label;   // statistic name, empty for continuation lines
    std::string system;  // "deduced" / "required" where tables carry both
    std::vector<double> values;
    std::optional<double> relative_difference;
};

struct SummaryTable {
    std::string name;
    std::vector<std::string> columns;  // value column headers
    std::vector<TableRow> rows;
};

struct SummaryTables {
    SummaryTable initial;      // deduced m* distributions
    SummaryTable maintenance;  // deduced w* distributions
    SummaryTable proportion;   // stock share of collateral
    SummaryTable calls;        // loans with at least one margin call
    SummaryTable cost;         // capital employed, both systems
};

/// Cross-stock aggregation: for each per-stock statistic row, the min, max,
/// mean, and upper quantiles of that statistic across stocks. The cost table
/// carries a deduced and a required line per statistic and a relative
/// difference (deduced vs required) of the cross-stock 0.95 quantiles.
SummaryTables aggregate_reports(std::span<const StockReport> reports);

/// Splits reports by the out-of-sample pass flag (neg_freq_deduced <= alpha).
std::pair<std::vector<const StockReport*>, std::vector<const StockReport*>>
pass_filter(std::span<const StockReport> reports);

/// Writes table1_initial.csv .. table5_cost.csv into `dir`, each prefixed
/// with `# key=value` metadata lines echoing the resolved config.
void write_summary_tables(const std::string& dir, const SummaryTables& tables,
                          const BacktestConfig& cfg);

}  // namespace marginrisk
