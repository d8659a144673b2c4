#include "marginrisk/backtest.hpp"

#include "marginrisk/cpnr.hpp"
#include "marginrisk/markov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace marginrisk {

namespace {

constexpr double kTol = 1e-9;

double exact_cash_leg(double m, double delta, double P0) {
    // Q0 = (m - delta) * P0 with the difference taken in integer hundredths,
    // so equal nominal differences give bit-equal Q0 (the optimizer keys its
    // memo the same way).
    const long long q_h = std::llround(m * 100.0) - std::llround(delta * 100.0);
    return static_cast<double>(q_h) / 100.0 * P0;
}

LoanRecord run_one_loan(const PriceSeries& series, const std::vector<double>& closes,
                        std::size_t start, const BacktestConfig& cfg) {
    LoanRecord rec;
    rec.start_date = series.observations[start].date;
    rec.start_index = start;
    rec.P0 = closes[start];

    const std::span<const double> window(closes.data() + start - cfg.history,
                                         static_cast<std::size_t>(cfg.history));
    StateSpace space = build_state_space(window, cfg.group_size);
    TransitionModel model = estimate_transition_matrix(window, std::move(space));
    rec.initial_state = state_of(model.state_space(), rec.P0);

    const std::span<const double> path(closes.data() + start + 1,
                                       static_cast<std::size_t>(cfg.horizon));

    const MarginSystem& req = cfg.required_system;
    const LoanSpec spec_req{rec.P0, exact_cash_leg(req.m, req.delta, rec.P0), req.delta,
                            cfg.horizon, cfg.r, cfg.R};
    rec.default_required = simulate_default_scenario(spec_req, req.w, path);
    rec.topup_required = simulate_topup_scenario(spec_req, req, path);

    const GridConfig grid = GridConfig::defaults(cfg.alpha);
    IndifferenceSet set =
        enumerate_indifference_set(model, rec.initial_state, rec.P0, cfg.r, cfg.horizon, grid);
    rec.indifference_size = set.elements.size();
    if (set.elements.empty()) return rec;

    rec.deduced_feasible = true;
    rec.deduced = select_optimal(set);

    // The deduced triple must still satisfy what the enumeration promised;
    // re-derive its CPNR through the one-query entry point and re-check the
    // constraints rather than trusting the sweep.
    const double Q0 = exact_cash_leg(rec.deduced.m, rec.deduced.delta, rec.P0);
    const CpnrQuery query{&model,        rec.initial_state, rec.P0, Q0,
                          rec.deduced.delta, rec.deduced.w,     cfg.r,  cfg.horizon};
    const CpnrResult check = cpnr(query);
    if (check.cpnr != rec.deduced.cpnr || check.cpnr > cfg.alpha ||
        1.0 + rec.deduced.m < rec.deduced.w - kTol ||
        rec.deduced.m < rec.deduced.delta - kTol)
        throw std::logic_error("deduced margin system failed re-validation");

    const MarginSystem deduced_system{rec.deduced.m, rec.deduced.delta, rec.deduced.w,
                                      rec.deduced.w, Provenance::deduced};
    const LoanSpec spec_ded{rec.P0, Q0, rec.deduced.delta, cfg.horizon, cfg.r, cfg.R};
    rec.default_deduced = simulate_default_scenario(spec_ded, rec.deduced.w, path);
    rec.topup_deduced = simulate_topup_scenario(spec_ded, deduced_system, path);
    rec.stock_proportion_deduced = (rec.deduced.delta * rec.P0 + Q0) > 0.0
                                       ? stock_proportion(Q0, rec.deduced.delta, rec.P0)
                                       : 0.0;
    return rec;
}

}  // namespace

StockReport run_stock_backtest(const PriceSeries& series, const BacktestConfig& cfg) {
    const auto verdict = check_window_sufficiency(series, cfg.history, cfg.horizon, cfg.n_loans);
    if (!verdict.sufficient)
        throw InputError(series.symbol + ": series has " + std::to_string(verdict.actual) +
                         " closes, needs " + std::to_string(verdict.required));
    if (cfg.r != cfg.R)
        throw InputError("the deduction recursion requires equal cash and loan rates");

    StockReport report;
    report.symbol = series.symbol;
    report.config = cfg;

    const std::vector<double> closes = series.closes();
    const std::size_t len = closes.size();
    // Last n_loans eligible start dates: each needs `history` closes before
    // and `horizon` closes after.
    const std::size_t first_start = len - cfg.horizon - cfg.n_loans;
    report.records.resize(cfg.n_loans);

    unsigned n_workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(cfg.n_loans));

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned worker) {
        try {
            for (std::size_t j = worker; j < static_cast<std::size_t>(cfg.n_loans);
                 j += n_workers)
                report.records[j] = run_one_loan(series, closes, first_start + j, cfg);
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (n_workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<double> m_values, w_values, p_values, cost_ded, cost_req;
    int neg_ded = 0, neg_req = 0;
    for (const auto& rec : report.records) {
        cost_req.push_back(rec.topup_required.cost);
        if (rec.default_required.negative) ++neg_req;
        if (rec.topup_required.n_calls > 0) ++report.n_calls_required;
        if (!rec.deduced_feasible) {
            ++report.n_infeasible;
            continue;
        }
        ++report.n_feasible;
        m_values.push_back(rec.deduced.m);
        w_values.push_back(rec.deduced.w);
        p_values.push_back(rec.stock_proportion_deduced);
        cost_ded.push_back(rec.topup_deduced.cost);
        if (rec.default_deduced.negative) ++neg_ded;
        if (rec.topup_deduced.n_calls > 0) ++report.n_calls_deduced;
    }

    report.neg_freq_required =
        static_cast<double>(neg_req) / static_cast<double>(cfg.n_loans);
    report.neg_freq_deduced =
        report.n_feasible > 0
            ? static_cast<double>(neg_ded) / static_cast<double>(report.n_feasible)
            : 0.0;
    report.passed = report.neg_freq_deduced <= cfg.alpha;

    report.cost_required_stats = summarize(cost_req, kLoanLevels);
    if (report.n_feasible > 0) {
        report.initial_ratio_stats = summarize(m_values, kLoanLevels);
        report.maintenance_stats = summarize(w_values, kLoanLevels);
        report.proportion_stats = summarize(p_values, kLoanLevels);
        report.cost_deduced_stats = summarize(cost_ded, kLoanLevels);
    }
    return report;
}

namespace {

// Row labels shared by the ratio, proportion, and cost tables: the per-stock
// statistics whose cross-stock distribution each table row describes.
std::vector<std::string> loan_stat_labels() {
    std::vector<std::string> labels = {"minimum", "maximum", "mean"};
    for (double level : kLoanLevels) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "q%.2f", level);
        labels.push_back(buf);
    }
    return labels;
}

double stat_at(const SummaryStats& s, std::size_t row) {
    if (row == 0) return s.min;
    if (row == 1) return s.max;
    if (row == 2) return s.mean;
    return s.quantiles.at(row - 3).second;
}

std::vector<std::string> cross_columns(std::span<const double> levels) {
    std::vector<std::string> cols = {"min", "max", "mean"};
    for (double level : levels) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "q%.2f", level);
        cols.push_back(buf);
    }
    return cols;
}

std::vector<double> cross_row(const std::vector<double>& per_stock,
                              std::span<const double> levels) {
    SummaryStats s = summarize(per_stock, levels);
    std::vector<double> vals = {s.min, s.max, s.mean};
    for (const auto& [_, v] : s.quantiles) vals.push_back(v);
    return vals;
}

SummaryTable distribution_table(std::string name, std::span<const StockReport> reports,
                                std::optional<SummaryStats> StockReport::* member) {
    SummaryTable table;
    table.name = std::move(name);
    table.columns = cross_columns(kStockLevels);
    const auto labels = loan_stat_labels();
    for (std::size_t row = 0; row < labels.size(); ++row) {
        std::vector<double> per_stock;
        for (const auto& rep : reports)
            if (rep.*member) per_stock.push_back(stat_at(*(rep.*member), row));
        if (per_stock.empty())
            throw InputError("no stock has deduced-system statistics to aggregate");
        table.rows.push_back({labels[row], "", cross_row(per_stock, kStockLevels), {}});
    }
    return table;
}

}  // namespace

SummaryTables aggregate_reports(std::span<const StockReport> reports) {
    if (reports.empty()) throw InputError("no reports to aggregate");

    SummaryTables out;
    out.initial = distribution_table("initial_margin_ratio", reports,
                                     &StockReport::initial_ratio_stats);
    out.maintenance =
        distribution_table("maintenance_margin_ratio", reports, &StockReport::maintenance_stats);
    out.proportion =
        distribution_table("stock_proportion", reports, &StockReport::proportion_stats);

    out.calls.name = "margin_calls";
    out.calls.columns = cross_columns(kCallLevels);
    std::vector<double> calls_req, calls_ded;
    for (const auto& rep : reports) {
        calls_req.push_back(static_cast<double>(rep.n_calls_required));
        calls_ded.push_back(static_cast<double>(rep.n_calls_deduced));
    }
    out.calls.rows.push_back({"", "required", cross_row(calls_req, kCallLevels), {}});
    out.calls.rows.push_back({"", "deduced", cross_row(calls_ded, kCallLevels), {}});

    out.cost.name = "loan_cost";
    out.cost.columns = cross_columns(kStockLevels);
    const auto labels = loan_stat_labels();
    for (std::size_t row = 0; row < labels.size(); ++row) {
        std::vector<double> ded, req;
        for (const auto& rep : reports) {
            req.push_back(stat_at(rep.cost_required_stats, row));
            if (rep.cost_deduced_stats) ded.push_back(stat_at(*rep.cost_deduced_stats, row));
        }
        if (ded.empty()) throw InputError("no stock has deduced-system statistics to aggregate");
        auto ded_vals = cross_row(ded, kStockLevels);
        auto req_vals = cross_row(req, kStockLevels);
        // Relative difference of the cross-stock 0.95 quantiles (last column).
        const double q95_ded = ded_vals.back();
        const double q95_req = req_vals.back();
        const double rd = q95_req != 0.0 ? (q95_ded - q95_req) / q95_req : 0.0;
        out.cost.rows.push_back({labels[row], "deduced", std::move(ded_vals), rd});
        out.cost.rows.push_back({"", "required", std::move(req_vals), {}});
    }
    return out;
}

std::pair<std::vector<const StockReport*>, std::vector<const StockReport*>>
pass_filter(std::span<const StockReport> reports) {
    std::pair<std::vector<const StockReport*>, std::vector<const StockReport*>> out;
    for (const auto& rep : reports)
        (rep.passed ? out.first : out.second).push_back(&rep);
    return out;
}

namespace {

void write_table(const std::filesystem::path& file, const SummaryTable& table,
                 const BacktestConfig& cfg, bool with_label, bool with_system, bool with_rd) {
    std::ofstream out(file);
    if (!out) throw InputError("cannot write '" + file.string() + "'");
    out << "# table=" << table.name << '\n';
    out << "# history=" << cfg.history << " g=" << cfg.group_size << " T=" << cfg.horizon
        << " n_loans=" << cfg.n_loans << " alpha=" << cfg.alpha << " r=" << cfg.r
        << " R=" << cfg.R << '\n';
    out << "# required m=" << cfg.required_system.m << " delta=" << cfg.required_system.delta
        << " w=" << cfg.required_system.w << " topup=" << cfg.required_system.topup_target
        << '\n';
    out << "# quantile rule: lower empirical quantile, rank ceil(level*N)\n";

    bool first = true;
    auto cell = [&](const std::string& v) {
        if (!first) out << ',';
        out << v;
        first = false;
    };
    if (with_label) cell("statistic");
    if (with_system) cell("system");
    for (const auto& c : table.columns) cell(c);
    if (with_rd) cell("rd");
    out << '\n';

    for (const auto& row : table.rows) {
        first = true;
        if (with_label) cell(row.label);
        if (with_system) cell(row.system);
        for (double v : row.values) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            cell(buf);
        }
        if (with_rd) {
            if (row.relative_difference) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6g", *row.relative_difference);
                cell(buf);
            } else {
                cell("");
            }
        }
        out << '\n';
    }
}

}  // namespace

void write_summary_tables(const std::string& dir, const SummaryTables& tables,
                          const BacktestConfig& cfg) {
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    write_table(base / "table1_initial.csv", tables.initial, cfg, true, false, false);
    write_table(base / "table2_maintenance.csv", tables.maintenance, cfg, true, false, false);
    write_table(base / "table3_proportion.csv", tables.proportion, cfg, true, false, false);
    write_table(base / "table4_calls.csv", tables.calls, cfg, false, true, false);
    write_table(base / "table5_cost.csv", tables.cost, cfg, true, true, true);
}

}  // namespace marginrisk
