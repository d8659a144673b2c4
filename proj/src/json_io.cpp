#include "marginrisk/json_io.hpp"

#include <fstream>

namespace marginrisk {

using nlohmann::json;

json model_to_json(const TransitionModel& model) {
    const StateSpace& space = model.state_space();
    json j;
    j["group_size"] = space.group_size;
    j["reps"] = space.reps;
    json counts = json::array();
    for (const auto& members : space.members) counts.push_back(members.size());
    j["member_counts"] = std::move(counts);

    const Matrix& one = model.one_step();
    json rows = json::array();
    for (Eigen::Index i = 0; i < one.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < one.cols(); ++c) row.push_back(one(i, c));
        rows.push_back(std::move(row));
    }
    j["one_step"] = std::move(rows);
    j["self_loop_states"] = model.self_loop_states();
    return j;
}

TransitionModel model_from_json(const json& j) {
    try {
        StateSpace space;
        space.group_size = j.at("group_size").get<int>();
        space.reps = j.at("reps").get<std::vector<double>>();
        for (double q : space.reps) space.members.push_back({q});

        const auto& rows = j.at("one_step");
        const int n = space.num_states();
        if (static_cast<int>(rows.size()) != n)
            throw InputError("one_step row count does not match reps");
        Matrix one(n, n);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(rows.at(i).size()) != n)
                throw InputError("one_step is not square");
            for (int c = 0; c < n; ++c) one(i, c) = rows.at(i).at(c).get<double>();
        }
        std::vector<int> self_loops;
        if (j.contains("self_loop_states"))
            self_loops = j.at("self_loop_states").get<std::vector<int>>();
        return TransitionModel(std::move(space), std::move(one), {}, std::move(self_loops));
    } catch (const json::exception& e) {
        throw InputError(std::string("bad model file: ") + e.what());
    } catch (const std::logic_error& e) {
        throw InputError(std::string("bad model file: ") + e.what());
    }
}

json cpnr_result_to_json(const CpnrResult& result) {
    json j;
    j["prob_call"] = result.prob_call;
    j["prob_joint_negative"] = result.prob_joint_negative;
    j["cpnr"] = result.cpnr;
    json days = json::array();
    for (const auto& d : result.per_day)
        days.push_back({{"day", d.day},
                        {"prob_call", d.prob_call},
                        {"prob_joint_negative", d.prob_joint_negative}});
    j["per_day"] = std::move(days);
    j["call_thresholds"] = result.call_thresholds;
    j["loss_thresholds"] = result.loss_thresholds;
    return j;
}

json backtest_config_to_json(const BacktestConfig& cfg) {
    return json{{"history", cfg.history},
                {"group_size", cfg.group_size},
                {"horizon", cfg.horizon},
                {"n_loans", cfg.n_loans},
                {"alpha", cfg.alpha},
                {"r", cfg.r},
                {"R", cfg.R},
                {"threads", cfg.threads},
                {"required_system",
                 {{"m", cfg.required_system.m},
                  {"delta", cfg.required_system.delta},
                  {"w", cfg.required_system.w},
                  {"topup_target", cfg.required_system.topup_target}}}};
}

BacktestConfig backtest_config_from_json(const json& j) {
    BacktestConfig cfg;
    cfg.history = j.at("history").get<int>();
    cfg.group_size = j.at("group_size").get<int>();
    cfg.horizon = j.at("horizon").get<int>();
    cfg.n_loans = j.at("n_loans").get<int>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.r = j.at("r").get<double>();
    cfg.R = j.at("R").get<double>();
    cfg.threads = j.at("threads").get<int>();
    const auto& req = j.at("required_system");
    cfg.required_system.m = req.at("m").get<double>();
    cfg.required_system.delta = req.at("delta").get<double>();
    cfg.required_system.w = req.at("w").get<double>();
    cfg.required_system.topup_target = req.at("topup_target").get<double>();
    cfg.required_system.provenance = Provenance::required;
    return cfg;
}

namespace {

json stats_to_json(const SummaryStats& s) {
    json j;
    j["min"] = s.min;
    j["max"] = s.max;
    j["mean"] = s.mean;
    json q = json::array();
    for (const auto& [level, value] : s.quantiles) q.push_back({level, value});
    j["quantiles"] = std::move(q);
    return j;
}

SummaryStats stats_from_json(const json& j) {
    SummaryStats s;
    s.min = j.at("min").get<double>();
    s.max = j.at("max").get<double>();
    s.mean = j.at("mean").get<double>();
    for (const auto& pair : j.at("quantiles"))
        s.quantiles.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
    return s;
}

json default_scenario_to_json(const DefaultScenario& d) {
    json j;
    j["tau"] = d.tau ? json(*d.tau) : json(nullptr);
    j["tau_star"] = d.tau_star ? json(*d.tau_star) : json(nullptr);
    j["default_return"] = d.default_return;
    j["negative"] = d.negative;
    return j;
}

DefaultScenario default_scenario_from_json(const json& j) {
    DefaultScenario d;
    if (!j.at("tau").is_null()) d.tau = j.at("tau").get<int>();
    if (!j.at("tau_star").is_null()) d.tau_star = j.at("tau_star").get<int>();
    d.default_return = j.at("default_return").get<double>();
    d.negative = j.at("negative").get<bool>();
    return d;
}

json topup_scenario_to_json(const TopupScenario& t) {
    return json{{"call_days", t.call_days},
                {"topups", t.topups},
                {"n_calls", t.n_calls},
                {"clamped_topups", t.clamped_topups},
                {"cost", t.cost}};
}

TopupScenario topup_scenario_from_json(const json& j) {
    TopupScenario t;
    t.call_days = j.at("call_days").get<std::vector<int>>();
    t.topups = j.at("topups").get<std::vector<double>>();
    t.n_calls = j.at("n_calls").get<int>();
    t.clamped_topups = j.at("clamped_topups").get<int>();
    t.cost = j.at("cost").get<double>();
    return t;
}

json record_to_json(const LoanRecord& r) {
    json j;
    j["start_date"] = r.start_date.to_string();
    j["start_index"] = r.start_index;
    j["P0"] = r.P0;
    j["initial_state"] = r.initial_state;
    j["indifference_size"] = r.indifference_size;
    j["default_required"] = default_scenario_to_json(r.default_required);
    j["topup_required"] = topup_scenario_to_json(r.topup_required);
    if (r.deduced_feasible) {
        j["deduced"] = {{"m", r.deduced.m},
                        {"delta", r.deduced.delta},
                        {"w", r.deduced.w},
                        {"cpnr", r.deduced.cpnr}};
        j["stock_proportion"] = r.stock_proportion_deduced;
        j["default_deduced"] = default_scenario_to_json(r.default_deduced);
        j["topup_deduced"] = topup_scenario_to_json(r.topup_deduced);
    } else {
        j["deduced"] = nullptr;
    }
    return j;
}

LoanRecord record_from_json(const json& j) {
    LoanRecord r;
    r.start_date = Date::parse(j.at("start_date").get<std::string>());
    r.start_index = j.at("start_index").get<std::size_t>();
    r.P0 = j.at("P0").get<double>();
    r.initial_state = j.at("initial_state").get<int>();
    r.indifference_size = j.at("indifference_size").get<std::size_t>();
    r.default_required = default_scenario_from_json(j.at("default_required"));
    r.topup_required = topup_scenario_from_json(j.at("topup_required"));
    if (!j.at("deduced").is_null()) {
        r.deduced_feasible = true;
        const auto& d = j.at("deduced");
        r.deduced = {d.at("m").get<double>(), d.at("delta").get<double>(),
                     d.at("w").get<double>(), d.at("cpnr").get<double>()};
        r.stock_proportion_deduced = j.at("stock_proportion").get<double>();
        r.default_deduced = default_scenario_from_json(j.at("default_deduced"));
        r.topup_deduced = topup_scenario_from_json(j.at("topup_deduced"));
    }
    return r;
}

}  // namespace

json stock_report_to_json(const StockReport& report) {
    json j;
    j["symbol"] = report.symbol;
    j["config"] = backtest_config_to_json(report.config);
    j["n_feasible"] = report.n_feasible;
    j["n_infeasible"] = report.n_infeasible;
    j["neg_freq_deduced"] = report.neg_freq_deduced;
    j["neg_freq_required"] = report.neg_freq_required;
    j["passed"] = report.passed;
    j["n_calls_deduced"] = report.n_calls_deduced;
    j["n_calls_required"] = report.n_calls_required;

    json stats;
    auto put = [&](const char* key, const std::optional<SummaryStats>& s) {
        stats[key] = s ? stats_to_json(*s) : json(nullptr);
    };
    put("initial_ratio", report.initial_ratio_stats);
    put("maintenance", report.maintenance_stats);
    put("proportion", report.proportion_stats);
    put("cost_deduced", report.cost_deduced_stats);
    stats["cost_required"] = stats_to_json(report.cost_required_stats);
    j["stats"] = std::move(stats);

    json records = json::array();
    for (const auto& r : report.records) records.push_back(record_to_json(r));
    j["records"] = std::move(records);
    return j;
}

StockReport stock_report_from_json(const json& j) {
    try {
        StockReport report;
        report.symbol = j.at("symbol").get<std::string>();
        report.config = backtest_config_from_json(j.at("config"));
        report.n_feasible = j.at("n_feasible").get<int>();
        report.n_infeasible = j.at("n_infeasible").get<int>();
        report.neg_freq_deduced = j.at("neg_freq_deduced").get<double>();
        report.neg_freq_required = j.at("neg_freq_required").get<double>();
        report.passed = j.at("passed").get<bool>();
        report.n_calls_deduced = j.at("n_calls_deduced").get<int>();
        report.n_calls_required = j.at("n_calls_required").get<int>();

        const auto& stats = j.at("stats");
        auto get = [&](const char* key) -> std::optional<SummaryStats> {
            if (stats.at(key).is_null()) return std::nullopt;
            return stats_from_json(stats.at(key));
        };
        report.initial_ratio_stats = get("initial_ratio");
        report.maintenance_stats = get("maintenance");
        report.proportion_stats = get("proportion");
        report.cost_deduced_stats = get("cost_deduced");
        report.cost_required_stats = stats_from_json(stats.at("cost_required"));

        for (const auto& r : j.at("records")) report.records.push_back(record_from_json(r));
        return report;
    } catch (const json::exception& e) {
        throw InputError(std::string("bad report file: ") + e.what());
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace marginrisk
