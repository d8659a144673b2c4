#pragma once

#include "marginrisk/backtest.hpp"
#include "marginrisk/cpnr.hpp"
#include "marginrisk/markov.hpp"

#include <json.hpp>

#include <string>

namespace marginrisk {

/// Model dump: group size, state representatives, member counts, the
/// one-step matrix, and self-loop diagnostics.
nlohmann::json model_to_json(const TransitionModel& model);

/// Rebuilds a model from a dump. Member lists are not stored, so the loaded
/// state space carries only the representatives.
TransitionModel model_from_json(const nlohmann::json& j);

nlohmann::json cpnr_result_to_json(const CpnrResult& result);

nlohmann::json backtest_config_to_json(const BacktestConfig& cfg);
BacktestConfig backtest_config_from_json(const nlohmann::json& j);

nlohmann::json stock_report_to_json(const StockReport& report);
StockReport stock_report_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace marginrisk
