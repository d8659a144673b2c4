#include "marginrisk/backtest.hpp"
#include "marginrisk/cpnr.hpp"
#include "marginrisk/json_io.hpp"
#include "marginrisk/loan.hpp"
#include "marginrisk/markov.hpp"
#include "marginrisk/optimizer.hpp"
#include "marginrisk/price_series.hpp"
#include "marginrisk/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>

namespace fs = std::filesystem;
using namespace marginrisk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

std::vector<fs::path> csv_files_in(const std::string& dir) {
    if (!fs::is_directory(dir)) throw InputError("'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no input: '" + dir + "' holds no .csv files");
    return files;
}

struct ModelArgs {
    std::string model_path;
    std::string prices_path;
    int history = 800;
    int group_size = 25;

    void attach(CLI::App* cmd) {
        auto* model = cmd->add_option("--model", model_path, "model JSON (from synth or --dump-model)");
        auto* prices = cmd->add_option("--prices", prices_path, "price CSV to fit a model from");
        cmd->add_option("--history", history, "closes used for the fit (last N)")
            ->capture_default_str();
        cmd->add_option("--group-size", group_size, "distinct prices per state")
            ->capture_default_str();
        model->excludes(prices);
    }

    // Returns the model plus the last close when fitted from prices.
    std::pair<TransitionModel, std::optional<double>> resolve() const {
        if (!model_path.empty())
            return {model_from_json(load_json_file(model_path)), std::nullopt};
        if (prices_path.empty()) throw InputError("need --model or --prices");
        PriceSeries series = load_price_series(prices_path, fs::path(prices_path).stem().string());
        if (static_cast<int>(series.size()) < history)
            throw InputError(prices_path + ": " + std::to_string(series.size()) +
                             " closes, --history needs " + std::to_string(history));
        const std::vector<double> closes = series.closes();
        const std::span<const double> window(closes.data() + closes.size() - history,
                                             static_cast<std::size_t>(history));
        StateSpace space = build_state_space(window, group_size);
        return {estimate_transition_matrix(window, std::move(space)), closes.back()};
    }
};

int cmd_validate(const std::string& path, bool verbose) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        files = csv_files_in(path);
    } else if (fs::exists(path)) {
        files.push_back(path);
    } else {
        throw InputError("no input: '" + path + "' does not exist");
    }

    int bad = 0;
    for (const auto& file : files) {
        std::vector<std::string> warnings;
        try {
            PriceSeries series = load_price_series(file.string(), file.stem().string(), &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            if (verbose)
                std::cout << file.string() << ": ok, " << series.size() << " rows, "
                          << series.observations.front().date.to_string() << " .. "
                          << series.observations.back().date.to_string() << '\n';
        } catch (const InputError& e) {
            std::cerr << "invalid: " << e.what() << '\n';
            ++bad;
        }
    }
    if (bad > 0) {
        std::cerr << bad << " of " << files.size() << " files invalid\n";
        return kExitInput;
    }
    std::cout << files.size() << " file(s) valid\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"margin-loan risk engine: CPNR evaluation, margin-system deduction, backtests"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file ([subcommand] sections)");
    bool verbose = false;
    app.add_flag("--verbose", verbose, "chatty output");

    // validate
    auto* validate = app.add_subcommand("validate", "check price CSVs");
    std::string validate_path;
    validate->add_option("--prices", validate_path, "CSV file or directory")->required();

    // cpnr
    auto* cpnr_cmd = app.add_subcommand("cpnr", "evaluate CPNR for one loan");
    ModelArgs cpnr_model;
    cpnr_model.attach(cpnr_cmd);
    double c_P0 = 0.0, c_Q0 = -1.0, c_m = -1.0, c_delta = 0.0, c_w = 1.3, c_rate = 0.0;
    int c_T = 30;
    bool c_exact = false;
    cpnr_cmd->add_option("--price", c_P0, "purchase price P0 (default: last close of --prices)");
    cpnr_cmd->add_option("--Q0", c_Q0, "cash collateral");
    cpnr_cmd->add_option("--m", c_m, "initial margin ratio (sets Q0 = (m - delta) * P0)");
    cpnr_cmd->add_option("--delta", c_delta, "stock fraction of collateral")->capture_default_str();
    cpnr_cmd->add_option("--w", c_w, "maintenance margin ratio")->capture_default_str();
    cpnr_cmd->add_option("--rate", c_rate, "daily rate (cash and loan)")->capture_default_str();
    cpnr_cmd->add_option("--horizon", c_T, "loan days T")->capture_default_str();
    cpnr_cmd->add_flag("--diagnostic-exact", c_exact,
                       "also report exact first-passage probabilities");
    std::string c_dump_model;
    cpnr_cmd->add_option("--dump-model", c_dump_model, "write the fitted model JSON here");

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "deduce a margin system from the grids");
    ModelArgs opt_model;
    opt_model.attach(opt_cmd);
    double o_P0 = 0.0, o_rate = 0.0, o_alpha = 0.05;
    int o_T = 30;
    int o_m_lo = 0, o_m_hi = 80, o_d_lo = 0, o_d_hi = 80, o_w_lo = 100, o_w_hi = 200;
    std::string o_set_out, o_dump_model;
    opt_cmd->add_option("--price", o_P0, "purchase price P0 (default: last close of --prices)");
    opt_cmd->add_option("--rate", o_rate, "daily rate")->capture_default_str();
    opt_cmd->add_option("--horizon", o_T, "loan days T")->capture_default_str();
    opt_cmd->add_option("--alpha", o_alpha, "CPNR bound")->capture_default_str();
    opt_cmd->add_option("--m-min", o_m_lo, "initial-ratio grid lower bound, hundredths")
        ->capture_default_str();
    opt_cmd->add_option("--m-max", o_m_hi, "initial-ratio grid upper bound, hundredths")
        ->capture_default_str();
    opt_cmd->add_option("--delta-min", o_d_lo, "stock-fraction grid lower bound, hundredths")
        ->capture_default_str();
    opt_cmd->add_option("--delta-max", o_d_hi, "stock-fraction grid upper bound, hundredths")
        ->capture_default_str();
    opt_cmd->add_option("--w-min", o_w_lo, "maintenance grid lower bound, hundredths")
        ->capture_default_str();
    opt_cmd->add_option("--w-max", o_w_hi, "maintenance grid upper bound, hundredths")
        ->capture_default_str();
    opt_cmd->add_option("--out-set", o_set_out, "write the full indifference set as CSV");
    opt_cmd->add_option("--dump-model", o_dump_model, "write the fitted model JSON here");

    // backtest
    auto* bt_cmd = app.add_subcommand("backtest", "rolling out-of-sample evaluation");
    std::string bt_dir, bt_file, bt_out = "out";
    BacktestConfig bt_cfg;
    double bt_rate = 0.0;
    bt_cmd->add_option("--prices-dir", bt_dir, "directory of price CSVs");
    bt_cmd->add_option("--prices", bt_file, "single price CSV");
    bt_cmd->add_option("--out", bt_out, "output directory")->capture_default_str();
    bt_cmd->add_option("--history", bt_cfg.history, "fit window")->capture_default_str();
    bt_cmd->add_option("--group-size", bt_cfg.group_size, "distinct prices per state")
        ->capture_default_str();
    bt_cmd->add_option("--horizon", bt_cfg.horizon, "loan days T")->capture_default_str();
    bt_cmd->add_option("--n-loans", bt_cfg.n_loans, "loans per stock")->capture_default_str();
    bt_cmd->add_option("--alpha", bt_cfg.alpha, "CPNR bound")->capture_default_str();
    bt_cmd->add_option("--rate", bt_rate, "daily rate (cash and loan)")->capture_default_str();
    bt_cmd->add_option("--required-m", bt_cfg.required_system.m, "required initial ratio")
        ->capture_default_str();
    bt_cmd->add_option("--required-delta", bt_cfg.required_system.delta,
                       "required stock fraction")
        ->capture_default_str();
    bt_cmd->add_option("--required-w", bt_cfg.required_system.w, "required maintenance ratio")
        ->capture_default_str();
    bt_cmd->add_option("--required-topup", bt_cfg.required_system.topup_target,
                       "ratio restored after a call under the required system")
        ->capture_default_str();
    bt_cmd->add_option("--threads", bt_cfg.threads, "worker threads (0 = auto)")
        ->capture_default_str();

    // report
    auto* rep_cmd = app.add_subcommand("report", "re-aggregate per-stock reports into tables");
    std::string rep_in, rep_out = "out";
    rep_cmd->add_option("--in", rep_in, "directory of *.report.json files")->required();
    rep_cmd->add_option("--out", rep_out, "output directory")->capture_default_str();

    // synth
    auto* syn_cmd = app.add_subcommand("synth", "generate synthetic price fixtures");
    std::string syn_out = "prices", syn_model_path, syn_start = "2015-01-05";
    int syn_days = 1030, syn_levels = 40, syn_stocks = 1;
    double syn_base = 8.0, syn_step = 0.16, syn_vol = 1.0;
    std::uint64_t syn_seed = 1;
    syn_cmd->add_option("--out", syn_out, "output directory")->capture_default_str();
    syn_cmd->add_option("--days", syn_days, "observations per stock")->capture_default_str();
    syn_cmd->add_option("--seed", syn_seed, "RNG seed")->capture_default_str();
    syn_cmd->add_option("--n-stocks", syn_stocks, "number of series")->capture_default_str();
    syn_cmd->add_option("--levels", syn_levels, "price levels in the generating chain")
        ->capture_default_str();
    syn_cmd->add_option("--base-price", syn_base, "lowest level price")->capture_default_str();
    syn_cmd->add_option("--level-step", syn_step, "price gap between levels")
        ->capture_default_str();
    syn_cmd->add_option("--volatility", syn_vol, "move-weight scale")->capture_default_str();
    syn_cmd->add_option("--start-date", syn_start, "first observation date")
        ->capture_default_str();
    syn_cmd->add_option("--model", syn_model_path, "generate from this model JSON instead");

    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (validate->parsed()) return cmd_validate(validate_path, verbose);

        if (cpnr_cmd->parsed()) {
            auto [model, last_close] = cpnr_model.resolve();
            if (c_P0 <= 0.0) {
                if (!last_close) throw InputError("--price is required with --model");
                c_P0 = *last_close;
            }
            if (c_m >= 0.0) {
                const long long q_h = std::llround(c_m * 100.0) - std::llround(c_delta * 100.0);
                if (q_h < 0) throw InputError("--m must be at least --delta");
                c_Q0 = static_cast<double>(q_h) / 100.0 * c_P0;
            }
            if (c_Q0 < 0.0) throw InputError("need --Q0 or --m");
            if (!c_dump_model.empty()) save_json_file(c_dump_model, model_to_json(model));

            const int h = state_of(model.state_space(), c_P0);
            const CpnrQuery query{&model, h, c_P0, c_Q0, c_delta, c_w, c_rate, c_T};
            nlohmann::json out = cpnr_result_to_json(cpnr(query));
            out["initial_state"] = h;
            out["config"] = {{"P0", c_P0},     {"Q0", c_Q0},   {"delta", c_delta}, {"w", c_w},
                             {"rate", c_rate}, {"horizon", c_T}, {"n_states", model.state_space().num_states()}};
            if (c_exact) out["exact_first_passage"] = cpnr_result_to_json(cpnr_first_passage_exact(query));
            std::cout << out.dump(2) << '\n';
            return kExitOk;
        }

        if (opt_cmd->parsed()) {
            auto [model, last_close] = opt_model.resolve();
            if (o_P0 <= 0.0) {
                if (!last_close) throw InputError("--price is required with --model");
                o_P0 = *last_close;
            }
            if (!o_dump_model.empty()) save_json_file(o_dump_model, model_to_json(model));

            GridConfig grid;
            grid.initial_ratio_grid = GridConfig::percent_grid(o_m_lo, o_m_hi);
            grid.stock_fraction_grid = GridConfig::percent_grid(o_d_lo, o_d_hi);
            grid.maintenance_grid = GridConfig::percent_grid(o_w_lo, o_w_hi);
            grid.alpha = o_alpha;

            const int h = state_of(model.state_space(), o_P0);
            IndifferenceSet set = enumerate_indifference_set(model, h, o_P0, o_rate, o_T, grid);

            nlohmann::json out;
            out["set_size"] = set.elements.size();
            out["config"] = {{"P0", o_P0},       {"rate", o_rate}, {"horizon", o_T},
                             {"alpha", o_alpha}, {"initial_state", h},
                             {"n_states", model.state_space().num_states()}};
            if (set.elements.empty()) {
                out["selected"] = nullptr;
            } else {
                const MarginTriple best = select_optimal(set);
                out["selected"] = {{"m", best.m}, {"delta", best.delta}, {"w", best.w},
                                   {"cpnr", best.cpnr}};
            }
            if (!o_set_out.empty()) {
                std::ofstream set_file(o_set_out);
                if (!set_file) throw InputError("cannot write '" + o_set_out + "'");
                set_file << "m,delta,w,cpnr\n";
                for (const auto& e : set.elements)
                    set_file << e.m << ',' << e.delta << ',' << e.w << ',' << e.cpnr << '\n';
            }
            std::cout << out.dump(2) << '\n';
            return kExitOk;
        }

        if (bt_cmd->parsed()) {
            if (bt_cmd->count("--rate") > 0) {
                bt_cfg.r = bt_rate;
                bt_cfg.R = bt_rate;
            }
            std::vector<fs::path> files;
            if (!bt_file.empty())
                files.push_back(bt_file);
            else if (!bt_dir.empty())
                files = csv_files_in(bt_dir);
            else
                throw InputError("need --prices-dir or --prices");

            fs::create_directories(bt_out);
            std::vector<StockReport> reports;
            for (const auto& file : files) {
                std::vector<std::string> warnings;
                PriceSeries series =
                    load_price_series(file.string(), file.stem().string(), &warnings);
                for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
                StockReport report = run_stock_backtest(series, bt_cfg);
                save_json_file((fs::path(bt_out) / (report.symbol + ".report.json")).string(),
                               stock_report_to_json(report));
                if (verbose)
                    std::cout << report.symbol << ": neg_freq deduced "
                              << report.neg_freq_deduced << ", required "
                              << report.neg_freq_required
                              << (report.passed ? ", passed" : ", failed") << '\n';
                reports.push_back(std::move(report));
            }

            write_summary_tables(bt_out, aggregate_reports(reports), bt_cfg);
            const auto [passing, failing] = pass_filter(reports);
            std::cout << passing.size() << " of " << reports.size()
                      << " stocks passed the out-of-sample test (alpha " << bt_cfg.alpha
                      << ")\n";
            return kExitOk;
        }

        if (rep_cmd->parsed()) {
            if (!fs::is_directory(rep_in)) throw InputError("'" + rep_in + "' is not a directory");
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(rep_in)) {
                const auto name = entry.path().filename().string();
                if (entry.is_regular_file() && name.size() > 12 &&
                    name.substr(name.size() - 12) == ".report.json")
                    files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            if (files.empty()) throw InputError("no input: no *.report.json in '" + rep_in + "'");

            std::vector<StockReport> reports;
            for (const auto& file : files)
                reports.push_back(stock_report_from_json(load_json_file(file.string())));
            write_summary_tables(rep_out, aggregate_reports(reports), reports.front().config);
            const auto [passing, failing] = pass_filter(reports);
            std::cout << passing.size() << " of " << reports.size()
                      << " stocks passed the out-of-sample test\n";
            return kExitOk;
        }

        if (syn_cmd->parsed()) {
            fs::create_directories(syn_out);
            std::vector<double> levels;
            Matrix one;
            if (!syn_model_path.empty()) {
                TransitionModel model = model_from_json(load_json_file(syn_model_path));
                levels = model.state_space().reps;
                one = model.one_step();
            } else {
                std::tie(levels, one) = mean_reverting_chain(syn_levels, syn_base, syn_step, syn_vol);
            }
            const Date start = Date::parse(syn_start);
            for (int s = 0; s < syn_stocks; ++s) {
                char name[16];
                std::snprintf(name, sizeof name, "SYN%03d", s);
                PriceSeries series =
                    generate_series(levels, one, syn_days, syn_seed + static_cast<std::uint64_t>(s),
                                    name, start);
                save_price_series((fs::path(syn_out) / (series.symbol + ".csv")).string(), series);
            }
            // The generating chain itself, reusable via --model.
            std::vector<std::vector<double>> singletons;
            for (double q : levels) singletons.push_back({q});
            TransitionModel generator(StateSpace{levels, std::move(singletons), 1}, one);
            save_json_file((fs::path(syn_out) / "model.json").string(), model_to_json(generator));
            std::cout << syn_stocks << " series of " << syn_days << " days written to " << syn_out
                      << '\n';
            return kExitOk;
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitOk;
}
