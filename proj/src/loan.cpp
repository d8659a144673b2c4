#include "marginrisk/loan.hpp"

#include "marginrisk/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace marginrisk {

double initial_margin_ratio(double Q0, double delta, double P0) {
    if (P0 <= 0.0) throw InputError("P0 must be positive");
    return (Q0 + delta * P0) / P0;
}

bool check_adequacy(double m0, double w) { return m0 + 1.0 >= w; }

double stock_proportion(double Q0, double delta, double P0) {
    const double stock_leg = delta * P0;
    const double total = stock_leg + Q0;
    if (total <= 0.0) throw InputError("collateral must be positive");
    return stock_leg / total;
}

MarginState margins_at(const LoanSpec& spec, double w, int i, double price_i, double cash_i) {
    if (i < 0) throw std::logic_error("day index must be non-negative");
    const double loan_value = spec.P0 * std::pow(1.0 + spec.R, i);
    MarginState s;
    s.shortfall = w * loan_value - (1.0 + spec.delta) * price_i;
    s.excess = cash_i - s.shortfall;
    return s;
}

DefaultScenario simulate_default_scenario(const LoanSpec& spec, double w,
                                          std::span<const double> path) {
    if (static_cast<int>(path.size()) != spec.T)
        throw std::logic_error("path length must equal the horizon");

    DefaultScenario out;
    const double growth_r = 1.0 + spec.r;
    const double growth_R = 1.0 + spec.R;
    std::vector<double> cash(spec.T + 1), loan_value(spec.T + 1);
    cash[0] = spec.Q0;
    loan_value[0] = spec.P0;
    for (int i = 1; i <= spec.T; ++i) {
        cash[i] = cash[i - 1] * growth_r;
        loan_value[i] = loan_value[i - 1] * growth_R;
    }
    for (int i = 1; i <= spec.T; ++i) {
        const double shortfall = w * loan_value[i] - (1.0 + spec.delta) * path[i - 1];
        if (cash[i] - shortfall <= 0.0) {
            out.tau = i;
            break;
        }
    }

    auto broker_return = [&](int t) {
        return cash[t] + (1.0 + spec.delta) * path[t - 1] - loan_value[t];
    };

    if (out.tau) {
        out.tau_star = std::min(*out.tau + 1, spec.T);
        out.default_return = broker_return(*out.tau_star);
        out.negative = out.default_return <= 0.0;
    } else {
        out.default_return = broker_return(spec.T);
        out.negative = false;
    }
    return out;
}

TopupScenario simulate_topup_scenario(const LoanSpec& spec, const MarginSystem& system,
                                      std::span<const double> path) {
    if (static_cast<int>(path.size()) != spec.T)
        throw std::logic_error("path length must equal the horizon");

    TopupScenario out;
    const double growth_r = 1.0 + spec.r;
    const double growth_R = 1.0 + spec.R;
    double cash = spec.Q0;
    double loan_value = spec.P0;
    for (int i = 1; i <= spec.T; ++i) {
        cash *= growth_r;
        loan_value *= growth_R;
        const double collateral_stock = (1.0 + spec.delta) * path[i - 1];
        const double shortfall = system.w * loan_value - collateral_stock;
        if (cash - shortfall <= 0.0) {
            double topup = system.topup_target * loan_value - (cash + collateral_stock);
            if (topup < 0.0) {
                topup = 0.0;
                out.clamped_topups += 1;
            }
            cash += topup;
            out.call_days.push_back(i);
            out.topups.push_back(topup);
        }
    }
    out.n_calls = static_cast<int>(out.call_days.size());
    out.cost = cash + spec.delta * path[spec.T - 1];
    return out;
}

}  // namespace marginrisk
