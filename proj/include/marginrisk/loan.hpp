#pragma once

#include <optional>
#include <span>
#include <vector>

namespace marginrisk {

/// Terms of one margin loan: the buyer purchases one share at P0 financed by
/// the broker, posting cash Q0 plus a fraction delta of the share as
/// collateral. Cash earns the riskless rate r; the loan accrues at R. Both
/// rates are per observation day.
struct LoanSpec {
    double P0 = 0.0;
    double Q0 = 0.0;
    double delta = 0.0;
    int T = 0;
    double r = 0.0;
    double R = 0.0;
};

enum class Provenance { required, deduced };

/// A margin system: initial ratio m, collateral stock fraction delta,
/// maintenance ratio w, and the ratio restored after a margin call.
struct MarginSystem {
    double m = 0.0;
    double delta = 0.0;
    double w = 0.0;
    double topup_target = 0.0;
    Provenance provenance = Provenance::required;
};

/// m0 = (Q0 + delta * P0) / P0, the collateral-to-loan ratio at inception.
double initial_margin_ratio(double Q0, double delta, double P0);

/// A system is adequate iff m0 + 1 >= w: the account cannot be on call at
/// inception.
bool check_adequacy(double m0, double w);

/// p = delta * P0 / (delta * P0 + Q0), the stock share of posted collateral.
double stock_proportion(double Q0, double delta, double P0);

struct MarginState {
    double shortfall = 0.0;  // Sigma_i: cash needed to restore ratio w
    double excess = 0.0;     // L_i = cash - Sigma_i; a call fires when L_i <= 0
};

/// Day-i margin arithmetic: Sigma_i = w*P0*(1+R)^i - (1+delta)*P_i and
/// L_i = cash_i - Sigma_i.
MarginState margins_at(const LoanSpec& spec, double w, int i, double price_i, double cash_i);

/// Outcome when the buyer never answers the margin call and the broker
/// liquidates one day after it fires (or at T, whichever is sooner).
struct DefaultScenario {
    std::optional<int> tau;       // first day with L <= 0
    std::optional<int> tau_star;  // liquidation day min(tau + 1, T)
    double default_return = 0.0;  // broker P&L at liquidation (at T if no call)
    bool negative = false;
};

/// Walks the path day by day with untouched collateral. `path` holds
/// P_1..P_T. The return is Q0*(1+r)^t + (1+delta)*P_t - P0*(1+R)^t evaluated
/// at t = tau_star, or at T when no call ever fires (negative = false then).
DefaultScenario simulate_default_scenario(const LoanSpec& spec, double w,
                                          std::span<const double> path);

/// Outcome when the buyer answers every call with fresh cash restoring the
/// ratio to `system.topup_target`.
struct TopupScenario {
    std::vector<int> call_days;
    std::vector<double> topups;  // aligned with call_days; clamped at 0
    int n_calls = 0;
    int clamped_topups = 0;  // calls whose computed top-up was negative
    double cost = 0.0;       // capital employed: terminal cash plus delta * P_T
};

/// Day order: cash accrues at r, margins are evaluated, and a call (L <= 0)
/// is topped up the same day to cash = target*P0*(1+R)^i - (1+delta)*P_i.
/// Cost counts Q0 and every top-up compounded to T, plus the collateral stock
/// leg valued at its T price.
TopupScenario simulate_topup_scenario(const LoanSpec& spec, const MarginSystem& system,
                                      std::span<const double> path);

}  // namespace marginrisk
