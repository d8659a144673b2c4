#include "marginrisk/loan.hpp"

#include "marginrisk/synth.hpp"
#include "marginrisk/types.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace marginrisk;

namespace {

LoanSpec base_spec(int T, double r = 0.0, double R = 0.0) {
    LoanSpec s;
    s.P0 = 10.0;
    s.Q0 = 5.0;
    s.delta = 0.0;
    s.T = T;
    s.r = r;
    s.R = R;
    return s;
}

MarginSystem system_with(double w, double target, double delta = 0.0) {
    MarginSystem sys;
    sys.m = 0.5;
    sys.delta = delta;
    sys.w = w;
    sys.topup_target = target;
    return sys;
}

// Cash trajectory reconstructed from the reported call days and top-ups.
std::vector<double> replay_cash(const LoanSpec& spec, const TopupScenario& scen) {
    std::vector<double> cash(spec.T + 1);
    cash[0] = spec.Q0;
    std::size_t next_call = 0;
    for (int i = 1; i <= spec.T; ++i) {
        cash[i] = cash[i - 1] * (1.0 + spec.r);
        if (next_call < scen.call_days.size() && scen.call_days[next_call] == i) {
            cash[i] += scen.topups[next_call];
            ++next_call;
        }
    }
    return cash;
}

}  // namespace

TEST_CASE("inception ratios and adequacy") {
    CHECK(initial_margin_ratio(0.5, 0.25, 1.0) == 0.75);
    CHECK(initial_margin_ratio(5.0, 0.0, 10.0) == 0.5);
    CHECK_THROWS_AS(initial_margin_ratio(1.0, 0.1, 0.0), InputError);

    CHECK(check_adequacy(0.75, 1.75));   // boundary counts as adequate
    CHECK(check_adequacy(0.75, 1.30));
    CHECK_FALSE(check_adequacy(0.75, 1.76));

    CHECK(stock_proportion(0.5, 0.25, 1.0) == 0.25 / 0.75);
    CHECK(stock_proportion(5.0, 0.0, 10.0) == 0.0);
    CHECK(stock_proportion(0.0, 0.25, 1.0) == 1.0);
    CHECK_THROWS_AS(stock_proportion(0.0, 0.0, 1.0), InputError);
}

TEST_CASE("day margin arithmetic on dyadic inputs is exact") {
    LoanSpec spec;
    spec.P0 = 1.0;
    spec.Q0 = 0.5;
    spec.delta = 0.25;
    spec.T = 4;
    spec.r = 0.0;
    spec.R = 0.0;

    // At inception price, w = m0 + 1 puts the account exactly on the call
    // boundary: shortfall 0.5, excess 0.
    MarginState s = margins_at(spec, 1.75, 0, 1.0, 0.5);
    CHECK(s.shortfall == 0.5);
    CHECK(s.excess == 0.0);

    // Accruing loan: R = 0.5 doubles-and-halves cleanly.
    spec.R = 0.5;
    s = margins_at(spec, 2.0, 2, 1.0, 0.5);
    CHECK(s.shortfall == 2.0 * 2.25 - 1.25);  // w * P0 * 1.5^2 - (1+delta) * P_2
    CHECK(s.excess == 0.5 - s.shortfall);

    CHECK_THROWS(margins_at(spec, 1.5, -1, 1.0, 0.5));
}

TEST_CASE("walk-away outcomes on three-day paths") {
    // P0 = 10, Q0 = 5, w = 1.3: a call fires when the price reaches 8 or
    // below, and the broker sells one day later.
    const LoanSpec spec = base_spec(3);
    const double w = 1.3;

    SUBCASE("call then recovery still liquidates at the post-call price") {
        const std::vector<double> path = {7, 12, 12};
        const DefaultScenario d = simulate_default_scenario(spec, w, path);
        REQUIRE(d.tau.has_value());
        CHECK(*d.tau == 1);
        CHECK(*d.tau_star == 2);
        CHECK(d.default_return == 5.0 + 12.0 - 10.0);
        CHECK_FALSE(d.negative);
    }
    SUBCASE("call then further decline loses money") {
        const std::vector<double> path = {7, 4, 12};
        const DefaultScenario d = simulate_default_scenario(spec, w, path);
        CHECK(*d.tau == 1);
        CHECK(*d.tau_star == 2);
        CHECK(d.default_return == 5.0 + 4.0 - 10.0);
        CHECK(d.negative);
    }
    SUBCASE("no call settles at the horizon and is never flagged negative") {
        const std::vector<double> path = {11, 12, 13};
        const DefaultScenario d = simulate_default_scenario(spec, w, path);
        CHECK_FALSE(d.tau.has_value());
        CHECK_FALSE(d.tau_star.has_value());
        CHECK(d.default_return == 5.0 + 13.0 - 10.0);
        CHECK_FALSE(d.negative);
    }
    SUBCASE("excess exactly zero fires the call") {
        const std::vector<double> path = {8, 12, 12};
        const DefaultScenario d = simulate_default_scenario(spec, w, path);
        CHECK(*d.tau == 1);
    }
    SUBCASE("zero return counts as negative") {
        const std::vector<double> path = {7, 5, 12};
        const DefaultScenario d = simulate_default_scenario(spec, w, path);
        CHECK(d.default_return == 0.0);
        CHECK(d.negative);
    }
    SUBCASE("call on the final day liquidates the same day") {
        const std::vector<double> path = {11, 12, 0.5};
        const DefaultScenario d = simulate_default_scenario(spec, w, path);
        CHECK(*d.tau == 3);
        CHECK(*d.tau_star == 3);
        CHECK(d.default_return == 5.0 + 0.5 - 10.0);
        CHECK(d.negative);
    }
    SUBCASE("path length must match the horizon") {
        CHECK_THROWS(simulate_default_scenario(spec, w, std::vector<double>{7, 12}));
    }
}

TEST_CASE("liquidation lag is one day capped at the horizon") {
    SplitMix64 rng(1234);
    const LoanSpec spec = base_spec(6, 0.0002, 0.0004);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> path(spec.T);
        for (auto& p : path) p = 4.0 + 0.01 * static_cast<double>(rng.below(1200));
        const DefaultScenario d = simulate_default_scenario(spec, 1.3, path);
        if (!d.tau) {
            CHECK_FALSE(d.tau_star.has_value());
            CHECK_FALSE(d.negative);
            continue;
        }
        CHECK(*d.tau_star == std::min(*d.tau + 1, spec.T));
        const int lag = *d.tau_star - *d.tau;
        CHECK(lag >= 0);
        CHECK(lag <= 1);
        if (*d.tau < spec.T) CHECK(lag == 1);
    }
}

TEST_CASE("call trigger matches its price-threshold form when rates agree") {
    // With r = R the excess test L_i <= 0 collapses to comparing the
    // collateral stock value against (w*P0 - Q0) compounded to day i.
    SplitMix64 rng(777);
    for (int trial = 0; trial < 200; ++trial) {
        LoanSpec spec = base_spec(8, 0.0005, 0.0005);
        spec.Q0 = 4.0 + 0.01 * static_cast<double>(rng.below(300));
        spec.delta = 0.25;
        const double w = 1.2 + 0.01 * static_cast<double>(rng.below(30));

        std::vector<double> path(spec.T);
        std::vector<double> threshold(spec.T + 1);
        threshold[0] = w * spec.P0 - spec.Q0;
        for (int i = 1; i <= spec.T; ++i) threshold[i] = threshold[i - 1] * (1.0 + spec.r);
        for (int i = 0; i < spec.T; ++i) {
            path[i] = 3.0 + 0.01 * static_cast<double>(rng.below(1400));
            // keep prices clear of the exact boundary so float noise cannot
            // flip the comparison between the two forms
            while (std::abs((1.0 + spec.delta) * path[i] - threshold[i + 1]) < 1e-6)
                path[i] += 0.005;
        }

        const DefaultScenario d = simulate_default_scenario(spec, w, path);
        std::optional<int> expect;
        for (int i = 1; i <= spec.T; ++i) {
            if ((1.0 + spec.delta) * path[i - 1] <= threshold[i]) {
                expect = i;
                break;
            }
        }
        CHECK(d.tau == expect);
    }
}

TEST_CASE("top-up walk on a two-day flat-decline path") {
    // P0 = 10, Q0 = 5, w = 1.3, price sits at 7 both days.
    const LoanSpec spec = base_spec(2);
    const std::vector<double> path = {7, 7};

    SUBCASE("restoring to 1.5 clears the account for day two") {
        const TopupScenario scen =
            simulate_topup_scenario(spec, system_with(1.3, 1.5), path);
        CHECK(scen.n_calls == 1);
        CHECK(scen.call_days == std::vector<int>{1});
        CHECK(scen.topups.size() == 1);
        CHECK(scen.topups[0] == 15.0 - (5.0 + 7.0));
        CHECK(scen.cost == 8.0);
        CHECK(scen.clamped_topups == 0);
    }
    SUBCASE("restoring only to w leaves the account on the boundary") {
        const TopupScenario scen =
            simulate_topup_scenario(spec, system_with(1.3, 1.3), path);
        REQUIRE(scen.n_calls == 2);  // boundary excess 0 re-fires on day two
        CHECK(scen.call_days == std::vector<int>{1, 2});
        CHECK(scen.topups[0] == doctest::Approx(1.0));
        CHECK(scen.topups[1] == doctest::Approx(0.0));
        CHECK(scen.cost == doctest::Approx(6.0));
    }
}

TEST_CASE("top-ups restore the account ratio to the target") {
    SplitMix64 rng(5150);
    for (int trial = 0; trial < 200; ++trial) {
        LoanSpec spec = base_spec(10, 0.0003, 0.0003);
        spec.Q0 = 3.0 + 0.01 * static_cast<double>(rng.below(400));
        spec.delta = 0.01 * static_cast<double>(rng.below(60));
        MarginSystem sys = system_with(1.2 + 0.01 * static_cast<double>(rng.below(40)), 0.0,
                                       spec.delta);
        sys.topup_target = sys.w + 0.01 * static_cast<double>(rng.below(40));

        std::vector<double> path(spec.T);
        for (auto& p : path) p = 3.0 + 0.01 * static_cast<double>(rng.below(1400));

        const TopupScenario scen = simulate_topup_scenario(spec, sys, path);
        REQUIRE(scen.call_days.size() == scen.topups.size());
        CHECK(scen.n_calls == static_cast<int>(scen.call_days.size()));
        CHECK(std::is_sorted(scen.call_days.begin(), scen.call_days.end()));

        const std::vector<double> cash = replay_cash(spec, scen);
        double loan_value = spec.P0;
        std::size_t idx = 0;
        for (int i = 1; i <= spec.T; ++i) {
            loan_value *= 1.0 + spec.R;
            if (idx < scen.call_days.size() && scen.call_days[idx] == i) {
                if (scen.topups[idx] > 0.0) {
                    const double ratio =
                        (cash[i] + (1.0 + spec.delta) * path[i - 1]) / loan_value;
                    CHECK(ratio == doctest::Approx(sys.topup_target).epsilon(1e-12));
                }
                ++idx;
            }
        }
        CHECK(scen.cost ==
              doctest::Approx(cash[spec.T] + spec.delta * path[spec.T - 1]).epsilon(1e-12));
        for (double a : scen.topups) CHECK(a >= 0.0);
    }
}

TEST_CASE("cost of restoring above w is never below restoring exactly to w") {
    SplitMix64 rng(31337);
    for (int trial = 0; trial < 300; ++trial) {
        LoanSpec spec = base_spec(8, 0.0, 0.0);
        if (trial % 2 == 0) spec.r = spec.R = 0.0004;
        spec.Q0 = 3.0 + 0.01 * static_cast<double>(rng.below(400));
        spec.delta = 0.01 * static_cast<double>(rng.below(50));
        const double w = 1.2 + 0.01 * static_cast<double>(rng.below(40));

        std::vector<double> path(spec.T);
        for (auto& p : path) p = 3.0 + 0.01 * static_cast<double>(rng.below(1400));

        const TopupScenario at_w =
            simulate_topup_scenario(spec, system_with(w, w, spec.delta), path);
        for (double bump : {0.02, 0.1, 0.3}) {
            const TopupScenario above =
                simulate_topup_scenario(spec, system_with(w, w + bump, spec.delta), path);
            CHECK(above.cost >= at_w.cost - 1e-9);
        }
    }
}

TEST_CASE("cost is not monotone between two targets above w") {
    // A deeper restore can pre-empt a later call that a shallower restore
    // walks into, so ordering two targets by size says nothing about cost.
    const LoanSpec spec = base_spec(3);
    const std::vector<double> path = {7, 5.2, 20};
    const TopupScenario lo = simulate_topup_scenario(spec, system_with(1.3, 1.45), path);
    const TopupScenario hi = simulate_topup_scenario(spec, system_with(1.3, 1.5), path);
    CHECK(lo.cost == doctest::Approx(9.3));
    CHECK(hi.cost == doctest::Approx(8.0));
    CHECK(lo.cost > hi.cost);
}
