// Verification-only reimplementation of the CPNR recursion. Everything here
// is deliberately naive: plain vectors, freshly recomputed products, explicit
// double sums. Keep it free of the production evaluator's internals so the
// two paths stay independent checks on each other.

#include "marginrisk/cpnr.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace marginrisk {

namespace {

using Table = std::vector<std::vector<double>>;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

CpnrResult cpnr_oracle(const CpnrQuery& query) {
    if (query.model == nullptr) throw InputError("query has no model");
    const StateSpace& space = query.model->state_space();
    const int n = space.num_states();
    const int T = query.horizon;
    if (n > 64 || T > 30)
        throw std::invalid_argument("cpnr_oracle is sized for n <= 64 and T <= 30");
    if (query.initial_state < 1 || query.initial_state > n)
        throw InputError("initial state out of range");
    if (T < 1) throw InputError("horizon must be at least one day");
    const int h = query.initial_state - 1;

    // One-step matrix and its powers, multiplied out the slow way.
    Table one(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) one[i][j] = query.model->one_step()(i, j);

    std::vector<Table> power(T + 1);
    power[1] = one;
    for (int s = 2; s <= T; ++s) {
        power[s] = Table(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) power[s][i][j] += power[s - 1][i][l] * one[l][j];
    }

    // Thresholds by linear scan; compounding by repeated multiplication.
    std::vector<int> k(T + 1, 0), a(T + 1, 0);
    for (int m = 1; m <= T; ++m) {
        double factor = 1.0;
        for (int i = 0; i < m; ++i) factor *= 1.0 + query.r;
        const double call_cut = (query.w * query.P0 - query.Q0) * factor;
        const double loss_cut = (query.P0 - query.Q0) * factor;
        for (int s = 0; s < n; ++s) {
            if ((1.0 + query.delta) * space.reps[s] < call_cut) k[m] = s + 1;
            if ((1.0 + query.delta) * space.reps[s] < loss_cut) a[m] = s + 1;
        }
    }

    // Prob(D_m | no call at m-1), with day 1 unconditional. Returns false on
    // a zero denominator, which kills every Prob(C_t) with t >= m.
    auto call_factor_at = [&](int m, double& d) {
        if (m == 1) {
            double c1 = 0.0;
            for (int i = 0; i < k[1]; ++i) c1 += power[1][h][i];
            d = clamp01(c1);
            return true;
        }
        double denom = 0.0;
        for (int i = k[m - 1]; i < n; ++i) denom += power[m - 1][h][i];
        if (denom <= 0.0) return false;
        double num = 0.0;
        for (int i = k[m - 1]; i < n; ++i)
            for (int j = 0; j < k[m]; ++j) num += power[m - 1][h][i] * one[i][j];
        d = clamp01(num / denom);
        return true;
    };

    CpnrResult out;
    out.call_thresholds.assign(k.begin() + 1, k.end());
    out.loss_thresholds.assign(a.begin() + 1, a.end());
    out.per_day.resize(T);

    for (int t = 1; t <= T; ++t) {
        // Survival product rebuilt from scratch for each day.
        double c_t = 0.0;
        bool dead = false;
        double weight = 1.0;
        for (int m = 1; m <= t; ++m) {
            double d = 0.0;
            if (!call_factor_at(m, d)) {
                dead = true;
                break;
            }
            if (m == t) {
                c_t = weight * d;
            } else {
                weight *= (k[m] == n) ? 0.0 : 1.0 - d;
            }
        }
        if (dead) c_t = 0.0;

        double nc_t = 0.0;
        if (c_t > 0.0) {
            if (t < T) {
                double denom = 0.0;
                for (int j = 0; j < k[t]; ++j) denom += power[t][h][j];
                if (denom > 0.0) {
                    double num = 0.0;
                    for (int j = 0; j < k[t]; ++j)
                        for (int l = 0; l < a[t]; ++l) num += power[t][h][j] * one[j][l];
                    nc_t = c_t * clamp01(num / denom);
                }
            } else {
                double denom = 0.0;
                for (int l = 0; l < k[T]; ++l) denom += power[T][h][l];
                if (denom > 0.0) {
                    double num = 0.0;
                    for (int j = 0; j < a[T]; ++j) num += power[T][h][j];
                    nc_t = c_t * clamp01(num / denom);
                }
            }
        }

        out.per_day[t - 1] = {t, c_t, nc_t};
        out.prob_call += c_t;
        out.prob_joint_negative += nc_t;
    }

    out.cpnr = out.prob_call > 0.0 ? out.prob_joint_negative / out.prob_call : 0.0;
    return out;
}

}  // namespace marginrisk
