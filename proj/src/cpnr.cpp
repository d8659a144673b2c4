#include "marginrisk/cpnr.hpp"

#include <algorithm>
#include <stdexcept>

namespace marginrisk {

namespace {

// Probabilities assembled from finite sums may drift past [0, 1] by an ulp;
// conditional factors are clamped so survival weights never go negative.
double unit_clamp(double x) { return std::min(1.0, std::max(0.0, x)); }

int count_below(const std::vector<double>& reps, double scale, double threshold) {
    // Largest k (1-based) with scale * reps[k-1] < threshold. The product is
    // monotone in reps, so the qualifying set is a prefix.
    auto it = std::partition_point(reps.begin(), reps.end(),
                                   [&](double q) { return scale * q < threshold; });
    return static_cast<int>(it - reps.begin());
}

double compound(double r, int steps) {
    double f = 1.0;
    for (int i = 0; i < steps; ++i) f *= 1.0 + r;
    return f;
}

}  // namespace

int call_threshold(const StateSpace& space, double P0, double Q0, double delta, double w,
                   double r, int m) {
    return count_below(space.reps, 1.0 + delta, (w * P0 - Q0) * compound(r, m));
}

int loss_threshold(const StateSpace& space, double P0, double Q0, double delta, double r, int t) {
    return count_below(space.reps, 1.0 + delta, (P0 - Q0) * compound(r, t));
}

CpnrEvaluator::CpnrEvaluator(const TransitionModel& model, int initial_state, double P0,
                             double r, int horizon)
    : model_(&model), h_(initial_state - 1), P0_(P0), r_(r), T_(horizon),
      n_(model.state_space().num_states()) {
    if (initial_state < 1 || initial_state > n_)
        throw InputError("initial state out of range");
    if (horizon < 1) throw InputError("horizon must be at least one day");
    if (P0 <= 0.0) throw InputError("P0 must be positive");

    const Matrix& one = model.one_step();

    // prefix(i, y) = sum_{j <= y} p_ij(1), the mass state i sends into the
    // bottom y states in one step.
    Matrix prefix(n_, n_ + 1);
    for (int i = 0; i < n_; ++i) {
        prefix(i, 0) = 0.0;
        for (int y = 1; y <= n_; ++y) prefix(i, y) = prefix(i, y - 1) + one(i, y - 1);
    }

    row_prefix_.reserve(T_);
    row_suffix_.reserve(T_);
    call_num_.reserve(T_);
    loss_num_.reserve(T_);
    for (int s = 1; s <= T_; ++s) {
        const Matrix& Ps = model.n_step(s);
        const auto u = Ps.row(h_);

        Vector rp(n_ + 1), rs(n_ + 1);
        rp(0) = 0.0;
        for (int k = 1; k <= n_; ++k) rp(k) = rp(k - 1) + u(k - 1);
        rs(n_) = 0.0;
        for (int k = n_ - 1; k >= 0; --k) rs(k) = rs(k + 1) + u(k);

        // call_num(x, y) = sum over states i > x of u_i * prefix(i, y):
        // the day-(s+1) first-call numerator for survivors above x.
        Matrix cn = Matrix::Zero(n_ + 1, n_ + 1);
        for (int x = n_ - 1; x >= 0; --x)
            cn.row(x) = cn.row(x + 1) + u(x) * prefix.row(x);

        // loss_num(y, z) = sum over states j <= y of u_j * prefix(j, z):
        // the mass on call at day s that falls into the bottom z states next day.
        Matrix ln = Matrix::Zero(n_ + 1, n_ + 1);
        for (int y = 1; y <= n_; ++y)
            ln.row(y) = ln.row(y - 1) + u(y - 1) * prefix.row(y - 1);

        row_prefix_.push_back(std::move(rp));
        row_suffix_.push_back(std::move(rs));
        call_num_.push_back(std::move(cn));
        loss_num_.push_back(std::move(ln));
    }
}

CpnrResult CpnrEvaluator::evaluate(double Q0, double delta, double w) const {
    if (delta <= -1.0) throw InputError("delta must exceed -1");

    CpnrResult out;
    out.call_thresholds.resize(T_);
    out.loss_thresholds.resize(T_);
    const auto& reps = model_->state_space().reps;
    {
        double factor = 1.0;
        for (int m = 1; m <= T_; ++m) {
            factor *= 1.0 + r_;
            out.call_thresholds[m - 1] = count_below(reps, 1.0 + delta, (w * P0_ - Q0) * factor);
            out.loss_thresholds[m - 1] = count_below(reps, 1.0 + delta, (P0_ - Q0) * factor);
        }
    }
    const auto k = [&](int m) { return out.call_thresholds[m - 1]; };
    const auto a = [&](int t) { return out.loss_thresholds[t - 1]; };

    // First-call probabilities via the one-day-memory survival product:
    // Prob(C_t) = Prob(no call through t-1) * Prob(call at t | no call at t-1),
    // where the conditional is taken against the unconditional t-1 step
    // distribution of the chain. A conditional with zero denominator
    // contributes zero and truncates the remaining days; a saturated call set
    // (k_m = n) zeroes the survival weight.
    out.per_day.resize(T_);
    double surv = 1.0;
    bool truncated = false;
    for (int t = 1; t <= T_; ++t) {
        double c_t = 0.0;
        double call_factor = 0.0;
        if (!truncated) {
            if (t == 1) {
                call_factor = unit_clamp(row_prefix_[0](k(1)));
                c_t = call_factor;
            } else {
                const double denom = row_suffix_[t - 2](k(t - 1));
                if (denom <= 0.0) {
                    truncated = true;
                } else {
                    call_factor = unit_clamp(call_num_[t - 2](k(t - 1), k(t)) / denom);
                    c_t = surv * call_factor;
                }
            }
        }

        double nc_t = 0.0;
        if (c_t > 0.0) {
            double loss_factor = 0.0;
            if (t < T_) {
                const double denom = row_prefix_[t - 1](k(t));
                if (denom > 0.0)
                    loss_factor = unit_clamp(loss_num_[t - 1](k(t), a(t)) / denom);
            } else {
                const double denom = row_prefix_[T_ - 1](k(T_));
                if (denom > 0.0)
                    loss_factor = unit_clamp(row_prefix_[T_ - 1](a(T_)) / denom);
            }
            nc_t = c_t * loss_factor;
        }

        out.per_day[t - 1] = {t, c_t, nc_t};
        out.prob_call += c_t;
        out.prob_joint_negative += nc_t;

        if (!truncated) {
            const double surv_factor = (k(t) == n_) ? 0.0 : 1.0 - call_factor;
            surv *= surv_factor;
        }
    }

    out.cpnr = out.prob_call > 0.0 ? out.prob_joint_negative / out.prob_call : 0.0;
    return out;
}

CpnrResult cpnr(const CpnrQuery& query) {
    if (query.model == nullptr) throw InputError("query has no model");
    CpnrEvaluator eval(*query.model, query.initial_state, query.P0, query.r, query.horizon);
    return eval.evaluate(query.Q0, query.delta, query.w);
}

CpnrResult prob_margin_call(const CpnrQuery& query) { return cpnr(query); }

CpnrResult prob_joint_negative(const CpnrQuery& query) { return cpnr(query); }

CpnrResult cpnr_first_passage_exact(const CpnrQuery& query) {
    if (query.model == nullptr) throw InputError("query has no model");
    const TransitionModel& model = *query.model;
    const StateSpace& space = model.state_space();
    const int n = space.num_states();
    const int T = query.horizon;
    if (query.initial_state < 1 || query.initial_state > n)
        throw InputError("initial state out of range");
    if (T < 1) throw InputError("horizon must be at least one day");

    CpnrResult out;
    out.call_thresholds.resize(T);
    out.loss_thresholds.resize(T);
    for (int m = 1; m <= T; ++m) {
        out.call_thresholds[m - 1] =
            call_threshold(space, query.P0, query.Q0, query.delta, query.w, query.r, m);
        out.loss_thresholds[m - 1] =
            loss_threshold(space, query.P0, query.Q0, query.delta, query.r, m);
    }
    const auto k = [&](int m) { return out.call_thresholds[m - 1]; };
    const auto a = [&](int t) { return out.loss_thresholds[t - 1]; };

    const Matrix& one = model.one_step();
    // Mass of paths that have not yet triggered a call, by current state.
    Vector alive = Vector::Zero(n);
    alive(query.initial_state - 1) = 1.0;

    out.per_day.resize(T);
    for (int t = 1; t <= T; ++t) {
        Vector next = one.transpose() * alive;
        double c_t = 0.0;
        for (int j = 0; j < k(t); ++j) c_t += next(j);

        double nc_t = 0.0;
        if (t < T) {
            // Liquidation happens the day after the call; the loss set is
            // evaluated at t+1 prices.
            for (int j = 0; j < k(t); ++j) {
                double move_down = 0.0;
                for (int l = 0; l < a(t + 1); ++l) move_down += one(j, l);
                nc_t += next(j) * move_down;
            }
        } else {
            const int cut = std::min(k(T), a(T));
            for (int j = 0; j < cut; ++j) nc_t += next(j);
        }

        out.per_day[t - 1] = {t, c_t, nc_t};
        out.prob_call += c_t;
        out.prob_joint_negative += nc_t;

        for (int j = 0; j < k(t); ++j) next(j) = 0.0;
        alive = next;
    }

    out.cpnr = out.prob_call > 0.0 ? out.prob_joint_negative / out.prob_call : 0.0;
    return out;
}

}  // namespace marginrisk
