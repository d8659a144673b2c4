#pragma once

#include "marginrisk/markov.hpp"
#include "marginrisk/types.hpp"

#include <vector>

namespace marginrisk {

/// One CPNR evaluation: loan terms against a fitted price chain. The single
/// rate `r` compounds both the cash collateral and the loan (the recursion is
/// derived under equal rates).
struct CpnrQuery {
    const TransitionModel* model = nullptr;
    int initial_state = 1;  // h = state_of(P0), 1-based
    double P0 = 0.0;
    double Q0 = 0.0;
    double delta = 0.0;
    double w = 0.0;
    double r = 0.0;
    int horizon = 0;  // T
};

struct DayProbability {
    int day = 0;
    double prob_call = 0.0;            // Prob(C_t): first call on day t
    double prob_joint_negative = 0.0;  // Prob(NC_t): first call on day t and negative return
};

struct CpnrResult {
    double prob_call = 0.0;
    double prob_joint_negative = 0.0;
    double cpnr = 0.0;  // Prob(NC) / Prob(C), 0 when Prob(C) = 0
    std::vector<DayProbability> per_day;
    std::vector<int> call_thresholds;  // k_m for m = 1..T (0 = no state qualifies)
    std::vector<int> loss_thresholds;  // a_t for t = 1..T
};

/// Largest k with (1+delta) * q_k < (w*P0 - Q0) * (1+r)^m, or 0 if none.
/// States at or below k_m put the account on call on day m. The compounding
/// factor is accumulated by repeated multiplication, never pow().
int call_threshold(const StateSpace& space, double P0, double Q0, double delta, double w,
                   double r, int m);

/// Largest k with (1+delta) * q_k < (P0 - Q0) * (1+r)^t, or 0 if none.
/// States at or below a_t make the liquidation proceeds fall short.
int loss_threshold(const StateSpace& space, double P0, double Q0, double delta, double r, int t);

/// Precomputed tables for one (model, initial state, P0, r, horizon) context,
/// letting evaluate() answer many (Q0, delta, w) queries in O(T) each. Public
/// cpnr() routes through this class, so single queries and grid sweeps follow
/// bit-identical arithmetic.
class CpnrEvaluator {
public:
    CpnrEvaluator(const TransitionModel& model, int initial_state, double P0, double r,
                  int horizon);

    CpnrResult evaluate(double Q0, double delta, double w) const;

    const StateSpace& state_space() const { return model_->state_space(); }

private:
    const TransitionModel* model_;
    int h_;  // 0-based row of the initial state
    double P0_, r_;
    int T_;
    int n_;
    // Per step s = 1..T (index s-1): the h-row of the s-step matrix and its
    // ascending prefix sums; descending suffix sums; and numerator tables for
    // the call and loss conditionals (see cpnr.cpp).
    std::vector<Vector> row_prefix_;   // [s-1](k): sum_{i<=k} p_hi(s), k = 0..n
    std::vector<Vector> row_suffix_;   // [s-1](k): sum_{i>k}  p_hi(s), k = 0..n
    std::vector<Matrix> call_num_;     // [s-1](x,y): sum_{i>x} p_hi(s) * sum_{j<=y} p_ij(1)
    std::vector<Matrix> loss_num_;     // [s-1](y,z): sum_{j<=y} p_hj(s) * sum_{l<=z} p_jl(1)
};

/// Probability of a first margin call on each day 1..T and in total, by the
/// one-day-memory survival recursion. Thin wrapper over cpnr().
CpnrResult prob_margin_call(const CpnrQuery& query);

/// Joint probability of first call on day t and negative post-liquidation
/// return. Thin wrapper over cpnr().
CpnrResult prob_joint_negative(const CpnrQuery& query);

/// Conditional probability of negative return given a margin call.
CpnrResult cpnr(const CpnrQuery& query);

/// Independent nested-loop evaluation of the same recursion, for verification
/// only. Guarded to n <= 64 states and T <= 30; shares nothing with the
/// production path beyond the public types.
CpnrResult cpnr_oracle(const CpnrQuery& query);

/// Diagnostic alternative: exact first-passage probabilities on the chain
/// (conditioning on full no-call history instead of one-day memory, and
/// evaluating the loss at the actual liquidation day t+1). Not the
/// production figure; emitted alongside it for comparison.
CpnrResult cpnr_first_passage_exact(const CpnrQuery& query);

}  // namespace marginrisk
