#pragma once

#include "marginrisk/types.hpp"

#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace marginrisk {

/// Price states built from a history window: the distinct closes are sorted
/// ascending and chunked into groups of `group_size` (the last group may be
/// short). State k is represented by q_k, the smallest price in the group.
///
/// States are indexed 1..n throughout the library; 0 is reserved to mean
/// "no state" in threshold arithmetic.
struct StateSpace {
    std::vector<double> reps;                  // q_1 < q_2 < ... < q_n
    std::vector<std::vector<double>> members;  // distinct prices per state, ascending
    int group_size = 0;

    int num_states() const { return static_cast<int>(reps.size()); }
};

StateSpace build_state_space(std::span<const double> closes, int group_size);

/// Maps a price to its state: the k with q_k <= price < q_{k+1}. Prices below
/// q_1 clamp to 1 and prices at or above q_n map to n.
int state_of(const StateSpace& space, double price);

/// One-step transition probabilities estimated from a window, plus a memoized
/// ladder of matrix powers for multi-day horizons.
class TransitionModel {
public:
    TransitionModel(StateSpace space, Matrix one_step, Eigen::MatrixXi counts = {},
                    std::vector<int> self_loop_states = {});

    const StateSpace& state_space() const { return space_; }
    const Matrix& one_step() const { return one_step_; }

    /// Raw transition counts f_ij from the estimation window (empty for
    /// models built directly from a matrix).
    const Eigen::MatrixXi& transition_counts() const { return counts_; }

    /// States that never appeared as a transition source in the window; their
    /// rows were set to a self-loop to keep the matrix row-stochastic.
    const std::vector<int>& self_loop_states() const { return self_loop_states_; }

    /// The `steps`-step matrix, computed as repeated right-multiplication by
    /// the one-step matrix. Memoized; safe to call from several threads.
    const Matrix& n_step(int steps) const;

private:
    StateSpace space_;
    Matrix one_step_;
    Eigen::MatrixXi counts_;
    std::vector<int> self_loop_states_;

    struct PowerCache {
        std::deque<Matrix> powers;  // powers[k] holds the (k+1)-step matrix
        std::mutex mutex;
    };
    std::unique_ptr<PowerCache> cache_;
};

/// Estimates transition frequencies from consecutive pairs in the window:
/// p_ij = f_ij / f_i where f_i counts days in state i (the final day, which
/// starts no transition, is excluded). States with f_i = 0 get a unit
/// self-loop and are reported via self_loop_states().
TransitionModel estimate_transition_matrix(std::span<const double> closes, StateSpace space);

}  // namespace marginrisk
