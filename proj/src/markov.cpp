#include "marginrisk/markov.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace marginrisk {

StateSpace build_state_space(std::span<const double> closes, int group_size) {
    if (group_size < 1) throw InputError("group size must be positive");
    if (closes.empty()) throw InputError("cannot build a state space from an empty window");

    std::set<double> distinct(closes.begin(), closes.end());

    StateSpace space;
    space.group_size = group_size;
    std::vector<double> group;
    for (double price : distinct) {
        group.push_back(price);
        if (static_cast<int>(group.size()) == group_size) {
            space.reps.push_back(group.front());
            space.members.push_back(std::move(group));
            group.clear();
        }
    }
    if (!group.empty()) {
        space.reps.push_back(group.front());
        space.members.push_back(std::move(group));
    }
    return space;
}

int state_of(const StateSpace& space, double price) {
    const auto& reps = space.reps;
    if (reps.empty()) throw std::logic_error("state space is empty");
    // First rep strictly above the price; the state is the one before it.
    auto it = std::upper_bound(reps.begin(), reps.end(), price);
    if (it == reps.begin()) return 1;  // below q_1: clamp
    return static_cast<int>(it - reps.begin());
}

TransitionModel::TransitionModel(StateSpace space, Matrix one_step, Eigen::MatrixXi counts,
                                 std::vector<int> self_loop_states)
    : space_(std::move(space)),
      one_step_(std::move(one_step)),
      counts_(std::move(counts)),
      self_loop_states_(std::move(self_loop_states)),
      cache_(std::make_unique<PowerCache>()) {
    const int n = space_.num_states();
    if (one_step_.rows() != n || one_step_.cols() != n)
        throw std::logic_error("transition matrix does not match the state space");
    if (!is_row_stochastic(one_step_, 1e-9))
        throw std::logic_error("transition matrix is not row-stochastic");
}

const Matrix& TransitionModel::n_step(int steps) const {
    if (steps < 1) throw std::logic_error("n_step needs steps >= 1");
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto& powers = cache_->powers;
    if (powers.empty()) powers.push_back(one_step_);
    // Fixed association P(k) = P(k-1) * P(1) so cached entries never depend
    // on request order.
    while (static_cast<int>(powers.size()) < steps)
        powers.push_back(powers.back() * one_step_);
    return powers[static_cast<std::size_t>(steps) - 1];
}

TransitionModel estimate_transition_matrix(std::span<const double> closes, StateSpace space) {
    if (closes.size() < 2) throw InputError("need at least two closes to estimate transitions");

    const int n = space.num_states();
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, n);
    for (std::size_t t = 0; t + 1 < closes.size(); ++t) {
        const int i = state_of(space, closes[t]);
        const int j = state_of(space, closes[t + 1]);
        counts(i - 1, j - 1) += 1;
    }

    Matrix one_step = Matrix::Zero(n, n);
    std::vector<int> self_loops;
    for (int i = 0; i < n; ++i) {
        const int row_total = counts.row(i).sum();
        if (row_total == 0) {
            one_step(i, i) = 1.0;  // unvisited source state: hold in place
            self_loops.push_back(i + 1);
            continue;
        }
        for (int j = 0; j < n; ++j)
            one_step(i, j) = static_cast<double>(counts(i, j)) / static_cast<double>(row_total);
    }
    return TransitionModel(std::move(space), std::move(one_step), std::move(counts),
                           std::move(self_loops));
}

}  // namespace marginrisk
