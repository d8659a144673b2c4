#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace marginrisk {

// Dense algebra aliases. The library computes in double throughout; the
// templates exist so helpers stay usable with other scalars in tests.
template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixT<double>;
using Vector = VectorT<double>;
using RowVector = RowVectorT<double>;

/// Raised for unreadable or malformed user input (files, CLI values).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// True if every entry of `m` lies in [-tol, 1 + tol] and every row sums to 1
/// within `tol`.
template <class Derived>
bool is_row_stochastic(const Eigen::MatrixBase<Derived>& m, double tol = 1e-12) {
    using Scalar = typename Derived::Scalar;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Scalar row_sum = 0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const Scalar v = m(i, j);
            if (v < -tol || v > Scalar(1) + tol) return false;
            row_sum += v;
        }
        if (std::abs(row_sum - Scalar(1)) > tol) return false;
    }
    return true;
}

}  // namespace marginrisk
