#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mlad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Row-major storage for per-coordinate batches (one row per model weight).
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error taxonomy, mapped to CLI exit codes (usage 2, data/model 3, numerical 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UsageError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};

// Posterior floor applied before log in the cross-entropy loss and,
// symmetrically, in its gradient (clamped frames contribute zero gradient).
inline constexpr double kPosteriorFloor = 1e-12;

// Stable logistic: evaluates exp only on the non-positive side.
inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logistic_deriv_from_value(double s) { return s * (1.0 - s); }

// In-place row-wise softmax with max subtraction.
inline void softmax_rows(Matrix& logits) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        const double m = row.maxCoeff();
        row = (row.array() - m).exp();
        row /= row.sum();
    }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace mlad
