#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace wmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when matrix, weight, or index dimensions disagree.
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when a decomposition fails or a computation produces non-finite values.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string &what) {
    if (!cond)
        throw std::invalid_argument(what);
}

inline void require_finite(const Matrix &m, const char *who) {
    if (!m.allFinite())
        throw NumericalError(std::string(who) + ": matrix has non-finite entries");
}

/// Diagonal row/column sampling weights R and C.
///
/// R/d_r and C/d_c are probability distributions over rows and columns, so
/// each weight vector must be strictly positive and sum to its own length.
/// The weighted norms of a matrix Theta are the plain norms of
/// sqrt(R) * Theta * sqrt(C).
class WeightPair {
  public:
    WeightPair(Vector row_weights, Vector col_weights)
        : row_(std::move(row_weights)), col_(std::move(col_weights)) {
        validate(row_, "row");
        validate(col_, "column");
        sqrt_row_ = row_.cwiseSqrt();
        sqrt_col_ = col_.cwiseSqrt();
    }

    static WeightPair uniform(Index rows, Index cols) {
        require(rows > 0 && cols > 0, "WeightPair: dimensions must be positive");
        return {Vector::Ones(rows), Vector::Ones(cols)};
    }

    /// Rescales arbitrary positive vectors so that each sums to its length.
    static WeightPair normalized(const Vector &row, const Vector &col) {
        require(row.size() > 0 && col.size() > 0, "WeightPair: empty weight vector");
        require((row.array() > 0).all() && (col.array() > 0).all(),
                "WeightPair: weights must be strictly positive");
        return {row * (double(row.size()) / row.sum()), col * (double(col.size()) / col.sum())};
    }

    Index rows() const { return row_.size(); }
    Index cols() const { return col_.size(); }
    const Vector &row() const { return row_; }
    const Vector &col() const { return col_; }
    const Vector &sqrt_row() const { return sqrt_row_; }
    const Vector &sqrt_col() const { return sqrt_col_; }

    /// The constant L with R_a, C_b >= 1/L for every row and column.
    double l_bound() const {
        const double min_w = std::min(row_.minCoeff(), col_.minCoeff());
        return std::max(1.0, 1.0 / min_w);
    }

    bool is_uniform() const {
        return (row_.array() == 1.0).all() && (col_.array() == 1.0).all();
    }

    void check_dims(const Matrix &m, const char *who) const {
        if (m.rows() != rows() || m.cols() != cols())
            throw DimensionMismatch(std::string(who) + ": matrix is " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()) + " but weights are " +
                                    std::to_string(rows()) + "x" + std::to_string(cols()));
    }

    bool operator==(const WeightPair &o) const { return row_ == o.row_ && col_ == o.col_; }

  private:
    static void validate(const Vector &w, const char *which) {
        const std::string tag = std::string("WeightPair: ") + which + " weights ";
        require(w.size() > 0, tag + "are empty");
        require(w.allFinite(), tag + "must be finite");
        require((w.array() > 0).all(), tag + "must be strictly positive");
        const double n = double(w.size());
        require(std::abs(w.sum() - n) <= 1e-10 * n, tag + "must sum to their count");
    }

    Vector row_, col_, sqrt_row_, sqrt_col_;
};

/// d = (d_r + d_c) / 2, the averaged dimension used by every rate formula.
inline double mean_dim(Index rows, Index cols) { return 0.5 * double(rows + cols); }

} // namespace wmc
