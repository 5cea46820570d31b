#pragma once

#include "wmc/core.hpp"
#include "wmc/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wmc {

/// One draw of the observation operator: X = sqrt(d_r d_c) * sign * e_row e_col^T.
struct SampleIndex {
    Index row = 0;
    Index col = 0;
    int sign = 1;

    bool operator==(const SampleIndex &) const = default;
};

enum class NoiseModel { gaussian, laplace };

inline std::string to_string(NoiseModel m) { return m == NoiseModel::gaussian ? "gaussian" : "laplace"; }

inline NoiseModel parse_noise_model(const std::string &s) {
    if (s == "gaussian")
        return NoiseModel::gaussian;
    if (s == "laplace")
        return NoiseModel::laplace;
    throw std::invalid_argument("unknown noise model '" + s + "' (expected gaussian or laplace)");
}

struct ObservationSet {
    std::vector<SampleIndex> indices;
    Vector responses;
    double noise_level = 0.0;
    Index rows = 0;
    Index cols = 0;
    WeightPair weights = WeightPair::uniform(1, 1);
    std::uint64_t seed = 0;
    NoiseModel noise = NoiseModel::gaussian;

    std::size_t size() const { return indices.size(); }

    void validate() const {
        require(!indices.empty(), "ObservationSet: need at least one observation");
        if (Index(indices.size()) != responses.size())
            throw DimensionMismatch("ObservationSet: indices and responses differ in length");
        if (weights.rows() != rows || weights.cols() != cols)
            throw DimensionMismatch("ObservationSet: dims disagree with weights");
        require(noise_level >= 0.0, "ObservationSet: noise level must be nonnegative");
    }
};

namespace detail {

inline void check_index(const SampleIndex &s, Index rows, Index cols) {
    if (s.row < 0 || s.row >= rows || s.col < 0 || s.col >= cols)
        throw std::out_of_range("sample index (" + std::to_string(s.row) + "," + std::to_string(s.col) +
                                ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    if (s.sign != 1 && s.sign != -1)
        throw std::invalid_argument("sample sign must be +1 or -1");
}

/// Inverse-CDF draw from the distribution proportional to w.
inline Index draw_from_cumulative(const std::vector<double> &cumulative, Rng &rng) {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end())
        --it;
    return Index(it - cumulative.begin());
}

inline std::vector<double> cumulative(const Vector &w) {
    std::vector<double> c(std::size_t(w.size()));
    double acc = 0.0;
    for (Index i = 0; i < w.size(); ++i)
        c[std::size_t(i)] = (acc += w(i));
    return c;
}

} // namespace detail

/// n i.i.d. draws: row with probability R_j/d_r, column with probability
/// C_k/d_c, sign uniform on {-1, +1} (or always +1 when random_signs is false).
/// Sampling is with replacement.
inline std::vector<SampleIndex> sample_indices(const WeightPair &w, std::size_t n, Rng &rng,
                                               bool random_signs = true) {
    require(n > 0, "sample_indices: n must be positive");
    const auto row_cdf = detail::cumulative(w.row());
    const auto col_cdf = detail::cumulative(w.col());
    std::vector<SampleIndex> out(n);
    for (auto &s : out) {
        s.row = detail::draw_from_cumulative(row_cdf, rng);
        s.col = detail::draw_from_cumulative(col_cdf, rng);
        s.sign = random_signs ? rng.sign() : 1;
    }
    return out;
}

/// [X_n(Theta)]_i = sqrt(d_r d_c) * sign_i * Theta(row_i, col_i).
inline Vector apply_operator(const std::vector<SampleIndex> &indices, const Matrix &theta) {
    const double scale = std::sqrt(double(theta.rows()) * double(theta.cols()));
    Vector out(Index(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto &s = indices[i];
        detail::check_index(s, theta.rows(), theta.cols());
        out(Index(i)) = scale * s.sign * theta(s.row, s.col);
    }
    return out;
}

/// Adjoint of apply_operator: sum_i v_i sqrt(d_r d_c) sign_i e_row e_col^T.
inline Matrix apply_adjoint(const std::vector<SampleIndex> &indices, const Vector &v, Index rows, Index cols) {
    if (v.size() != Index(indices.size()))
        throw DimensionMismatch("apply_adjoint: vector length differs from number of samples");
    const double scale = std::sqrt(double(rows) * double(cols));
    Matrix out = Matrix::Zero(rows, cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto &s = indices[i];
        detail::check_index(s, rows, cols);
        out(s.row, s.col) += scale * s.sign * v(Index(i));
    }
    return out;
}

inline Vector draw_noise(std::size_t n, double nu, NoiseModel model, Rng &rng) {
    require(nu >= 0.0, "draw_noise: noise level must be nonnegative");
    Vector xi(static_cast<Index>(n));
    for (Index i = 0; i < Index(n); ++i)
        xi(i) = nu * (model == NoiseModel::gaussian ? rng.normal() : rng.laplace());
    return xi;
}

/// y_i = [X_n(Theta*)]_i + nu * xi_i. If noise_out is given it receives nu * xi.
inline ObservationSet observe(const Matrix &theta_star, const WeightPair &w, std::vector<SampleIndex> indices,
                              double nu, NoiseModel model, Rng &rng, Vector *noise_out = nullptr) {
    w.check_dims(theta_star, "observe");
    require(!indices.empty(), "observe: need at least one sample index");
    ObservationSet obs;
    obs.responses = apply_operator(indices, theta_star);
    const Vector noise = draw_noise(indices.size(), nu, model, rng);
    obs.responses += noise;
    if (noise_out)
        *noise_out = noise;
    obs.indices = std::move(indices);
    obs.noise_level = nu;
    obs.rows = theta_star.rows();
    obs.cols = theta_star.cols();
    obs.weights = w;
    obs.noise = model;
    return obs;
}

/// Samples indices and observations from a single seeded stream.
inline ObservationSet simulate_observations(const Matrix &theta_star, const WeightPair &w, std::size_t n,
                                            double nu, NoiseModel model, std::uint64_t seed,
                                            bool random_signs = true, Vector *noise_out = nullptr) {
    Rng rng(seed);
    auto idx = sample_indices(w, n, rng, random_signs);
    ObservationSet obs = observe(theta_star, w, std::move(idx), nu, model, rng, noise_out);
    obs.seed = seed;
    return obs;
}

/// The observation operator expressed in Gamma = sqrt(R) Theta sqrt(C)
/// coordinates: X~_i = R^{-1/2} X_i C^{-1/2}, so that apply(to_gamma(Theta))
/// equals apply_operator(Theta).
class GammaOperator {
  public:
    GammaOperator(const std::vector<SampleIndex> &indices, const WeightPair &w)
        : rows_(w.rows()), cols_(w.cols()) {
        const double scale = std::sqrt(double(rows_) * double(cols_));
        entries_.reserve(indices.size());
        for (const auto &s : indices) {
            detail::check_index(s, rows_, cols_);
            entries_.push_back({s.row, s.col, scale * s.sign / (w.sqrt_row()(s.row) * w.sqrt_col()(s.col))});
        }
    }

    explicit GammaOperator(const ObservationSet &obs) : GammaOperator(obs.indices, obs.weights) {}

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    std::size_t size() const { return entries_.size(); }

    Vector apply(const Matrix &gamma) const {
        if (gamma.rows() != rows_ || gamma.cols() != cols_)
            throw DimensionMismatch("GammaOperator::apply: dimension mismatch");
        Vector out(Index(entries_.size()));
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto &e = entries_[i];
            out(Index(i)) = e.factor * gamma(e.row, e.col);
        }
        return out;
    }

    Matrix adjoint(const Vector &v) const {
        if (v.size() != Index(entries_.size()))
            throw DimensionMismatch("GammaOperator::adjoint: length mismatch");
        Matrix out = Matrix::Zero(rows_, cols_);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto &e = entries_[i];
            out(e.row, e.col) += e.factor * v(Index(i));
        }
        return out;
    }

    /// Largest eigenvalue of (1/n) X'^* X', which is diagonal in the entry
    /// basis: max over cells of (sum of factor^2 at that cell) / n.
    double lipschitz() const {
        Matrix diag = Matrix::Zero(rows_, cols_);
        for (const auto &e : entries_)
            diag(e.row, e.col) += e.factor * e.factor;
        return diag.maxCoeff() / double(entries_.size());
    }

  private:
    struct Entry {
        Index row;
        Index col;
        double factor;
    };
    Index rows_, cols_;
    std::vector<Entry> entries_;
};

} // namespace wmc
