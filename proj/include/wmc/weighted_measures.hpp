#pragma once

#include "wmc/core.hpp"
#include "wmc/linalg.hpp"

#include <optional>

namespace wmc {

/// Gamma = sqrt(R) * Theta * sqrt(C).
inline Matrix to_gamma(const Matrix &theta, const WeightPair &w) {
    w.check_dims(theta, "to_gamma");
    return w.sqrt_row().asDiagonal() * theta * w.sqrt_col().asDiagonal();
}

/// Inverse of to_gamma.
inline Matrix from_gamma(const Matrix &gamma, const WeightPair &w) {
    w.check_dims(gamma, "from_gamma");
    return w.sqrt_row().cwiseInverse().asDiagonal() * gamma * w.sqrt_col().cwiseInverse().asDiagonal();
}

struct MeasureReport {
    double weighted_frobenius = 0.0;
    double weighted_nuclear = 0.0;
    double weighted_linf = 0.0;
    /// Undefined (empty) for the zero matrix.
    std::optional<double> spikiness;
    std::optional<double> rank_measure;
};

/// Weighted Frobenius, nuclear and l_inf norms together with the spikiness
/// ratio sqrt(d_r d_c) |Gamma|_inf / |Gamma|_F and the rank measure
/// |Gamma|_nuc / |Gamma|_F, where Gamma = sqrt(R) Theta sqrt(C).
inline MeasureReport measures(const Matrix &theta, const WeightPair &w) {
    const Matrix gamma = to_gamma(theta, w);
    MeasureReport rep;
    rep.weighted_frobenius = gamma.norm();
    rep.weighted_nuclear = singular_values(gamma).sum();
    rep.weighted_linf = gamma.size() ? gamma.cwiseAbs().maxCoeff() : 0.0;
    if (rep.weighted_frobenius > 0.0) {
        const double root_dims = std::sqrt(double(theta.rows()) * double(theta.cols()));
        rep.spikiness = root_dims * rep.weighted_linf / rep.weighted_frobenius;
        rep.rank_measure = rep.weighted_nuclear / rep.weighted_frobenius;
    }
    return rep;
}

inline double spikiness(const Matrix &theta, const WeightPair &w) {
    auto s = measures(theta, w).spikiness;
    if (!s)
        throw std::domain_error("spikiness: undefined for the zero matrix");
    return *s;
}

struct ConstraintMembership {
    bool member = false;
    double product = 0.0;   // spikiness * rank_measure
    double threshold = 0.0; // (1/c0) sqrt(n / (d log d))
    double margin = 0.0;    // threshold - product
};

/// Membership of delta in the RSC constraint set
///   { spikiness(delta) * rank_measure(delta) <= (1/c0) sqrt(n / (d log d)) }
/// with d = (d_r + d_c)/2. The boundary counts as inside, up to a relative
/// slack of 1e-12 on the threshold for rounding in the SVD.
inline ConstraintMembership constraint_membership(const Matrix &delta, const WeightPair &w, long long n,
                                                  double c0 = 1.0) {
    require(n > 0, "constraint_membership: n must be positive");
    require(c0 > 0, "constraint_membership: c0 must be positive");
    const MeasureReport rep = measures(delta, w);
    if (!rep.spikiness)
        throw std::domain_error("constraint_membership: zero matrix");
    const double d = mean_dim(delta.rows(), delta.cols());
    require(d > 1.0, "constraint_membership: need d > 1 so that log d > 0");
    ConstraintMembership out;
    out.product = *rep.spikiness * *rep.rank_measure;
    out.threshold = std::sqrt(double(n) / (d * std::log(d))) / c0;
    out.margin = out.threshold - out.product;
    out.member = out.margin >= -1e-12 * out.threshold;
    return out;
}

struct LqMembership {
    bool member = false;
    double value = 0.0; // sum_j sigma_j(Gamma)^q
};

/// sum_j sigma_j(sqrt(R) Theta sqrt(C))^q against the radius rho_q. For q = 0
/// this counts singular values above kRankTol * sigma_max (0^0 = 0).
inline LqMembership lq_membership(const Matrix &theta, const WeightPair &w, double q, double rho_q) {
    require(q >= 0.0 && q <= 1.0, "lq_membership: q must lie in [0, 1]");
    const Vector s = singular_values(to_gamma(theta, w));
    LqMembership out;
    if (s.size() && s(0) > 0.0) {
        if (q == 0.0) {
            out.value = double(numerical_rank(s));
        } else {
            for (double v : s)
                if (v > 0.0)
                    out.value += std::pow(v, q);
        }
    }
    out.member = out.value <= rho_q;
    return out;
}

} // namespace wmc
