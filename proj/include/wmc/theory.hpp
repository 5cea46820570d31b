#pragma once

#include "wmc/core.hpp"
#include "wmc/linalg.hpp"
#include "wmc/packing.hpp"
#include "wmc/rng.hpp"
#include "wmc/sampling.hpp"
#include "wmc/weighted_measures.hpp"

#include <map>
#include <string>
#include <vector>

namespace wmc {

enum class RateKind { exact_rank, lq_ball, minimax_floor, theorem2 };

inline std::string to_string(RateKind k) {
    switch (k) {
    case RateKind::exact_rank:
        return "exact_rank";
    case RateKind::lq_ball:
        return "lq_ball";
    case RateKind::minimax_floor:
        return "minimax_floor";
    case RateKind::theorem2:
        return "theorem2";
    }
    return "unknown";
}

struct RatePrediction {
    RateKind kind = RateKind::exact_rank;
    double value = 0.0;
    std::map<std::string, double> components;
};

/// Sum of singular values of gamma beyond the r largest.
inline double tail_sum(const Matrix &gamma, Index r) {
    const Vector s = singular_values(gamma);
    return r < s.size() ? s.tail(s.size() - r).sum() : 0.0;
}

/// Right-hand side of the general error bound
///   c1 alpha* lambda* [ sqrt(r) |Delta~|_w(F) + sum_{j>r} sigma_j(sqrt(R) Theta* sqrt(C)) ]
/// split into its estimation and approximation components.
inline RatePrediction theorem2_bound(const Matrix &delta_tilde, const Matrix &theta_star, const WeightPair &w,
                                     double lambda_star, Index r, double alpha_star, double c1) {
    w.check_dims(delta_tilde, "theorem2_bound");
    w.check_dims(theta_star, "theorem2_bound");
    require(r >= 1 && r <= theta_star.rows(), "theorem2_bound: r must lie in [1, d_r]");
    const double lead = c1 * alpha_star * lambda_star;
    RatePrediction out;
    out.kind = RateKind::theorem2;
    const double est = lead * std::sqrt(double(r)) * to_gamma(delta_tilde, w).norm();
    const double approx = lead * tail_sum(to_gamma(theta_star, w), r);
    out.components = {{"estimation", est}, {"approximation", approx}};
    out.value = est + approx;
    return out;
}

enum class CorollaryKind { exact, lq };

/// exact: c max(nu^2,1) alpha*^2 r d log d / n
/// lq:    c rho_q (max(nu^2,1) alpha*^2 d log d / n)^(1 - q/2)
inline RatePrediction corollary_rate(CorollaryKind kind, double nu, double alpha_star, double r_or_rho, double q,
                                     double d, long long n, double c) {
    require(n > 0, "corollary_rate: n must be positive");
    require(d > 1.0, "corollary_rate: d must exceed 1");
    const double base = std::max(nu * nu, 1.0) * alpha_star * alpha_star * d * std::log(d) / double(n);
    RatePrediction out;
    if (kind == CorollaryKind::exact) {
        out.kind = RateKind::exact_rank;
        out.value = c * r_or_rho * base;
    } else {
        require(q >= 0.0 && q <= 1.0, "corollary_rate: q must lie in [0, 1]");
        out.kind = RateKind::lq_ball;
        out.value = c * r_or_rho * std::pow(base, 1.0 - q / 2.0);
    }
    out.components = {{"base", base}};
    return out;
}

struct MinimaxPrediction {
    RatePrediction rate;
    int active_branch = 1;        // 1: rho_q (nu^2 d/n)^(1-q/2), 2: nu^2 d^2 / n
    bool key_bound_holds = false; // rho_q <= (nu^2 d / n)^(q/2) d
};

/// Minimax lower bound min{ rho_q (nu^2 d/n)^(1-q/2), nu^2 d^2/n } with c5 = 1.
inline MinimaxPrediction minimax_floor(double rho_q, double q, double nu, double d, long long n) {
    require(d > 0 && n > 0, "minimax_floor: d and n must be positive");
    require(q >= 0.0 && q <= 1.0, "minimax_floor: q must lie in [0, 1]");
    const double ratio = nu * nu * d / double(n);
    const double first = rho_q * std::pow(ratio, 1.0 - q / 2.0);
    const double second = nu * nu * d * d / double(n);
    MinimaxPrediction out;
    out.rate.kind = RateKind::minimax_floor;
    out.rate.components = {{"first_branch", first}, {"second_branch", second}};
    out.active_branch = first <= second ? 1 : 2;
    out.rate.value = std::min(first, second);
    out.key_bound_holds = rho_q <= std::pow(ratio, q / 2.0) * d;
    return out;
}

struct ErrorDecomposition {
    Matrix delta_prime;        // rank <= 2r
    Matrix delta_double_prime; // rows orthogonal to U~, columns orthogonal to V~
    bool degenerate = false;   // sigma_r == sigma_{r+1}; subspace picked by index order
};

/// Splits delta_hat = Delta' + Delta'' with Delta'' = (I - P_U) delta_hat (I - P_V),
/// where U, V span the top-r left/right singular vectors of gamma_star.
inline ErrorDecomposition lemma1_decompose(const Matrix &delta_hat, const Matrix &gamma_star, Index r) {
    if (delta_hat.rows() != gamma_star.rows() || delta_hat.cols() != gamma_star.cols())
        throw DimensionMismatch("lemma1_decompose: shapes differ");
    require(r >= 1 && r <= std::min(gamma_star.rows(), gamma_star.cols()),
            "lemma1_decompose: r must lie in [1, min(d_r, d_c)]");
    const Svd svd = thin_svd(gamma_star);
    const Matrix u = svd.U.leftCols(r);
    const Matrix v = svd.V.leftCols(r);
    ErrorDecomposition out;
    const Matrix left = delta_hat - u * (u.transpose() * delta_hat);
    out.delta_double_prime = left - (left * v) * v.transpose();
    out.delta_prime = delta_hat - out.delta_double_prime;
    if (r < svd.s.size()) {
        const double scale = svd.s.size() ? svd.s(0) : 0.0;
        out.degenerate = std::abs(svd.s(r - 1) - svd.s(r)) <= kRankTol * std::max(scale, 1e-300);
    }
    return out;
}

struct RscTerms {
    double lhs = 0.0; // |X_n(Delta)|_2 / sqrt(n)
    double rhs = 0.0; // (1/8) |Delta|_w(F) (1 - 128 spikiness / sqrt(n))
    double margin() const { return lhs - rhs; }
};

inline RscTerms rsc_terms(const std::vector<SampleIndex> &indices, const Matrix &delta, const WeightPair &w,
                          long long n) {
    require(n > 0, "rsc_margin: n must be positive");
    if (std::size_t(n) != indices.size())
        throw DimensionMismatch("rsc_margin: n differs from the number of sample indices");
    w.check_dims(delta, "rsc_margin");
    const MeasureReport m = measures(delta, w);
    if (!m.spikiness)
        throw std::domain_error("rsc_margin: zero matrix");
    const double root_n = std::sqrt(double(n));
    RscTerms t;
    t.lhs = apply_operator(indices, delta).norm() / root_n;
    t.rhs = m.weighted_frobenius / 8.0 * (1.0 - 128.0 * *m.spikiness / root_n);
    return t;
}

/// lhs - rhs of the restricted strong convexity inequality; >= 0 means it holds for delta.
inline double rsc_margin(const std::vector<SampleIndex> &indices, const Matrix &delta, const WeightPair &w,
                         long long n) {
    return rsc_terms(indices, delta, w, n).margin();
}

/// Operator norm of (1/n) sum_i xi_i R^{-1/2} X_i C^{-1/2}. Pass the actual
/// noise values (nu * xi) to compare against lambda.
inline double noise_opnorm(const std::vector<SampleIndex> &indices, const Vector &xi, const WeightPair &w,
                           long long n) {
    require(n > 0, "noise_opnorm: n must be positive");
    if (xi.size() != Index(indices.size()))
        throw DimensionMismatch("noise_opnorm: noise length differs from number of samples");
    const GammaOperator op(indices, w);
    return operator_norm(op.adjoint(xi) / double(n));
}

// ---------------------------------------------------------------------------
// Monte-Carlo drivers

struct RscReport {
    int n_samples_tested = 0;
    int violations = 0;
    std::vector<double> margins;
    long long candidates_drawn = 0; // including rejected ones
    double pass_fraction() const {
        return n_samples_tested ? double(n_samples_tested - violations) / n_samples_tested : 0.0;
    }
};

struct RscExperiment {
    Index rows = 50;
    Index cols = 50;
    long long n = 0;
    int draws = 200;
    Index rank = 1;
    double c0 = 1.0;
    double spike_cap = 0.0; // <= 0 selects sqrt(32 log d)
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    int max_rejections = 100000;
};

/// Random test direction: `rank` rows of +-1 rotated by a Haar orthogonal
/// matrix, rescaled to unit weighted Frobenius norm.
inline Matrix random_rsc_direction(const WeightPair &w, Index rank, Rng &rng) {
    const Matrix q = haar_orthogonal(w.rows(), rng);
    Matrix delta = q * sign_block(w.rows(), w.cols(), rank, rng);
    return delta / to_gamma(delta, w).norm();
}

/// Draws unit-norm directions, keeps those inside the constraint set with
/// spikiness under the cap, and evaluates the RSC margin on a fresh sample
/// of n indices for each. Every draw owns a stream derived from (seed, draw).
inline RscReport rsc_monte_carlo(const RscExperiment &cfg, const WeightPair &w) {
    require(w.rows() == cfg.rows && w.cols() == cfg.cols, "rsc_monte_carlo: weights do not match dims");
    require(cfg.n > 0 && cfg.draws > 0, "rsc_monte_carlo: n and draws must be positive");
    const double d = mean_dim(cfg.rows, cfg.cols);
    const double cap = cfg.spike_cap > 0 ? cfg.spike_cap : std::sqrt(32.0 * std::log(d));
    std::vector<double> margins(std::size_t(cfg.draws));
    std::vector<long long> tries(std::size_t(cfg.draws));
    parallel_for(std::size_t(cfg.draws), cfg.jobs, [&](std::size_t k) {
        Rng rng(derive_seed(cfg.seed, {0x525343ull, k}));
        Matrix delta;
        for (int attempt = 1;; ++attempt) {
            if (attempt > cfg.max_rejections)
                throw std::runtime_error("rsc_monte_carlo: rejection sampler exhausted");
            delta = random_rsc_direction(w, cfg.rank, rng);
            tries[k] = attempt;
            const auto mem = constraint_membership(delta, w, cfg.n, cfg.c0);
            if (mem.member && spikiness(delta, w) <= cap)
                break;
        }
        const auto idx = sample_indices(w, std::size_t(cfg.n), rng);
        margins[k] = rsc_margin(idx, delta, w, cfg.n);
    });
    RscReport rep;
    rep.n_samples_tested = cfg.draws;
    rep.margins = std::move(margins);
    for (double m : rep.margins)
        rep.violations += m < 0.0;
    for (long long t : tries)
        rep.candidates_drawn += t;
    return rep;
}

struct NoiseNormExperiment {
    Index rows = 50;
    Index cols = 50;
    long long n = 0;
    double nu = 0.5;
    int repetitions = 50;
    NoiseModel noise = NoiseModel::gaussian;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

struct NoiseNormReport {
    std::vector<double> values;
    double mean = 0.0;
    double stddev = 0.0;
    double reference = 0.0; // nu sqrt(d log d / n)
};

inline NoiseNormReport noise_norm_monte_carlo(const NoiseNormExperiment &cfg, const WeightPair &w) {
    require(w.rows() == cfg.rows && w.cols() == cfg.cols, "noise_norm_monte_carlo: weights do not match dims");
    require(cfg.n > 0 && cfg.repetitions > 0, "noise_norm_monte_carlo: n and repetitions must be positive");
    NoiseNormReport rep;
    rep.values.resize(std::size_t(cfg.repetitions));
    parallel_for(rep.values.size(), cfg.jobs, [&](std::size_t k) {
        Rng rng(derive_seed(cfg.seed, {0x4E4F4953ull, k}));
        const auto idx = sample_indices(w, std::size_t(cfg.n), rng);
        const Vector xi = draw_noise(idx.size(), cfg.nu, cfg.noise, rng);
        rep.values[k] = noise_opnorm(idx, xi, w, cfg.n);
    });
    double sum = 0.0, sq = 0.0;
    for (double v : rep.values)
        sum += v;
    rep.mean = sum / double(rep.values.size());
    for (double v : rep.values)
        sq += (v - rep.mean) * (v - rep.mean);
    rep.stddev = rep.values.size() > 1 ? std::sqrt(sq / double(rep.values.size() - 1)) : 0.0;
    const double d = mean_dim(cfg.rows, cfg.cols);
    rep.reference = cfg.nu * std::sqrt(d * std::log(d) / double(cfg.n));
    return rep;
}

} // namespace wmc
