#pragma once

#include "wmc/core.hpp"
#include "wmc/linalg.hpp"
#include "wmc/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace wmc {

/// M = floor(exp(r d / 128) / 4), the guaranteed packing cardinality.
inline std::uint64_t packing_size(Index d, Index r) {
    require(d >= 10, "packing_size: d must be at least 10");
    require(r >= 1 && r <= d, "packing_size: r must lie in [1, d]");
    const double m = std::floor(std::exp(double(r) * double(d) / 128.0) / 4.0);
    if (!(m < 0x1p63))
        throw std::overflow_error("packing_size: cardinality does not fit in 64 bits");
    return std::uint64_t(m);
}

/// rows x cols matrix whose first r rows are i.i.d. uniform +-1 and whose
/// remaining rows are zero.
inline Matrix sign_block(Index rows, Index cols, Index r, Rng &rng) {
    require(r >= 0 && r <= rows, "sign_block: r must lie in [0, rows]");
    Matrix m = Matrix::Zero(rows, cols);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = double(rng.sign());
    return m;
}

struct PackingReport {
    std::size_t size = 0;
    double delta = 0.0;
    Index rank = 0;

    double frobenius_min = 0.0;
    double frobenius_max = 0.0;
    double min_separation = std::numeric_limits<double>::infinity();
    double max_spikiness = 0.0;
    double max_operator_norm = 0.0;
    Index max_numerical_rank = 0;

    double spikiness_threshold = 0.0; // sqrt(32 log d)
    double operator_threshold = 0.0;  // 4 delta / sqrt(r)

    bool frobenius_ok = false;
    bool separation_ok = false;
    bool spikiness_ok = false;
    bool operator_ok = false;
    bool rank_ok = false;
    bool passed = false;

    int properties_passed() const {
        return int(frobenius_ok) + int(separation_ok) + int(spikiness_ok) + int(operator_ok);
    }
};

struct PackingSet {
    std::vector<Matrix> matrices;
    double delta = 0.0;
    Index rank = 0;
    int attempts_used = 0;
    PackingReport report;
};

namespace detail {

inline double square_spikiness(const Matrix &m) {
    const double f = m.norm();
    return f > 0.0 ? double(m.rows()) * m.cwiseAbs().maxCoeff() / f : std::numeric_limits<double>::infinity();
}

} // namespace detail

/// Checks the four packing properties on a set of square d x d matrices:
///   (a) |Theta|_F = delta              (relative 1e-8)
///   (b) |Theta^l - Theta^k|_F >= delta  (relative 1e-8)
///   (c) spikiness (uniform weights) <= sqrt(32 log d)
///   (d) |Theta|_op <= 4 delta / sqrt(r)
inline PackingReport verify_packing(const PackingSet &set) {
    require(!set.matrices.empty(), "verify_packing: empty set");
    require(set.delta > 0.0, "verify_packing: delta must be positive");
    require(set.rank >= 1, "verify_packing: rank must be positive");
    const Index d = set.matrices.front().rows();
    PackingReport rep;
    rep.size = set.matrices.size();
    rep.delta = set.delta;
    rep.rank = set.rank;
    rep.spikiness_threshold = std::sqrt(32.0 * std::log(double(d)));
    rep.operator_threshold = 4.0 * set.delta / std::sqrt(double(set.rank));
    rep.frobenius_min = std::numeric_limits<double>::infinity();
    for (const Matrix &m : set.matrices) {
        if (m.rows() != d || m.cols() != d)
            throw DimensionMismatch("verify_packing: matrices must all be d x d");
        const double f = m.norm();
        rep.frobenius_min = std::min(rep.frobenius_min, f);
        rep.frobenius_max = std::max(rep.frobenius_max, f);
        rep.max_spikiness = std::max(rep.max_spikiness, detail::square_spikiness(m));
        const Vector s = singular_values(m);
        rep.max_operator_norm = std::max(rep.max_operator_norm, s.size() ? s(0) : 0.0);
        rep.max_numerical_rank = std::max(rep.max_numerical_rank, numerical_rank(s));
    }
    for (std::size_t a = 0; a < set.matrices.size(); ++a)
        for (std::size_t b = a + 1; b < set.matrices.size(); ++b)
            rep.min_separation = std::min(rep.min_separation, (set.matrices[a] - set.matrices[b]).norm());

    const double rel = 1e-8;
    rep.frobenius_ok = std::abs(rep.frobenius_min - set.delta) <= rel * set.delta &&
                       std::abs(rep.frobenius_max - set.delta) <= rel * set.delta;
    rep.separation_ok = rep.min_separation >= set.delta * (1.0 - rel);
    rep.spikiness_ok = rep.max_spikiness <= rep.spikiness_threshold;
    rep.operator_ok = rep.max_operator_norm <= rep.operator_threshold * (1.0 + 1e-12);
    rep.rank_ok = rep.max_numerical_rank <= set.rank;
    rep.passed = rep.frobenius_ok && rep.separation_ok && rep.spikiness_ok && rep.operator_ok;
    return rep;
}

/// Raised when no attempt produced a valid packing; carries the report of
/// the attempt that got closest.
class PackingError : public std::runtime_error {
  public:
    PackingError(const std::string &what, PackingReport best) : std::runtime_error(what), best_(best) {}
    const PackingReport &best_report() const { return best_; }

  private:
    PackingReport best_;
};

/// Randomized packing construction. Each attempt draws round(exp(rd/128))
/// sign blocks (r rows of +-1, remaining rows zero), rotates all of them by
/// one shared Haar orthogonal Q and scales by delta / sqrt(rd). Candidates
/// passing properties (a), (c) and (d) are kept in draw order; the first M
/// of them are then checked as a set, which adds the pairwise property (b).
inline PackingSet generate_packing(Index d, Index r, double delta, Rng &rng, int max_attempts = 20,
                                   std::uint64_t max_candidates = 1u << 20) {
    require(delta > 0.0 && std::isfinite(delta), "generate_packing: delta must be positive");
    require(max_attempts >= 1, "generate_packing: max_attempts must be positive");
    const std::uint64_t m_target = packing_size(d, r);
    require(m_target >= 2, "generate_packing: packing size M = floor(exp(rd/128)/4) is below 2");
    const double m_prime_real = std::round(std::exp(double(r) * double(d) / 128.0));
    if (!(m_prime_real <= double(max_candidates)))
        throw std::length_error("generate_packing: too many candidates to materialize");
    const auto m_prime = std::uint64_t(m_prime_real);
    const double scale = delta / std::sqrt(double(r) * double(d));
    const double spike_cap = std::sqrt(32.0 * std::log(double(d)));
    const double op_cap = 4.0 * delta / std::sqrt(double(r));

    PackingReport best;
    bool have_best = false;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        std::vector<Matrix> candidates;
        candidates.reserve(m_prime);
        for (std::uint64_t l = 0; l < m_prime; ++l)
            candidates.push_back(sign_block(d, d, r, rng));
        const Matrix q = haar_orthogonal(d, rng);

        PackingSet set;
        set.delta = delta;
        set.rank = r;
        set.attempts_used = attempt;
        for (const Matrix &c : candidates) {
            Matrix theta = scale * (q * c);
            if (std::abs(theta.norm() - delta) > 1e-8 * delta)
                continue;
            if (detail::square_spikiness(theta) > spike_cap)
                continue;
            if (operator_norm(theta) > op_cap * (1.0 + 1e-12))
                continue;
            set.matrices.push_back(std::move(theta));
            if (set.matrices.size() == m_target)
                break;
        }
        if (set.matrices.empty())
            continue;
        set.report = verify_packing(set);
        if (set.report.passed && set.matrices.size() == m_target)
            return set;
        const bool better = !have_best || set.report.size > best.size ||
                            (set.report.size == best.size && set.report.properties_passed() > best.properties_passed());
        if (better) {
            best = set.report;
            have_best = true;
        }
    }
    throw PackingError("generate_packing: no valid packing within " + std::to_string(max_attempts) + " attempts",
                       best);
}

/// Mean of |A - B|_F^2 / (r d) over `pairs` independent pairs of unrotated
/// sign blocks. Each entry of the difference is 0 or +-2 with equal odds, so
/// the expectation is 2.
inline double sign_block_distance_mean(Index d, Index r, int pairs, Rng &rng) {
    require(pairs >= 1, "sign_block_distance_mean: pairs must be positive");
    require(r >= 1 && r <= d, "sign_block_distance_mean: r must lie in [1, d]");
    double sum = 0.0;
    for (int k = 0; k < pairs; ++k) {
        const Matrix a = sign_block(d, d, r, rng);
        const Matrix b = sign_block(d, d, r, rng);
        sum += (a - b).squaredNorm() / (double(r) * double(d));
    }
    return sum / pairs;
}

/// Whether r d reaches 1024 log 2, the size at which the packing is large
/// enough for the lower-bound argument. Reported only; never enforced.
inline bool packing_regime_valid(Index d, Index r) { return double(r) * double(d) >= 1024.0 * std::log(2.0); }

} // namespace wmc
