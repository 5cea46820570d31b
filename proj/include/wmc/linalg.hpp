#pragma once

#include "wmc/core.hpp"
#include "wmc/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace wmc {

/// Default relative cutoff below which a singular value counts as zero.
inline constexpr double kRankTol = 1e-10;

struct Svd {
    Matrix U;
    Vector s; // non-increasing
    Matrix V;
};

/// Thin SVD m = U diag(s) V^T. Throws NumericalError on non-finite input or
/// if the decomposition does not succeed.
inline Svd thin_svd(const Matrix &m) {
    require_finite(m, "thin_svd");
    if (m.size() == 0)
        return {Matrix(m.rows(), 0), Vector(0), Matrix(m.cols(), 0)};
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("thin_svd: decomposition failed");
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline Vector singular_values(const Matrix &m) {
    require_finite(m, "singular_values");
    if (m.size() == 0)
        return Vector(0);
    Eigen::BDCSVD<Matrix> svd(m);
    if (svd.info() != Eigen::Success)
        throw NumericalError("singular_values: decomposition failed");
    return svd.singularValues();
}

inline double nuclear_norm(const Matrix &m) { return singular_values(m).sum(); }

inline double operator_norm(const Matrix &m) {
    const Vector s = singular_values(m);
    return s.size() ? s(0) : 0.0;
}

/// Number of singular values at or above rel_tol * sigma_max.
inline Index numerical_rank(const Vector &s, double rel_tol = kRankTol) {
    if (s.size() == 0 || s(0) <= 0.0)
        return 0;
    const double cutoff = rel_tol * s(0);
    return Index(std::count_if(s.begin(), s.end(), [&](double v) { return v >= cutoff; }));
}

inline Index numerical_rank(const Matrix &m, double rel_tol = kRankTol) {
    return numerical_rank(singular_values(m), rel_tol);
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q.
inline Matrix haar_orthogonal(Index d, Rng &rng) {
    const Matrix g = rng.gaussian(d, d);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    const Matrix &r = qr.matrixQR();
    for (Index j = 0; j < d; ++j)
        if (r(j, j) < 0)
            q.col(j) = -q.col(j);
    return q;
}

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Work items are
/// claimed dynamically; callers write results into per-index slots so the
/// output never depends on scheduling. The first exception is rethrown.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)> &body) {
    jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto &w : workers)
        w.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace wmc
