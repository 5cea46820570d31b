#pragma once

// Slow reference implementations used only to check the library.

#include "wmc/core.hpp"
#include "wmc/sampling.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <vector>

namespace wmc::oracle {

/// argmin_{x >= 0} 1/2 (x - sigma)^2 + tau x, by bisection on the sign of
/// the derivative x - sigma + tau over [0, sigma + 1].
inline double scalar_shrink(double sigma, double tau) {
    auto slope = [&](double x) { return x - sigma + tau; };
    if (slope(0.0) >= 0.0)
        return 0.0;
    double a = 0.0, b = std::max(sigma, 0.0) + 1.0;
    for (int k = 0; k < 200 && b - a > 0.0; ++k) {
        const double c = 0.5 * (a + b);
        if (c <= a || c >= b)
            break;
        (slope(c) < 0.0 ? a : b) = c;
    }
    return 0.5 * (a + b);
}

/// Singular value thresholding assembled from a Jacobi SVD and a scalar
/// minimization per singular value.
inline Matrix svt_scalar(const Matrix &m, double tau) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = svd.singularValues();
    for (Index i = 0; i < s.size(); ++i)
        s(i) = scalar_shrink(s(i), tau);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

/// Projection onto {Z : |Z|_op <= tau}.
inline Matrix project_opnorm(const Matrix &z, double tau) {
    Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector s = svd.singularValues().cwiseMin(tau);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

inline Matrix clip(const Matrix &m, double bound) { return m.cwiseMax(-bound).cwiseMin(bound); }

/// argmin_X 1/2 |X - m|^2 + tau |X|_nuc over |X|_inf <= bound, through the
/// dual problem
///   max_{|Z|_op <= tau} min_{|X|_inf <= bound} 1/2 |X - m|^2 + <Z, X>,
/// whose inner minimizer is X(Z) = clip(m - Z) and whose gradient in Z is
/// X(Z). Accelerated projected gradient ascent with unit step; the primal
/// point X(Z) is returned.
inline Matrix prox_box_dual(const Matrix &m, double tau, double bound, int iters = 20000) {
    Matrix z = Matrix::Zero(m.rows(), m.cols());
    Matrix y = z;
    double t = 1.0;
    for (int k = 0; k < iters; ++k) {
        const Matrix z_next = project_opnorm(y + clip(m - y, bound), tau);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = z_next + ((t - 1.0) / t_next) * (z_next - z);
        z = z_next;
        t = t_next;
    }
    return clip(m - z, bound);
}

/// Objective of the joint prox problem (infinite outside the box).
inline double prox_objective(const Matrix &x, const Matrix &m, double tau, double bound) {
    if (x.cwiseAbs().maxCoeff() > bound * (1 + 1e-12))
        return std::numeric_limits<double>::infinity();
    Eigen::JacobiSVD<Matrix> svd(x);
    return 0.5 * (x - m).squaredNorm() + tau * svd.singularValues().sum();
}

/// Plain proximal gradient on Theta with unit weights, fixed step 1/L where L
/// is computed by power iteration on the normal operator, and no box.
inline Matrix plain_nuclear_solver(const std::vector<SampleIndex> &idx, const Vector &y, Index rows, Index cols,
                                   double lambda, int iters) {
    const double n = double(idx.size());
    Matrix v = Matrix::Ones(rows, cols);
    double lip = 1.0;
    for (int k = 0; k < 200; ++k) {
        const Matrix w = apply_adjoint(idx, apply_operator(idx, v), rows, cols) / n;
        lip = w.norm() / v.norm();
        v = w / w.norm();
    }
    const double s = 1.0 / (lip * 1.01);
    Matrix theta = Matrix::Zero(rows, cols);
    for (int k = 0; k < iters; ++k) {
        const Matrix grad = apply_adjoint(idx, apply_operator(idx, theta) - y, rows, cols) / n;
        theta = svt_scalar(theta - s * grad, s * lambda);
    }
    return theta;
}

} // namespace wmc::oracle
