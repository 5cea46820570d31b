#pragma once

#include "wmc/core.hpp"
#include "wmc/linalg.hpp"
#include "wmc/sampling.hpp"
#include "wmc/weighted_measures.hpp"

#include <limits>
#include <vector>

namespace wmc {

enum class StepRule { fixed, backtracking };

/// How the joint prox of tau*|.|_nuc + indicator(|.|_inf <= bound) is formed.
/// `dykstra` is exact up to dykstra_tol; `svt_then_clip` composes the two
/// proxes once, which is only an approximation when the box is active.
enum class ProxMode { dykstra, svt_then_clip };

struct SolverOptions {
    int max_iters = 5000;
    /// Stop once (F_prev - F) / |F_prev| falls below this.
    double rel_tol = 1e-9;
    StepRule step_rule = StepRule::backtracking;
    double initial_step = 1.0;
    int dykstra_iters = 50;
    double dykstra_tol = 1e-10;
    /// Monotone FISTA instead of plain proximal gradient.
    bool accelerated = false;
    ProxMode prox_mode = ProxMode::dykstra;

    void validate() const {
        require(max_iters > 0, "SolverOptions: max_iters must be positive");
        require(rel_tol > 0, "SolverOptions: rel_tol must be positive");
        require(initial_step > 0, "SolverOptions: initial_step must be positive");
        require(dykstra_iters > 0, "SolverOptions: dykstra_iters must be positive");
        require(dykstra_tol > 0, "SolverOptions: dykstra_tol must be positive");
    }
};

/// Soft-thresholds the singular values: U max(S - tau, 0) V^T.
inline Matrix svt(const Matrix &m, double tau, double *nuclear_out = nullptr) {
    require(tau >= 0.0, "svt: tau must be nonnegative");
    const Svd d = thin_svd(m);
    const Vector shrunk = (d.s.array() - tau).cwiseMax(0.0).matrix();
    Index keep = 0;
    while (keep < shrunk.size() && shrunk(keep) > 0.0)
        ++keep;
    if (nuclear_out)
        *nuclear_out = shrunk.sum();
    if (keep == 0)
        return Matrix::Zero(m.rows(), m.cols());
    return d.U.leftCols(keep) * shrunk.head(keep).asDiagonal() * d.V.leftCols(keep).transpose();
}

/// Entrywise clip to [-bound, bound]; the Frobenius projection onto the l_inf ball.
inline Matrix project_linf(const Matrix &m, double bound) {
    require(bound > 0.0, "project_linf: bound must be positive");
    if (std::isinf(bound))
        return m;
    return m.cwiseMax(-bound).cwiseMin(bound);
}

inline bool within_linf(const Matrix &m, double bound) {
    return std::isinf(bound) || m.size() == 0 || m.cwiseAbs().maxCoeff() <= bound;
}

struct ProxResult {
    Matrix value;
    bool exact = true;
    int iterations = 0;
};

/// argmin_X 1/2 |X - m|_F^2 + tau |X|_nuc  subject to |X|_inf <= bound.
///
/// Dykstra's alternating prox between svt and project_linf. When svt(m, tau)
/// already lies in the box it is the answer and is returned directly. The
/// last operation is always the box projection, so the result is feasible.
inline ProxResult prox_nuclear_in_box(const Matrix &m, double tau, double bound, const SolverOptions &opts = {}) {
    require(tau >= 0.0, "prox_nuclear_in_box: tau must be nonnegative");
    require(bound > 0.0, "prox_nuclear_in_box: bound must be positive");
    opts.validate();

    ProxResult out;
    if (tau == 0.0) {
        out.value = project_linf(m, bound);
        return out;
    }
    Matrix y = svt(m, tau);
    if (within_linf(y, bound)) {
        out.value = std::move(y);
        out.iterations = 1;
        return out;
    }
    if (opts.prox_mode == ProxMode::svt_then_clip) {
        out.value = project_linf(y, bound);
        out.exact = false;
        out.iterations = 1;
        return out;
    }

    Matrix x = m;
    Matrix p = Matrix::Zero(m.rows(), m.cols());
    Matrix q = Matrix::Zero(m.rows(), m.cols());
    out.exact = false;
    for (int k = 0; k < opts.dykstra_iters; ++k) {
        if (k > 0)
            y = svt(x + p, tau);
        p = x + p - y;
        Matrix x_next = project_linf(y + q, bound);
        q = y + q - x_next;
        const double change = (x_next - x).norm();
        x = std::move(x_next);
        out.iterations = k + 1;
        if (change < opts.dykstra_tol) {
            out.exact = true;
            break;
        }
    }
    out.value = std::move(x);
    return out;
}

struct LambdaChoice {
    double lambda_n = 0.0;    // 4 L nu sqrt(d log d / n)
    double lambda_star = 0.0; // max(lambda_n, sqrt(d log d / n))
};

inline LambdaChoice default_lambda(double nu, double l_bound, double d, long long n) {
    require(n > 0, "default_lambda: n must be positive");
    const double base = std::sqrt(d * std::log(d) / double(n));
    LambdaChoice out;
    out.lambda_n = 4.0 * l_bound * nu * base;
    out.lambda_star = std::max(out.lambda_n, base);
    return out;
}

/// (1/2n) |y - X'(Gamma)|^2.
inline double smooth_loss(const Matrix &gamma, const GammaOperator &op, const Vector &y) {
    return (y - op.apply(gamma)).squaredNorm() / (2.0 * double(op.size()));
}

/// Gradient of smooth_loss: (1/n) X'^*(X'(Gamma) - y).
inline Matrix smooth_gradient(const Matrix &gamma, const GammaOperator &op, const Vector &y) {
    return op.adjoint(op.apply(gamma) - y) / double(op.size());
}

/// (1/2n) |y - X'(Gamma)|^2 + lambda |Gamma|_nuc.
inline double objective(const Matrix &gamma, const ObservationSet &obs, double lambda) {
    obs.validate();
    const GammaOperator op(obs);
    return smooth_loss(gamma, op, obs.responses) + lambda * nuclear_norm(gamma);
}

struct Estimate {
    Matrix theta_hat;
    Matrix gamma_hat;
    std::vector<double> objective_trace; // F at the initial point and after every accepted step
    int iterations = 0;
    bool converged = false;
    double lambda = 0.0;
    double alpha_star = 0.0;
    double step = 0.0;      // final step size
    bool prox_exact = true; // false if any Dykstra call hit its iteration cap
};

namespace detail {

struct ProxStep {
    Matrix point;
    double loss = 0.0;
    double nuclear = 0.0;
    bool exact = true;
};

// prox-gradient step from `base` with step s; nuclear norm reused from svt
// when the box is inactive.
inline ProxStep prox_step(const Matrix &base, const Matrix &grad, double s, double lambda, double bound,
                          const GammaOperator &op, const Vector &y, const SolverOptions &opts) {
    ProxStep st;
    const Matrix m = base - s * grad;
    double nuc = 0.0;
    Matrix cand = svt(m, s * lambda, &nuc);
    if (within_linf(cand, bound)) {
        st.point = std::move(cand);
        st.nuclear = nuc;
    } else {
        ProxResult pr = prox_nuclear_in_box(m, s * lambda, bound, opts);
        st.point = std::move(pr.value);
        st.exact = pr.exact;
        st.nuclear = nuclear_norm(st.point);
    }
    st.loss = smooth_loss(st.point, op, y);
    return st;
}

inline bool sufficient_decrease(const ProxStep &st, const Matrix &base, double base_loss, const Matrix &grad,
                                double s) {
    const Matrix diff = st.point - base;
    const double model = base_loss + (grad.array() * diff.array()).sum() + diff.squaredNorm() / (2.0 * s);
    return st.loss <= model + 1e-12 * std::max(1.0, std::abs(base_loss));
}

} // namespace detail

/// Minimizes (1/2n)|y - X'(Gamma)|^2 + lambda |Gamma|_nuc over
/// |Gamma|_inf <= alpha_star / sqrt(d_r d_c) by proximal gradient in
/// Gamma = sqrt(R) Theta sqrt(C) coordinates, starting from Gamma = 0.
///
/// With backtracking the objective trace is non-increasing: a step is taken
/// only if it satisfies the quadratic upper-bound test and does not raise
/// the objective. Non-convergence is reported through `converged`.
inline Estimate solve(const ObservationSet &obs, double lambda, double alpha_star, const SolverOptions &opts = {}) {
    obs.validate();
    opts.validate();
    require(std::isfinite(lambda) && lambda > 0.0, "solve: lambda must be positive");
    require(!std::isnan(alpha_star) && alpha_star > 0.0, "solve: alpha_star must be positive (infeasible box)");

    const GammaOperator op(obs);
    const Vector &y = obs.responses;
    const double bound = alpha_star / std::sqrt(double(obs.rows) * double(obs.cols));
    const double tiny = std::numeric_limits<double>::min();

    Estimate est;
    est.lambda = lambda;
    est.alpha_star = alpha_star;

    Matrix x = Matrix::Zero(obs.rows, obs.cols);
    double x_loss = smooth_loss(x, op, y);
    double x_obj = x_loss;
    est.objective_trace.push_back(x_obj);

    double s = opts.step_rule == StepRule::fixed ? 1.0 / op.lipschitz() : opts.initial_step;

    // accelerated state
    Matrix z = x;
    double t = 1.0;

    for (int it = 1; it <= opts.max_iters; ++it) {
        est.iterations = it;
        const Matrix &base = opts.accelerated ? z : x;
        const double base_loss = opts.accelerated ? smooth_loss(z, op, y) : x_loss;
        const Matrix grad = op.adjoint(op.apply(base) - y) / double(op.size());

        detail::ProxStep st;
        bool accepted = false;
        for (int halvings = 0; halvings < 64; ++halvings) {
            st = detail::prox_step(base, grad, s, lambda, bound, op, y, opts);
            if (opts.step_rule == StepRule::fixed) {
                accepted = true;
                break;
            }
            const double cand_obj = st.loss + lambda * st.nuclear;
            const bool monotone =
                opts.accelerated || cand_obj <= x_obj + 1e-12 * std::max(1.0, std::abs(x_obj));
            if (detail::sufficient_decrease(st, base, base_loss, grad, s) && monotone) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted)
            break;
        est.prox_exact = est.prox_exact && st.exact;

        const double cand_obj = st.loss + lambda * st.nuclear;
        const double prev_obj = x_obj;
        if (!opts.accelerated) {
            const bool stalled = st.point == x;
            x = std::move(st.point);
            x_loss = st.loss;
            x_obj = cand_obj;
            est.objective_trace.push_back(x_obj);
            if (stalled || (prev_obj - x_obj) <= opts.rel_tol * std::max(std::abs(prev_obj), tiny)) {
                est.converged = true;
                break;
            }
        } else {
            // Monotone FISTA: keep the better of the prox point and the
            // current iterate, extrapolate from both.
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const Matrix x_prev = x;
            const bool improved = cand_obj <= x_obj;
            if (improved) {
                x = st.point;
                x_loss = st.loss;
                x_obj = cand_obj;
            }
            z = x + (t / t_next) * (st.point - x) + ((t - 1.0) / t_next) * (x - x_prev);
            t = t_next;
            est.objective_trace.push_back(x_obj);
            if (improved && (prev_obj - x_obj) <= opts.rel_tol * std::max(std::abs(prev_obj), tiny)) {
                est.converged = true;
                break;
            }
            if (!improved) {
                // restart momentum
                z = x;
                t = 1.0;
            }
        }
    }

    est.step = s;
    est.gamma_hat = std::move(x);
    est.theta_hat = from_gamma(est.gamma_hat, obs.weights);
    return est;
}

} // namespace wmc
