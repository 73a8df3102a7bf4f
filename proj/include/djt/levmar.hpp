// levmar.hpp — damped Gauss-Newton least squares with numeric Jacobians
//
// Shared by the spectroscopy peak fits and the circuit-parameter estimator.
// Deterministic: forward-difference Jacobians with a relative step, bound
// handling by projection, acceptance only on cost decrease.

#pragma once

#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "djt/errors.hpp"

namespace djt {

struct LeastSquaresOptions {
    int max_iterations = 200;
    double relative_cost_tol = 1e-10;
    double jacobian_step = 1e-6;     // relative forward-difference step
    double lambda_init = 1e-3;       // initial LM damping
    double lambda_max = 1e12;
};

struct LeastSquaresResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    double cost = 0.0; // sum of squared residuals
    int iterations = 0;
    bool converged = false;
    bool at_bounds = false;      // optimum has an active bound
    bool rank_deficient = false; // Jacobian rank < parameter count at optimum
    Eigen::VectorXd std_errors;  // per-parameter, from the Jacobian at the optimum
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

inline Eigen::MatrixXd forward_jacobian(const ResidualFn& fn, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& r0, const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi, double rel_step) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd jac(r0.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        // parameters sitting at zero take their scale from the bound range
        double scale = std::abs(x(j));
        if (std::isfinite(hi(j) - lo(j)))
            scale = std::max(scale, 1e-2 * (hi(j) - lo(j)));
        double step = rel_step * std::max(scale, 1e-8);
        Eigen::VectorXd xs = x;
        xs(j) = x(j) + step;
        if (xs(j) > hi(j)) {
            xs(j) = x(j) - step;
            step = -step;
        }
        xs = project(xs, lo, hi);
        jac.col(j) = (fn(xs) - r0) / (xs(j) - x(j));
    }
    return jac;
}

} // namespace detail

inline LeastSquaresResult fit_least_squares(const ResidualFn& fn, Eigen::VectorXd x0,
                                            Eigen::VectorXd lower, Eigen::VectorXd upper,
                                            const LeastSquaresOptions& opts = {}) {
    const Eigen::Index n = x0.size();
    if (lower.size() != n || upper.size() != n)
        throw ConfigError("least squares: bound vectors must match parameter count");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(lower(i) <= upper(i))) throw ConfigError("least squares: inconsistent bounds");

    Eigen::VectorXd x = detail::project(x0, lower, upper);
    Eigen::VectorXd r = fn(x);
    if (!r.allFinite()) throw FitError("least squares: residuals not finite at start");
    double cost = r.squaredNorm();

    LeastSquaresResult out;
    double lambda = opts.lambda_init;
    bool converged = false;
    int iter = 0;
    Eigen::MatrixXd jac;
    // stagnation window: numeric-Jacobian noise can sustain tiny cost
    // improvements forever once the model-mismatch floor is reached
    double window_cost = cost;
    int window_start = 0;

    for (; iter < opts.max_iterations && n > 0; ++iter) {
        jac = detail::forward_jacobian(fn, x, r, lower, upper, opts.jacobian_step);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;

        bool accepted = false;
        while (lambda < opts.lambda_max) {
            Eigen::MatrixXd damped = jtj;
            for (Eigen::Index i = 0; i < n; ++i)
                damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            const Eigen::VectorXd xt = detail::project(x + step, lower, upper);
            const Eigen::VectorXd rt = fn(xt);
            const double ct = rt.allFinite() ? rt.squaredNorm()
                                             : std::numeric_limits<double>::infinity();
            if (ct < cost) {
                const double rel_drop = (cost - ct) / std::max(cost, 1e-300);
                const double step_norm = (xt - x).norm();
                x = xt;
                r = rt;
                cost = ct;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel_drop < opts.relative_cost_tol) converged = true;
                if (step_norm <= 1e-10 * (x.norm() + 1e-10)) converged = true;
                break;
            }
            lambda *= 5.0;
        }
        if (!accepted) {
            // no downhill step left: stationary within damping limits
            converged = true;
        }
        if (iter - window_start >= 10) {
            if ((window_cost - cost) / std::max(window_cost, 1e-300) < 1e-8) converged = true;
            window_cost = cost;
            window_start = iter;
        }
        if (converged) break;
    }
    if (n == 0) converged = true;

    out.params = x;
    out.residuals = r;
    out.cost = cost;
    out.iterations = iter;
    out.converged = converged;
    if (!converged) throw FitError("least squares did not converge in " +
                                   std::to_string(opts.max_iterations) + " iterations");

    for (Eigen::Index i = 0; i < n; ++i)
        if (x(i) <= lower(i) + 1e-12 * std::max(1.0, std::abs(lower(i))) ||
            x(i) >= upper(i) - 1e-12 * std::max(1.0, std::abs(upper(i))))
            out.at_bounds = true;

    // standard errors from the Jacobian at the optimum
    out.std_errors = Eigen::VectorXd::Zero(n);
    if (n > 0) {
        jac = detail::forward_jacobian(fn, x, r, lower, upper, opts.jacobian_step);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
        lu.setThreshold(1e-10);
        out.rank_deficient = lu.rank() < n;
        const Eigen::Index dof = r.size() - n;
        if (!out.rank_deficient && dof > 0) {
            const Eigen::MatrixXd cov = lu.inverse() * (cost / double(dof));
            for (Eigen::Index i = 0; i < n; ++i)
                out.std_errors(i) = std::sqrt(std::max(cov(i, i), 0.0));
        }
    }
    return out;
}

} // namespace djt
