#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace qdsps {

struct LmOptions {
    int max_iterations = 200;
    double tolerance = 1e-12; ///< relative change of the cost that ends the iteration
    double initial_lambda = 1e-3;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd errors;     ///< 1 sigma from the scaled covariance
    Eigen::MatrixXd covariance; ///< s^2 (J^T J)^-1, s^2 = cost / (m - n)
    double cost = 0.0;          ///< sum of squared residuals
    int iterations = 0;
    bool converged = false;
};

/// Forward-difference Jacobian of a residual functor.
template <typename Residual>
Eigen::MatrixXd numeric_jacobian(Residual& residual, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& r0)
{
    Eigen::MatrixXd jac(r0.size(), p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        Eigen::VectorXd q = p;
        const double h = 1e-7 * std::max(1.0, std::abs(p(j)));
        q(j) += h;
        jac.col(j) = (residual(q) - r0) / h;
    }
    return jac;
}

/// Levenberg-Marquardt on a residual functor `Eigen::VectorXd(const Eigen::VectorXd&)`.
template <typename Residual>
LmResult levenberg_marquardt(Residual residual, Eigen::VectorXd p, const LmOptions& opts = {})
{
    LmResult out;
    Eigen::VectorXd r = residual(p);
    double cost = r.squaredNorm();
    double lambda = opts.initial_lambda;

    for (out.iterations = 0; out.iterations < opts.max_iterations; ++out.iterations) {
        const Eigen::MatrixXd jac = numeric_jacobian(residual, p, r);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;

        bool improved = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = a.ldlt().solve(-grad);
            const Eigen::VectorXd trial = p + step;
            const Eigen::VectorXd r_trial = residual(trial);
            const double trial_cost = r_trial.squaredNorm();
            if (std::isfinite(trial_cost) && trial_cost < cost) {
                const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
                p = trial;
                r = r_trial;
                cost = trial_cost;
                lambda = std::max(lambda / 10.0, 1e-15);
                improved = true;
                if (rel < opts.tolerance) out.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved || out.converged) {
            out.converged = true;
            break;
        }
    }

    const Eigen::MatrixXd jac = numeric_jacobian(residual, p, r);
    const auto dof = std::max<Eigen::Index>(1, r.size() - p.size());
    const double s2 = cost / static_cast<double>(dof);
    out.covariance = s2 * (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
    out.errors = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    out.params = p;
    out.cost = cost;
    return out;
}

} // namespace qdsps
