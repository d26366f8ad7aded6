#include "nanotwin/least_squares.hpp"

#include <limits>

namespace nanotwin {

LmSolution levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd start,
                               const LmOptions& options) {
    LmSolution s;
    s.params = std::move(start);
    f(s.params, s.residuals, &s.jacobian);
    s.cost = s.residuals.squaredNorm();

    double lambda = options.initial_damping;
    const auto n = s.params.size();
    Eigen::VectorXd trial_r;

    for (s.iterations = 0; s.iterations < options.max_iterations; ++s.iterations) {
        if (s.cost == 0.0 || !std::isfinite(s.cost)) {
            s.converged = s.cost == 0.0;
            break;
        }
        const Eigen::MatrixXd jtj = s.jacobian.transpose() * s.jacobian;
        const Eigen::VectorXd g = s.jacobian.transpose() * s.residuals;
        if (g.lpNorm<Eigen::Infinity>() <= 1e-300) {
            s.converged = true;
            break;
        }

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
            } else {
                const Eigen::VectorXd trial = s.params + step;
                f(trial, trial_r, nullptr);
                const double trial_cost = trial_r.squaredNorm();
                if (std::isfinite(trial_cost) && trial_cost < s.cost) {
                    const double decrease = (s.cost - trial_cost) / s.cost;
                    s.params = trial;
                    f(s.params, s.residuals, &s.jacobian);
                    s.cost = s.residuals.squaredNorm();
                    lambda = std::max(lambda / 10.0, 1e-15);
                    accepted = true;
                    if (decrease < options.relative_tolerance) {
                        s.converged = true;
                        ++s.iterations;
                        return s;
                    }
                } else {
                    lambda *= 10.0;
                }
            }
            if (lambda > 1e16) {
                // no descent direction left at machine precision: a stationary point
                s.converged = true;
                ++s.iterations;
                return s;
            }
        }
    }
    return s;
}

Eigen::MatrixXd normal_covariance(const Eigen::MatrixXd& jacobian) {
    const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (!lu.isInvertible()) {
        Eigen::MatrixXd inf = Eigen::MatrixXd::Zero(jtj.rows(), jtj.cols());
        inf.diagonal().setConstant(std::numeric_limits<double>::infinity());
        return inf;
    }
    return lu.inverse();
}

Eigen::VectorXd objective_gradient(const ResidualFunction& f, const Eigen::VectorXd& params) {
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    f(params, r, &j);
    return 2.0 * j.transpose() * r;
}

double objective_value(const ResidualFunction& f, const Eigen::VectorXd& params) {
    Eigen::VectorXd r;
    f(params, r, nullptr);
    return r.squaredNorm();
}

}  // namespace nanotwin
