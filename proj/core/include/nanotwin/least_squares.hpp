#pragma once

// Damped (Levenberg-Marquardt) least squares. Steps are accepted only when
// they lower the objective; the damping shrinks after an accepted step and
// grows after a rejected one.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <span>

#include "nanotwin/dual.hpp"

namespace nanotwin {

struct LmOptions {
    int max_iterations = 500;
    double relative_tolerance = 1e-10;
    double initial_damping = 1e-3;
};

struct LmSolution {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double cost = 0.0;  // sum of squared residuals
    bool converged = false;
    int iterations = 0;
};

/// Fills residuals (and the Jacobian when non-null) at `params`.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals,
                       Eigen::MatrixXd* jacobian)>;

LmSolution levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd start,
                               const LmOptions& options = {});

/// Unscaled covariance (J^T J)^-1; infinities on the diagonal if singular.
Eigen::MatrixXd normal_covariance(const Eigen::MatrixXd& jacobian);

/// Weighted residuals r_i = (model(p, x_i) - y_i) / sigma_i for a curve model
/// written once as a template over the scalar type:
///   template <class T> T operator()(const std::array<T, N>& p, double x) const;
/// The Jacobian comes from forward-mode dual numbers.
template <std::size_t N, typename Model>
ResidualFunction curve_residuals(Model model, std::span<const double> x, std::span<const double> y,
                                 std::span<const double> sigma) {
    return [model, x, y, sigma](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                                Eigen::MatrixXd* jac) {
        const auto m = static_cast<Eigen::Index>(x.size());
        r.resize(m);
        if (jac != nullptr) jac->resize(m, static_cast<Eigen::Index>(N));
        if (jac == nullptr) {
            std::array<double, N> pv{};
            for (std::size_t k = 0; k < N; ++k) pv[k] = p[static_cast<Eigen::Index>(k)];
            for (Eigen::Index i = 0; i < m; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                r[i] = (model(pv, x[ui]) - y[ui]) / sigma[ui];
            }
            return;
        }
        std::array<Dual<N>, N> pd;
        for (std::size_t k = 0; k < N; ++k)
            pd[k] = Dual<N>::variable(p[static_cast<Eigen::Index>(k)], k);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const Dual<N> v = model(pd, x[ui]);
            r[i] = (v.v - y[ui]) / sigma[ui];
            for (std::size_t k = 0; k < N; ++k)
                (*jac)(i, static_cast<Eigen::Index>(k)) = v.d[k] / sigma[ui];
        }
    };
}

/// Gradient of the objective sum r^2 (2 J^T r), as used by the solver.
Eigen::VectorXd objective_gradient(const ResidualFunction& f, const Eigen::VectorXd& params);

/// Objective value sum r^2.
double objective_value(const ResidualFunction& f, const Eigen::VectorXd& params);

}  // namespace nanotwin
