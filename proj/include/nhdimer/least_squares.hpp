#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace nhdimer {

/// Residual vector r(x); the objective is 0.5 |r(x)|^2.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LsqOptions {
    int max_iterations = 500;
    /// Stop when the relative cost decrease of an accepted step falls below this.
    double ftol = 1e-14;
    /// Stop when the scaled step length falls below this.
    double xtol = 1e-12;
};

enum class LsqMethod { LevenbergMarquardt, NelderMead };

struct LsqResult {
    Eigen::VectorXd x;
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
    LsqMethod method = LsqMethod::LevenbergMarquardt;
};

/// Box-constrained Levenberg-Marquardt with a forward-difference Jacobian.
/// Steps are projected onto [lower, upper].
LsqResult levenberg_marquardt(const ResidualFn& fn, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const LsqOptions& options = {});

/// Derivative-free simplex minimisation of 0.5 |r(x)|^2 inside the box.
LsqResult nelder_mead(const ResidualFn& fn, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper, const LsqOptions& options = {});

/// Levenberg-Marquardt, falling back to Nelder-Mead when it does not converge.
/// Throws FitFailed (tagged with `what`) when neither converges.
LsqResult fit_least_squares(const ResidualFn& fn, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const std::string& what,
                            const LsqOptions& options = {});

}  // namespace nhdimer
