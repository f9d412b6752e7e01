#include "nhdimer/least_squares.hpp"

#include "nhdimer/error.hpp"

#include <ceres/ceres.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <memory>

namespace nhdimer {

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

double cost_of(const Eigen::VectorXd& r) {
    const double c = 0.5 * r.squaredNorm();
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
}

double rms_of(const Eigen::VectorXd& r) {
    return r.size() > 0 ? std::sqrt(2.0 * cost_of(r) / static_cast<double>(r.size())) : 0.0;
}

void check_inputs(const Eigen::VectorXd& x0, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    if (lower.size() != x0.size() || upper.size() != x0.size()) {
        throw DomainError("least squares: bound dimensions do not match the parameter vector");
    }
    if ((lower.array() > upper.array()).any()) {
        throw DomainError("least squares: lower bound exceeds upper bound");
    }
}

// Adapts a ResidualFn to the numeric-differentiation interface of the solver.
class ResidualFunctor {
public:
    ResidualFunctor(const ResidualFn& fn, Eigen::Index n) : fn_(fn), n_(n) {}

    bool operator()(double const* const* parameters, double* residuals) const {
        const Eigen::VectorXd r = fn_(Eigen::Map<const Eigen::VectorXd>(parameters[0], n_));
        if (!r.allFinite()) {
            return false;
        }
        Eigen::Map<Eigen::VectorXd>(residuals, r.size()) = r;
        return true;
    }

private:
    const ResidualFn& fn_;
    Eigen::Index n_;
};

// Cost callback for the simplex minimiser; the point is clamped into the box.
struct SimplexContext {
    const ResidualFn* fn;
    const Eigen::VectorXd* lower;
    const Eigen::VectorXd* upper;
};

double simplex_cost(const gsl_vector* v, void* params) {
    const auto* ctx = static_cast<const SimplexContext*>(params);
    const Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<>> x(v->data, static_cast<Eigen::Index>(v->size),
                                                                       Eigen::InnerStride<>(static_cast<Eigen::Index>(v->stride)));
    const double c = cost_of((*ctx->fn)(clamp_box(x, *ctx->lower, *ctx->upper)));
    return std::isfinite(c) ? c : GSL_POSINF;
}

}  // namespace

LsqResult levenberg_marquardt(const ResidualFn& fn, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper, const LsqOptions& options) {
    check_inputs(x0, lower, upper);
    LsqResult res;
    res.method = LsqMethod::LevenbergMarquardt;
    Eigen::VectorXd x = clamp_box(x0, lower, upper);
    const Eigen::VectorXd r0 = fn(x);
    if (!r0.allFinite()) {
        res.x = x;
        res.residual_rms = std::numeric_limits<double>::infinity();
        return res;
    }

    const Eigen::Index n = x.size();
    auto* cost = new ceres::DynamicNumericDiffCostFunction<ResidualFunctor, ceres::FORWARD>(
        new ResidualFunctor(fn, n), ceres::TAKE_OWNERSHIP);
    cost->AddParameterBlock(static_cast<int>(n));
    cost->SetNumResiduals(static_cast<int>(r0.size()));

    ceres::Problem problem;
    problem.AddResidualBlock(cost, nullptr, x.data());
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(lower[j])) {
            problem.SetParameterLowerBound(x.data(), static_cast<int>(j), lower[j]);
        }
        if (std::isfinite(upper[j])) {
            problem.SetParameterUpperBound(x.data(), static_cast<int>(j), upper[j]);
        }
    }

    ceres::Solver::Options so;
    so.trust_region_strategy_type = ceres::LEVENBERG_MARQUARDT;
    so.linear_solver_type = ceres::DENSE_QR;
    so.max_num_iterations = options.max_iterations;
    so.function_tolerance = options.ftol;
    so.parameter_tolerance = options.xtol;
    so.gradient_tolerance = 1e-16;
    so.num_threads = 1;
    so.logging_type = ceres::SILENT;
    so.minimizer_progress_to_stdout = false;

    ceres::Solver::Summary summary;
    ceres::Solve(so, &problem, &summary);

    res.x = x;
    res.iterations = static_cast<int>(summary.iterations.size());
    res.converged = summary.termination_type == ceres::CONVERGENCE;
    res.residual_rms = rms_of(fn(x));
    return res;
}

LsqResult nelder_mead(const ResidualFn& fn, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper, const LsqOptions& options) {
    check_inputs(x0, lower, upper);
    const auto n = static_cast<std::size_t>(x0.size());
    const Eigen::VectorXd start = clamp_box(x0, lower, upper);

    SimplexContext ctx{&fn, &lower, &upper};
    gsl_multimin_function objective{&simplex_cost, n, &ctx};

    const auto free_vector = [](gsl_vector* v) { gsl_vector_free(v); };
    std::unique_ptr<gsl_vector, decltype(free_vector)> x(gsl_vector_alloc(n), free_vector);
    std::unique_ptr<gsl_vector, decltype(free_vector)> step(gsl_vector_alloc(n), free_vector);
    for (std::size_t j = 0; j < n; ++j) {
        const auto k = static_cast<Eigen::Index>(j);
        gsl_vector_set(x.get(), j, start[k]);
        const double span = upper[k] - lower[k];
        double h = 0.05 * std::abs(start[k]);
        if (h == 0.0) {
            h = std::isfinite(span) ? 0.05 * span : 1e-3;
        }
        gsl_vector_set(step.get(), j, h);
    }

    const auto free_minimizer = [](gsl_multimin_fminimizer* m) { gsl_multimin_fminimizer_free(m); };
    std::unique_ptr<gsl_multimin_fminimizer, decltype(free_minimizer)> solver(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), free_minimizer);

    LsqResult res;
    res.method = LsqMethod::NelderMead;
    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    if (gsl_multimin_fminimizer_set(solver.get(), &objective, x.get(), step.get()) == GSL_SUCCESS) {
        const int max_iter = options.max_iterations * 20 * static_cast<int>(n + 1);
        const double scale = std::max(start.cwiseAbs().maxCoeff(), 1.0);
        int it = 0;
        for (; it < max_iter; ++it) {
            if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) {
                break;
            }
            const double size = gsl_multimin_fminimizer_size(solver.get());
            if (gsl_multimin_test_size(size, options.xtol * scale) == GSL_SUCCESS) {
                res.converged = std::isfinite(solver->fval);
                break;
            }
        }
        res.iterations = it;
    }
    gsl_set_error_handler(previous);

    const gsl_vector* best = gsl_multimin_fminimizer_x(solver.get());
    Eigen::VectorXd xb(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        xb[static_cast<Eigen::Index>(j)] = gsl_vector_get(best, j);
    }
    res.x = clamp_box(xb, lower, upper);
    res.residual_rms = rms_of(fn(res.x));
    return res;
}

LsqResult fit_least_squares(const ResidualFn& fn, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const std::string& what, const LsqOptions& options) {
    LsqResult lm = levenberg_marquardt(fn, x0, lower, upper, options);
    if (lm.converged && std::isfinite(lm.residual_rms)) {
        return lm;
    }
    LsqResult nm = nelder_mead(fn, lm.x.allFinite() ? lm.x : x0, lower, upper, options);
    if (nm.converged && std::isfinite(nm.residual_rms)) {
        return nm;
    }
    const LsqResult& best = nm.residual_rms < lm.residual_rms ? nm : lm;
    throw FitFailed(what + ": least squares did not converge", best.residual_rms, lm.iterations + nm.iterations);
}

}  // namespace nhdimer
