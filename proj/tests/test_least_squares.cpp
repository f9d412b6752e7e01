#include "catch_amalgamated.hpp"

#include "nhdimer/error.hpp"
#include "nhdimer/least_squares.hpp"

#include <limits>

using namespace nhdimer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (const double e : v) {
        x(i++) = e;
    }
    return x;
}

Eigen::VectorXd rosenbrock(const Eigen::VectorXd& x) { return vec({10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0)}); }

// Exponential decay samples y = a exp(-k t) + c.
struct DecayData {
    std::vector<double> t, y;
    DecayData(double a, double k, double c) {
        for (int i = 0; i < 50; ++i) {
            t.push_back(0.1 * i);
            y.push_back(a * std::exp(-k * t.back()) + c);
        }
    }
    [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& p) const {
        Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
        for (std::size_t i = 0; i < t.size(); ++i) {
            r(static_cast<Eigen::Index>(i)) = p(0) * std::exp(-p(1) * t[i]) + p(2) - y[i];
        }
        return r;
    }
};

const Eigen::VectorXd kOpenLo = vec({-1e9, -1e9});
const Eigen::VectorXd kOpenHi = vec({1e9, 1e9});

}  // namespace

TEST_CASE("Levenberg-Marquardt solves Rosenbrock", "[lsq]") {
    const LsqResult r = levenberg_marquardt(rosenbrock, vec({-1.2, 1.0}), kOpenLo, kOpenHi);
    CHECK(r.converged);
    CHECK(r.method == LsqMethod::LevenbergMarquardt);
    CHECK_THAT(r.x(0), WithinAbs(1.0, 1e-6));
    CHECK_THAT(r.x(1), WithinAbs(1.0, 1e-6));
    CHECK(r.residual_rms < 1e-8);
}

TEST_CASE("Nelder-Mead solves Rosenbrock", "[lsq]") {
    LsqOptions opts;
    opts.max_iterations = 5000;
    const LsqResult r = nelder_mead(rosenbrock, vec({-1.2, 1.0}), kOpenLo, kOpenHi, opts);
    CHECK(r.converged);
    CHECK(r.method == LsqMethod::NelderMead);
    CHECK_THAT(r.x(0), WithinAbs(1.0, 1e-4));
    CHECK_THAT(r.x(1), WithinAbs(1.0, 1e-4));
}

TEST_CASE("nonlinear curve fit recovers parameters", "[lsq]") {
    const DecayData data(3.0, 1.7, 0.25);
    const auto fn = [&](const Eigen::VectorXd& p) { return data.residual(p); };
    const LsqResult r = fit_least_squares(fn, vec({1.0, 0.5, 0.0}), vec({0.0, 0.0, -1.0}), vec({10.0, 10.0, 1.0}), "decay");
    CHECK_THAT(r.x(0), WithinRel(3.0, 1e-8));
    CHECK_THAT(r.x(1), WithinRel(1.7, 1e-8));
    CHECK_THAT(r.x(2), WithinRel(0.25, 1e-8));
}

TEST_CASE("box constraints are respected", "[lsq]") {
    // unconstrained optimum at (3, -2), box excludes it
    const auto fn = [](const Eigen::VectorXd& x) { return vec({x(0) - 3.0, x(1) + 2.0}); };
    const Eigen::VectorXd lo = vec({0.0, 0.0});
    const Eigen::VectorXd hi = vec({2.0, 5.0});
    for (const LsqResult& r : {levenberg_marquardt(fn, vec({1.0, 1.0}), lo, hi), nelder_mead(fn, vec({1.0, 1.0}), lo, hi)}) {
        CHECK_THAT(r.x(0), WithinAbs(2.0, 1e-6));
        CHECK_THAT(r.x(1), WithinAbs(0.0, 1e-6));
    }
    // starting point outside the box is clamped
    const LsqResult c = levenberg_marquardt(fn, vec({-5.0, 9.0}), lo, hi);
    CHECK(c.x(0) >= 0.0);
    CHECK(c.x(1) <= 5.0);
}

TEST_CASE("fit_least_squares reports failure", "[lsq]") {
    const auto nan_fn = [](const Eigen::VectorXd&) {
        return vec({std::numeric_limits<double>::quiet_NaN()});
    };
    LsqOptions opts;
    opts.max_iterations = 50;
    try {
        fit_least_squares(nan_fn, vec({1.0}), vec({0.0}), vec({2.0}), "broken model", opts);
        FAIL("expected FitFailed");
    } catch (const FitFailed& e) {
        CHECK(std::string(e.what()).find("broken model") != std::string::npos);
        CHECK(e.iterations() >= 0);
    }
}
