#include "nhdimer/integrator.hpp"

#include "nhdimer/error.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace nhdimer {

namespace {

namespace odeint = boost::numeric::odeint;

using State = std::array<double, 4>;

// Each dopri5 attempt (accepted or rejected) costs six right-hand-side
// evaluations thanks to first-same-as-last.
constexpr std::size_t kEvalsPerAttempt = 6;

FieldState to_field(const State& y) {
    return FieldState{Complex{y[0], y[1]}, Complex{y[2], y[3]}};
}

State to_state(const FieldState& f) {
    return {f.a1.real(), f.a1.imag(), f.a2.real(), f.a2.imag()};
}

bool all_finite(const State& y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

struct System {
    const PhysicalParams& params;
    const OperatingPoint& op;
    double eps;
    std::size_t* evals;

    void operator()(const State& y, State& dydt, double /*t*/) const {
        const FieldState s = to_field(y);
        const Matrix2c a = dynamical_matrix(params, op, s);
        dydt = to_state(FieldState{a(0, 0) * s.a1 + a(0, 1) * s.a2 + eps, a(1, 0) * s.a1 + a(1, 1) * s.a2});
        ++*evals;
    }
};

}  // namespace

double default_t_end(const PhysicalParams& params) { return 10000.0 / params.kappa_c; }

FieldState rhs(const PhysicalParams& params, const OperatingPoint& op, const FieldState& state) {
    const Matrix2c a = dynamical_matrix(params, op, state);
    const double eps = drive_strength(params, op);
    return FieldState{a(0, 0) * state.a1 + a(0, 1) * state.a2 + eps,
                      a(1, 0) * state.a1 + a(1, 1) * state.a2};
}

Trajectory integrate(const PhysicalParams& params, const OperatingPoint& op, const IntegratorConfig& cfg) {
    params.validate();
    const double t_end = cfg.t_end.value_or(default_t_end(params));
    if (!(t_end > 0.0) || cfg.samples < 2) {
        throw DomainError("integrate: need t_end > 0 and at least two samples");
    }
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)) {
        throw DomainError("integrate: tolerances must be positive");
    }
    if (!cfg.initial.finite()) {
        throw DomainError("integrate: non-finite initial state");
    }

    Trajectory traj;
    traj.driven = op.is_driven();
    traj.dt = t_end / static_cast<double>(cfg.samples - 1);
    traj.t.resize(cfg.samples);
    traj.states.resize(cfg.samples);
    for (std::size_t k = 0; k < cfg.samples; ++k) {
        traj.t[k] = traj.dt * static_cast<double>(k);
    }
    traj.t.back() = t_end;
    traj.states[0] = cfg.initial;

    const double h_max = cfg.max_step.value_or(100.0 * traj.dt);
    std::size_t evals = 0;
    const System sys{params, op, drive_strength(params, op), &evals};
    auto stepper = odeint::make_dense_output(cfg.abs_tol, cfg.rel_tol, h_max, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(to_state(cfg.initial), 0.0, std::min(1e-2 * traj.dt, h_max));

    std::size_t next = 1;
    State ys{};
    while (next < cfg.samples) {
        const double t_now = stepper.current_time();
        if (traj.accepted_steps + traj.rejected_steps >= cfg.max_steps) {
            throw IntegrationError(IntegrationError::Kind::TooManySteps, t_now, "integrate: step budget exhausted");
        }
        try {
            stepper.do_step(sys);
        } catch (const odeint::step_adjustment_error&) {
            throw IntegrationError(IntegrationError::Kind::StepUnderflow, t_now, "integrate: step size underflow");
        }
        ++traj.accepted_steps;
        const std::size_t attempts = evals / kEvalsPerAttempt;
        traj.rejected_steps = attempts > traj.accepted_steps ? attempts - traj.accepted_steps : 0;
        if (!all_finite(stepper.current_state())) {
            throw IntegrationError(IntegrationError::Kind::NonFinite, stepper.previous_time(),
                                   "integrate: non-finite state");
        }
        while (next < cfg.samples && traj.t[next] <= stepper.current_time()) {
            stepper.calc_state(traj.t[next], ys);
            traj.states[next] = to_field(ys);
            ++next;
        }
    }
    return traj;
}

}  // namespace nhdimer
