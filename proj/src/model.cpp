#include "nhdimer/model.hpp"

#include "nhdimer/error.hpp"

#include <cmath>
#include <string>

namespace nhdimer {

using units::mhz_to_rad;

PhysicalParams PhysicalParams::device() {
    PhysicalParams p;
    p.omega_c = units::ghz_to_rad(6.027);
    p.kappa_int_1 = mhz_to_rad(4.1);
    p.kappa_int_2 = mhz_to_rad(4.0);
    p.kappa_in = mhz_to_rad(2.5);
    p.kappa_out = mhz_to_rad(2.3);
    p.kappa_c = mhz_to_rad(8.7);
    p.j_c = mhz_to_rad(11.5);
    p.g0_db = 20.3;
    p.b_g = units::mw_to_w(8.6);
    p.p_sat = units::mw_to_w(0.9981);
    return p;
}

PhysicalParams PhysicalParams::symmetric() {
    PhysicalParams p = device();
    p.kappa_int_1 = mhz_to_rad(4.05);
    p.kappa_int_2 = mhz_to_rad(4.05);
    p.kappa_in = mhz_to_rad(2.4);
    p.kappa_out = mhz_to_rad(2.4);
    return p;
}

bool PhysicalParams::is_symmetric(double rel_tol) const {
    const double a = loss_sum_1();
    const double b = loss_sum_2();
    return std::abs(a - b) <= rel_tol * std::max(a, b);
}

void PhysicalParams::validate() const {
    auto require_positive = [](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) {
            throw DomainError(std::string("parameter ") + name + " must be finite and positive, got " +
                              std::to_string(v));
        }
    };
    require_positive(omega_c, "omega_c");
    require_positive(kappa_int_1, "kappa_int_1");
    require_positive(kappa_int_2, "kappa_int_2");
    require_positive(kappa_in, "kappa_in");
    require_positive(kappa_out, "kappa_out");
    require_positive(kappa_c, "kappa_c");
    require_positive(b_g, "b_g");
    require_positive(p_sat, "p_sat");
    require_positive(hbar, "hbar");
    // J_c = 0 is the main-text linear model, so only negativity is rejected.
    if (!(std::isfinite(j_c) && j_c >= 0.0)) {
        throw DomainError("parameter j_c must be finite and non-negative");
    }
    if (!std::isfinite(g0_db)) {
        throw DomainError("parameter g0_db must be finite");
    }
}

OperatingPoint OperatingPoint::undriven(const PhysicalParams& params, double delta_g_db, double phi) {
    OperatingPoint op;
    op.delta_g_db = delta_g_db;
    op.phi = units::wrap_phase(phi);
    op.omega_d = params.omega_c;
    return op;
}

OperatingPoint OperatingPoint::driven(double delta_g_db, double phi, double omega_d, double p_drive_dbm) {
    OperatingPoint op;
    op.delta_g_db = delta_g_db;
    op.phi = units::wrap_phase(phi);
    op.omega_d = omega_d;
    op.p_drive_dbm = p_drive_dbm;
    return op;
}

double drive_strength(const PhysicalParams& params, const OperatingPoint& op) {
    if (!op.p_drive_dbm) {
        return 0.0;
    }
    const double p_in = units::dbm_to_watts(*op.p_drive_dbm);
    return std::sqrt(params.kappa_in * p_in / (params.hbar * op.omega_d));
}

double bare_hopping(const PhysicalParams& params, double delta_g_db) {
    return params.kappa_c * units::db_to_amplitude(delta_g_db);
}

double gain_compression(const PhysicalParams& params, double n) {
    const double n_sat = params.n_sat();
    if (n <= n_sat) {
        return 1.0;
    }
    const double scale = params.hbar * params.omega_c * params.kappa_c;
    return (params.b_g + scale * n_sat) / (params.b_g + scale * n);
}

double hopping_j(const PhysicalParams& params, double delta_g_db, double n) {
    if (!(n >= 0.0)) {
        throw DomainError("hopping_j: photon number must be non-negative, got " + std::to_string(n));
    }
    return bare_hopping(params, delta_g_db) * gain_compression(params, n);
}

double kappa_eff(const PhysicalParams& params, double delta_g_db, double n, Cavity cavity,
                 DissipationModel model) {
    const double sum = cavity == Cavity::First ? params.loss_sum_1() : params.loss_sum_2();
    if (model == DissipationModel::Constant) {
        return sum;
    }
    return 2.0 * sum - hopping_j(params, delta_g_db, n);
}

Complex coherent_coupling(const PhysicalParams& params, double phi) {
    const Complex i{0.0, 1.0};
    return i * params.j_c * std::cos(0.5 * phi) * std::polar(1.0, 0.5 * phi);
}

Matrix2c dynamical_matrix(const PhysicalParams& params, const OperatingPoint& op,
                          const FieldState& state) {
    const Complex i{0.0, 1.0};
    const double n1 = state.n1();
    const double n2 = state.n2();
    const Complex detuning = -i * (params.omega_c - op.omega_d);
    const Complex f = coherent_coupling(params, op.phi);

    Matrix2c a;
    a(0, 0) = detuning - kappa_eff(params, op.delta_g_db, n1, Cavity::First, params.dissipation);
    a(1, 1) = detuning - kappa_eff(params, op.delta_g_db, n2, Cavity::Second, params.dissipation);
    // Backward path (2 -> 1) is compressed by the amplifier fed from cavity 2,
    // forward path (1 -> 2) by the one fed from cavity 1.
    a(0, 1) = (-i * hopping_j(params, op.delta_g_db, n2) - f) * std::polar(1.0, -op.phi);
    a(1, 0) = -i * hopping_j(params, op.delta_g_db, n1) - f;
    return a;
}

Matrix2c linear_matrix(const PhysicalParams& params, const OperatingPoint& op) {
    return dynamical_matrix(params, op, FieldState{});
}

FieldState linear_steady_state(const PhysicalParams& params, const OperatingPoint& op) {
    const Matrix2c a = linear_matrix(params, op);
    const Eigen::Vector2cd b(drive_strength(params, op), 0.0);
    const Eigen::Vector2cd x = -a.partialPivLu().solve(b);
    return FieldState{x(0), x(1)};
}

}  // namespace nhdimer
