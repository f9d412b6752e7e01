#include "nhdimer/lc_analytics.hpp"

#include "nhdimer/error.hpp"

#include <cmath>
#include <numbers>

namespace nhdimer {

namespace {

// At the limit cycle the beta_+ decay rate D - J(n) w vanishes. For the
// gain-dependent dissipation D = 2K, w = 1 + sin(phi/2); for constant
// dissipation D = K, w = sin(phi/2).
struct Balance {
    double d;
    double w;
};

Balance balance(const PhysicalParams& params, double phi) {
    const double k = params.mean_loss_sum();
    const double s = std::sin(0.5 * phi);
    if (params.dissipation == DissipationModel::Constant) {
        return {k, s};
    }
    return {2.0 * k, 1.0 + s};
}

// hbar omega_c kappa_c, the power carried by one photon per coupling time
double photon_power(const PhysicalParams& params) {
    return params.hbar * params.omega_c * params.kappa_c;
}

}  // namespace

std::pair<Complex, Complex> normal_modes(const FieldState& state, double phi) {
    const Complex rot = std::polar(1.0, 0.5 * phi);
    const double r = std::numbers::sqrt2 / 2.0;
    return {r * (rot * state.a1 - state.a2), r * (-rot * state.a1 - state.a2)};
}

FieldState from_normal_modes(Complex beta_plus, Complex beta_minus, double phi) {
    const Complex unrot = std::polar(1.0, -0.5 * phi);
    const double r = std::numbers::sqrt2 / 2.0;
    return {r * unrot * (beta_plus - beta_minus), -r * (beta_plus + beta_minus)};
}

NormalModeRates normal_mode_rates(const PhysicalParams& params, const OperatingPoint& op) {
    const double j0 = bare_hopping(params, op.delta_g_db);
    const double k = params.mean_loss_sum();
    const double kappa0 = params.dissipation == DissipationModel::Constant ? k : 2.0 * k - j0;
    const double s = std::sin(0.5 * op.phi);
    const double c = std::cos(0.5 * op.phi);
    const double detuning = params.omega_c - op.omega_d;
    const double split = (j0 + params.j_c) * c;
    return {kappa0 - j0 * s, kappa0 + j0 * s, detuning - split, detuning + split};
}

double lc_amplitude_formula(const PhysicalParams& params, const OperatingPoint& op) {
    const double j0 = bare_hopping(params, op.delta_g_db);
    const Balance bal = balance(params, op.phi);
    // invert f_G(n) = D / (J0 w) on the saturated branch
    const double a = photon_power(params);
    return ((params.b_g + a * params.n_sat()) * j0 * bal.w / bal.d - params.b_g) / a;
}

std::optional<double> lc_amplitude(const PhysicalParams& params, const OperatingPoint& op) {
    const double j0 = bare_hopping(params, op.delta_g_db);
    const Balance bal = balance(params, op.phi);
    if (!(j0 * bal.w > bal.d)) {
        return std::nullopt;
    }
    return lc_amplitude_formula(params, op);
}

double lc_frequency(const PhysicalParams& params, double phi) {
    const Balance bal = balance(params, phi);
    const double c = std::cos(0.5 * phi);
    return params.j_c * c + bal.d * c / bal.w;
}

double lc_convergence_rate(const PhysicalParams& params, const OperatingPoint& op) {
    const std::optional<double> n = lc_amplitude(params, op);
    if (!n) {
        throw DomainError("lc_convergence_rate: vacuum is stable at this operating point");
    }
    const Balance bal = balance(params, op.phi);
    const double a = photon_power(params);
    return 2.0 * *n * bal.d * a / (params.b_g + a * *n);
}

std::optional<LcSolution> lc_solution(const PhysicalParams& params, const OperatingPoint& op) {
    const std::optional<double> n = lc_amplitude(params, op);
    if (!n) {
        return std::nullopt;
    }
    return LcSolution{*n, lc_frequency(params, op.phi), lc_convergence_rate(params, op)};
}

}  // namespace nhdimer
