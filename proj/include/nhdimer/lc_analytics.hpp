#pragma once

#include "nhdimer/model.hpp"

#include <optional>
#include <utility>

namespace nhdimer {

/// Normal-mode amplitudes beta_pm = (+-e^{i phi/2} a1 - a2) / sqrt(2).
std::pair<Complex, Complex> normal_modes(const FieldState& state, double phi);

/// Inverse of normal_modes.
FieldState from_normal_modes(Complex beta_plus, Complex beta_minus, double phi);

/// Linearised decay rates and detunings of the two normal modes. The
/// eigenvalues of the linear matrix are -kappa_pm0 - i domega_pm0.
struct NormalModeRates {
    double kappa_plus0 = 0.0;
    double kappa_minus0 = 0.0;
    double domega_plus0 = 0.0;
    double domega_minus0 = 0.0;
};

/// Closed-form normal-mode rates with the cavity-averaged loss sum (exact for
/// the symmetric preset).
NormalModeRates normal_mode_rates(const PhysicalParams& params, const OperatingPoint& op);

/// Closed-form limit-cycle photon number without the stability gate. Below the
/// threshold the value is below n_sat and has no physical meaning; exactly at
/// the threshold it equals n_sat.
double lc_amplitude_formula(const PhysicalParams& params, const OperatingPoint& op);

/// Limit-cycle photon number per cavity, |alpha_i|^2, or nothing while the
/// vacuum is stable.
std::optional<double> lc_amplitude(const PhysicalParams& params, const OperatingPoint& op);

/// Limit-cycle detuning omega_c - omega_LC in rad/s. Accepts any real phi (no
/// wrapping) so the 4 pi periodicity of the closed form is visible.
double lc_frequency(const PhysicalParams& params, double phi);

/// Local exponential convergence rate towards the limit cycle. Throws
/// DomainError at a vacuum-stable point.
double lc_convergence_rate(const PhysicalParams& params, const OperatingPoint& op);

struct LcSolution {
    double n_lc = 0.0;       ///< photons per cavity
    double domega_lc = 0.0;  ///< rad/s
    double kappa_lc = 0.0;   ///< rad/s
};

/// All three limit-cycle quantities, or nothing while the vacuum is stable.
std::optional<LcSolution> lc_solution(const PhysicalParams& params, const OperatingPoint& op);

}  // namespace nhdimer
