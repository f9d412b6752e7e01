#pragma once

#include "nhdimer/units.hpp"

#include <complex>
#include <optional>

namespace nhdimer {

using Complex = std::complex<double>;

/// How the on-site dissipation responds to the hopping gain.
enum class DissipationModel {
    DeltaGDependent,  ///< kappa = 2(k_int + k_io + k_c) - J(dG, n)
    Constant,         ///< kappa = k_int + k_io + k_c
};

/// Fixed device constants. Rates are angular (rad/s), powers in watts.
struct PhysicalParams {
    double omega_c = 0.0;
    double kappa_int_1 = 0.0;
    double kappa_int_2 = 0.0;
    double kappa_in = 0.0;
    double kappa_out = 0.0;
    double kappa_c = 0.0;
    double j_c = 0.0;
    double g0_db = 0.0;
    double b_g = 0.0;
    double p_sat = 0.0;
    double hbar = units::kHbar;
    DissipationModel dissipation = DissipationModel::DeltaGDependent;

    /// Device values used for every full simulation (per-cavity losses).
    static PhysicalParams device();

    /// Equal-dissipation preset used by the closed-form analytics:
    /// k_int = 4.05 MHz and k_in = k_out = 2.4 MHz (per-cavity averages).
    static PhysicalParams symmetric();

    /// Saturation photon number |alpha_sat|^2 = P_sat / (hbar omega_c kappa_c).
    [[nodiscard]] double n_sat() const { return p_sat / (hbar * omega_c * kappa_c); }

    /// Sum k_int + k_in/out + k_c for cavity 1 and 2.
    [[nodiscard]] double loss_sum_1() const { return kappa_int_1 + kappa_in + kappa_c; }
    [[nodiscard]] double loss_sum_2() const { return kappa_int_2 + kappa_out + kappa_c; }

    /// Cavity-averaged loss sum; exact for the symmetric preset.
    [[nodiscard]] double mean_loss_sum() const { return 0.5 * (loss_sum_1() + loss_sum_2()); }

    [[nodiscard]] bool is_symmetric(double rel_tol = 1e-12) const;

    /// Throws DomainError unless every rate and power is finite and positive.
    void validate() const;

    bool operator==(const PhysicalParams&) const = default;
};

/// Tunable knobs of one run.
struct OperatingPoint {
    double delta_g_db = 0.0;
    double phi = 0.0;       ///< wrapped into [0, 2*pi)
    double omega_d = 0.0;   ///< rad/s
    std::optional<double> p_drive_dbm;  ///< empty: undriven

    /// Undriven point in the frame rotating at omega_c.
    static OperatingPoint undriven(const PhysicalParams& params, double delta_g_db, double phi);
    static OperatingPoint driven(double delta_g_db, double phi, double omega_d, double p_drive_dbm);

    [[nodiscard]] bool is_driven() const { return p_drive_dbm.has_value(); }

    /// Soft bound of the experimentally explored net-gain range, [-4.6, 8.4] dB.
    [[nodiscard]] bool delta_g_in_explored_range() const {
        return delta_g_db >= -4.6 && delta_g_db <= 8.4;
    }
};

/// Complex two-mode amplitudes, in sqrt(photons).
struct FieldState {
    Complex a1{};
    Complex a2{};

    [[nodiscard]] bool finite() const {
        return std::isfinite(a1.real()) && std::isfinite(a1.imag()) &&
               std::isfinite(a2.real()) && std::isfinite(a2.imag());
    }
    [[nodiscard]] double n1() const { return std::norm(a1); }
    [[nodiscard]] double n2() const { return std::norm(a2); }

    bool operator==(const FieldState&) const = default;
};

}  // namespace nhdimer
