#pragma once

#include "nhdimer/params.hpp"

#include <Eigen/Dense>

namespace nhdimer {

using Matrix2c = Eigen::Matrix2cd;

enum class Cavity { First, Second };

/// Coherent drive rate eps = sqrt(kappa_in P_in / (hbar omega_d)); zero when undriven.
double drive_strength(const PhysicalParams& params, const OperatingPoint& op);

/// Low-power hopping rate J0 = kappa_c 10^(dG/20).
double bare_hopping(const PhysicalParams& params, double delta_g_db);

/// Amplifier compression factor f_G(n): 1 up to n_sat, then
/// (b_G + hbar w_c n_sat k_c) / (b_G + hbar w_c n k_c).
double gain_compression(const PhysicalParams& params, double n);

/// Saturable hopping J(dG, n) = J0(dG) f_G(n). Throws DomainError for n < 0.
double hopping_j(const PhysicalParams& params, double delta_g_db, double n);

/// Effective on-site dissipation of one cavity at photon number n.
double kappa_eff(const PhysicalParams& params, double delta_g_db, double n, Cavity cavity,
                 DissipationModel model);

/// Phenomenological coherent coupling f(phi) = i J_c cos(phi/2) e^{i phi/2}.
Complex coherent_coupling(const PhysicalParams& params, double phi);

/// Amplitude-dependent dynamical matrix A(|a1|^2, |a2|^2) in the frame rotating at omega_d.
Matrix2c dynamical_matrix(const PhysicalParams& params, const OperatingPoint& op,
                          const FieldState& state);

/// Linearised matrix A0 = A(0, 0).
Matrix2c linear_matrix(const PhysicalParams& params, const OperatingPoint& op);

/// Equilibrium of the linear model, -A0^{-1} (eps, 0)^T.
FieldState linear_steady_state(const PhysicalParams& params, const OperatingPoint& op);

}  // namespace nhdimer
