#pragma once

#include "nhdimer/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nhdimer {

// ---------------------------------------------------------------------------
// Reflection (S11) fitting of a hanger-type resonator

struct S11FitResult {
    double omega_res = 0.0;  ///< rad/s
    double q_int = 0.0;
    double q_c = 0.0;
    double baseline = 0.0;   ///< linear magnitude far from resonance
    double residual_rms = 0.0;

    [[nodiscard]] double kappa_int() const { return omega_res / q_int; }
    [[nodiscard]] double kappa_c() const { return omega_res / (2.0 * q_c); }

    /// Builds a result from resonance frequency and rates (all rad/s).
    static S11FitResult from_rates(double omega_res, double kappa_int, double kappa_c, double baseline);
};

/// |S11(w)| = baseline - |(w_r / 2Q_c) / (i(w_r - w) + w_r (1/Q_int + 1/Q_c))|
double s11_model(double omega_probe, const S11FitResult& fit);

/// Fits s11_model to a reflection trace (probe frequencies in Hz, linear
/// magnitudes). Throws FitFailed when there is no dip or the fit diverges.
S11FitResult s11_fit(const std::vector<double>& freq_hz, const std::vector<double>& magnitude);

// ---------------------------------------------------------------------------
// Saturable amplifier gain profile

struct GainProfile {
    double g0_db = 0.0;
    double p_sat = 0.0;  ///< W
    double b_g = 0.0;    ///< W
    double residual_rms_db = 0.0;

    /// Values reported for the measured amplifier: 20.3 dB, 0.995 mW, 7.7 mW.
    static GainProfile measured();
};

/// Output power of the amplifier. The compression factor f_G acts on the field,
/// so it enters the power gain squared:
/// P_out = P_in 10^(G0/10) f_G(P_in)^2, f_G = 1 up to P_sat, then
/// (b_G + P_sat) / (b_G + P_in).
double gain_model_output(const GainProfile& profile, double p_in);

/// Fits the piecewise model in dB. The initial P_sat is the 1 dB compression
/// point. Throws FitFailed("no knee detected") when the data never compresses.
GainProfile gain_profile_fit(const std::vector<double>& p_in_w, const std::vector<double>& p_out_w);

// ---------------------------------------------------------------------------
// Hash map: attenuator and phase-shifter settings <-> (delta_g, phi)

struct CalibrationRow {
    double phi_exp_deg = 0.0;
    double s21_db_at_gamma0 = 0.0;  ///< backward-arm S21 with zero attenuation
};

struct HashMapOptions {
    double g0_db = 20.3;
    double l_fwd_db = 0.0;        ///< forward-arm insertion loss
    double phi_ref_deg = 0.0;     ///< phi = phi_exp - phi_ref
    double attenuator_min_db = 0.0;
    double attenuator_max_db = 50.0;
    /// A row whose loss deviates from its neighbours by more than this is an outlier.
    double outlier_threshold_db = 1.0;
};

struct HashEntry {
    double delta_g_db = 0.0;
    double phi_rad = 0.0;
    double gamma_fwd_db = 0.0;
    double gamma_bwd_db = 0.0;
    double phi_exp_deg = 0.0;
    bool outlier = false;
};

struct DeviceSettings {
    double gamma_fwd_db = 0.0;
    double gamma_bwd_db = 0.0;
    double phi_exp_deg = 0.0;
};

struct ImpliedPoint {
    double delta_g_fwd_db = 0.0;
    double delta_g_bwd_db = 0.0;
    double phi_rad = 0.0;
};

struct HashMap {
    HashMapOptions options;
    std::vector<double> phi_exp_deg;  ///< ascending
    std::vector<double> loss_db;      ///< insertion loss L(phi_exp) = G0 - S21
    std::vector<bool> outlier;
    std::vector<HashEntry> entries;   ///< one per (target delta_g, phi_exp row)
    std::string source = "synthetic";

    /// Nearest non-outlier phase row, attenuations recomputed for the exact
    /// delta_g. Throws RangeError when an attenuation leaves the hardware range
    /// and DomainError when no usable row exists.
    [[nodiscard]] DeviceSettings lookup(double delta_g_db, double phi) const;

    /// Net gains and model phase produced by a device setting.
    [[nodiscard]] ImpliedPoint implied(const DeviceSettings& s) const;

    /// Angular spacing of the phase rows in radians.
    [[nodiscard]] double phi_resolution() const;
};

/// Builds the table for every target delta_g. Throws RangeError when a target
/// needs an attenuation outside [attenuator_min_db, attenuator_max_db].
HashMap hashmap_build(const std::vector<CalibrationRow>& rows, const std::vector<double>& delta_g_targets,
                      const HashMapOptions& options = {});

/// Smooth insertion-loss ripple sampled every step_deg over [0, 360], with a
/// glitch on the 360 degree row where the phase shifter wraps.
std::vector<CalibrationRow> synthetic_calibration(double g0_db = 20.3, double step_deg = 5.0,
                                                  double glitch_db = 4.0);

/// Persists the table as CSV plus a JSON sidecar next to it (path + ".json").
void save_hashmap(const HashMap& map, const std::string& csv_path);
HashMap load_hashmap(const std::string& csv_path);

// ---------------------------------------------------------------------------
// Synthetic data with optional Gaussian noise (fixed seed for reproducibility)

std::vector<double> add_noise(const std::vector<double>& clean, double sigma, std::uint64_t seed);

}  // namespace nhdimer
