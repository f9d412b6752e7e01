#pragma once

#include "nhdimer/integrator.hpp"

#include <span>
#include <vector>

namespace nhdimer {

/// Floor used when a power or ratio is exactly zero.
inline constexpr double kPowerFloorDb = -200.0;
/// Detection threshold and reported baseline for limit-cycle emission.
inline constexpr double kLcFloorDbm = -44.0;

/// Unnormalised forward DFT y[k] = sum_n x[n] exp(-2 pi i k n / N).
std::vector<Complex> dft(std::span<const Complex> x);

/// Emission spectrum of cavity 2, bins in ascending frequency (negative bins
/// first). amp[k] = y[k] / N, so a pure tone R exp(+2 pi i f t) on a bin gives
/// amp = R at freq = f.
struct Spectrum {
    std::vector<double> freq_hz;
    std::vector<Complex> amp;
    std::vector<double> power_dbm;
    double bin_hz = 0.0;

    [[nodiscard]] std::size_t size() const { return freq_hz.size(); }
    /// Index of the bin closest to zero frequency (the drive tone).
    [[nodiscard]] std::size_t dc_index() const;
};

/// First sample kept after dropping the leading discard_fraction of the trace.
std::size_t retained_start(const Trajectory& traj, double discard_fraction);

/// Spectrum of the retained part of alpha_2(t).
Spectrum emission_spectrum(const PhysicalParams& params, const Trajectory& traj,
                           double discard_fraction = 0.2);

/// Mean of alpha_2 over the retained window (y[0] / N_kept).
Complex dc_component(const Trajectory& traj, double discard_fraction = 0.2);

/// 10 log10(kappa_in kappa_out |dc|^2 / eps^2); kPowerFloorDb for dc = 0.
double s21_db(const PhysicalParams& params, Complex dc, double epsilon);

/// Emitted power hbar omega_c n kappa_out in dBm; kPowerFloorDb for n = 0.
double photons_to_dbm(const PhysicalParams& params, double n);

struct LcObservation {
    bool present = false;
    double amp_dbm = kLcFloorDbm;
    /// delta omega_LC / 2 pi = (omega_c - omega_LC) / 2 pi, in Hz
    double freq_offset_hz = 0.0;
    double mean_photons = 0.0;
    double bin_hz = 0.0;
};

struct LcExtractOptions {
    double discard_fraction = 0.2;
    /// Traces whose mean |alpha_2|^2 is below this fraction of n_sat are vacuum.
    double vacuum_fraction = 1e-5;
    double floor_dbm = kLcFloorDbm;
};

/// Limit-cycle amplitude and frequency of an undriven run. The frequency comes
/// from the dominant FFT bin, the amplitude from the time-domain mean of
/// |alpha_2|^2 over the last 20% of the retained samples. Throws DomainError for
/// a driven trajectory.
LcObservation lc_extract(const PhysicalParams& params, const Trajectory& traj,
                         const LcExtractOptions& options = {});

/// Lowest index of the largest |y[k]| (ties resolve to the first).
std::size_t argmax_magnitude(std::span<const Complex> y);

}  // namespace nhdimer
