#pragma once

#include "nhdimer/spectral.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace nhdimer {

enum class CellStatus {
    Valid,
    Masked,  ///< computed, but the observable is undefined there (e.g. no limit cycle)
    Failed,  ///< the cell threw; see SweepGrid::errors
};

struct Axis {
    std::string name;  ///< column header, including the unit
    std::vector<double> values;
};

/// Row-major 2-D result grid: cell (i, j) pairs axis1.values[i] with axis2.values[j].
struct SweepGrid {
    Axis axis1;
    Axis axis2;
    std::string value_name;
    std::vector<double> values;
    std::vector<CellStatus> status;
    std::vector<std::string> errors;
    /// Fixed knobs and the run id; ordered so serialisation is deterministic.
    std::map<std::string, std::string> metadata;

    SweepGrid() = default;
    SweepGrid(Axis a1, Axis a2, std::string value);

    [[nodiscard]] std::size_t rows() const { return axis1.values.size(); }
    [[nodiscard]] std::size_t cols() const { return axis2.values.size(); }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const { return i * cols() + j; }
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values[index(i, j)]; }
    [[nodiscard]] CellStatus status_at(std::size_t i, std::size_t j) const { return status[index(i, j)]; }
    [[nodiscard]] std::size_t count(CellStatus s) const;
};

/// Runs body(i) for i in [0, n) on up to `workers` threads (0: hardware
/// concurrency). Exceptions escaping body are rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

struct SweepOptions {
    IntegratorConfig integrator{};
    std::size_t workers = 0;
    double discard_fraction = 0.2;
    LcExtractOptions lc{};
};

/// 64-bit FNV-1a digest, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

/// Canonical text describing params and integrator settings, used for run ids.
std::string describe(const PhysicalParams& params, const IntegratorConfig& cfg);

/// Uniform grid of `count` points from start to stop; the end point is dropped
/// when `endpoint` is false.
std::vector<double> linspace(double start, double stop, std::size_t count, bool endpoint = true);

// ---------------------------------------------------------------------------
// Weak-drive transmission

struct TransmissionMap {
    SweepGrid s21_db;          ///< axes: delta_g_db x drive_freq_hz
    SweepGrid lc_leakage_dbm;  ///< strongest non-drive bin, reported separately from S21
};

/// S21 from the homodyne DC component of driven integrations.
TransmissionMap transmission_sweep(const PhysicalParams& params, double phi, const std::vector<double>& delta_g_list,
                                   const std::vector<double>& drive_freq_hz, double p_drive_dbm,
                                   const SweepOptions& options = {});

/// S21 of the linear model at one operating point, from -A0^{-1} eps B.
double linear_s21_db(const PhysicalParams& params, const OperatingPoint& op);

/// Default drive band 5.98 to 6.09 GHz.
std::vector<double> default_drive_grid_hz(std::size_t count = 111);

// ---------------------------------------------------------------------------
// Limit-cycle phase diagram

struct PhaseDiagram {
    SweepGrid amp_dbm;         ///< axes: phi_rad x delta_g_db; floor where no limit cycle
    SweepGrid freq_offset_hz;  ///< masked where no limit cycle
};

PhaseDiagram lc_phase_diagram(const PhysicalParams& params, const std::vector<double>& phi_grid,
                              const std::vector<double>& delta_g_grid, const SweepOptions& options = {});

// ---------------------------------------------------------------------------
// Peak counting and synchronisation

struct PeakOptions {
    double floor_dbm = kLcFloorDbm;
    std::size_t min_separation_bins = 5;
    double prominence_db = 3.0;
};

/// Indices of local maxima above the floor whose topographic prominence is at
/// least prominence_db, merged (keeping the taller) within min_separation_bins.
std::vector<std::size_t> find_peaks(const std::vector<double>& power_dbm, const PeakOptions& options = {});

int peak_count(const std::vector<double>& power_dbm, const PeakOptions& options = {});
int peak_count(const Spectrum& spectrum, const PeakOptions& options = {});

/// One peak-count grid (axes phi_rad x delta_g_db) per drive power, drive at omega_c.
std::vector<SweepGrid> sync_power_contours(const PhysicalParams& params, const std::vector<double>& phi_grid,
                                           const std::vector<double>& delta_g_grid,
                                           const std::vector<double>& p_drive_dbm_list,
                                           const SweepOptions& options = {}, const PeakOptions& peaks = {});

struct DriveSweep {
    std::vector<double> drive_freq_hz;
    /// Spectra cropped to +-band_hz around the drive.
    std::vector<Spectrum> spectra;
    std::vector<int> peak_count;  ///< counted on the full spectrum
    std::vector<double> drive_bin_dbm;
    std::vector<CellStatus> status;
    std::vector<std::string> errors;
};

DriveSweep drive_frequency_sweep(const PhysicalParams& params, double phi, double delta_g_db, double p_drive_dbm,
                                 const std::vector<double>& drive_freq_hz, const SweepOptions& options = {},
                                 const PeakOptions& peaks = {}, double band_hz = 20e6);

/// Width in Hz of the contiguous run of single-peak drive frequencies that
/// contains the grid point nearest center_hz; zero if that point is unlocked.
double locking_window_width(const DriveSweep& sweep, double center_hz);

// ---------------------------------------------------------------------------
// Lorentzian fitting

struct LorentzianPeak {
    double center_hz = 0.0;
    double fwhm_hz = 0.0;
    double height = 0.0;
};

struct LorentzianFit {
    std::vector<LorentzianPeak> peaks;  ///< ascending centre
    double baseline = 0.0;
    double residual_rms = 0.0;
    double s21_max = 0.0;   ///< largest baseline + height over the peaks
    double fwhm_hz = 0.0;   ///< width of the tallest peak
};

/// baseline + sum_j h_j (w_j/2)^2 / ((f - c_j)^2 + (w_j/2)^2)
double lorentzian_model(const LorentzianFit& fit, double f_hz);

/// Fits n_peaks (1 or 2) Lorentzians to linear data. Throws FitFailed.
LorentzianFit lorentzian_fit(const std::vector<double>& freq_hz, const std::vector<double>& values, int n_peaks);

}  // namespace nhdimer
