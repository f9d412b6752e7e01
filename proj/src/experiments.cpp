#include "nhdimer/experiments.hpp"

#include "nhdimer/error.hpp"
#include "nhdimer/least_squares.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace nhdimer {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            s += ' ';
        }
        s += fmt(v[i]);
    }
    return s;
}

IntegratorConfig cell_config(const SweepOptions& options) { return options.integrator; }

// Runs one cell, recording failures instead of aborting the sweep.
template <class Fn>
void guarded(SweepGrid& grid, std::size_t idx, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        grid.values[idx] = std::numeric_limits<double>::quiet_NaN();
        grid.status[idx] = CellStatus::Failed;
        grid.errors[idx] = e.what();
    }
}

void mark_failed(SweepGrid& grid, std::size_t idx, const std::string& what) {
    grid.values[idx] = std::numeric_limits<double>::quiet_NaN();
    grid.status[idx] = CellStatus::Failed;
    grid.errors[idx] = what;
}

}  // namespace

SweepGrid::SweepGrid(Axis a1, Axis a2, std::string value)
    : axis1(std::move(a1)), axis2(std::move(a2)), value_name(std::move(value)) {
    const std::size_t n = rows() * cols();
    values.assign(n, 0.0);
    status.assign(n, CellStatus::Valid);
    errors.assign(n, std::string{});
}

std::size_t SweepGrid::count(CellStatus s) const {
    return static_cast<std::size_t>(std::count(status.begin(), status.end(), s));
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string describe(const PhysicalParams& p, const IntegratorConfig& cfg) {
    std::string s = "omega_c=" + fmt(p.omega_c) + ";kappa_int_1=" + fmt(p.kappa_int_1) +
                    ";kappa_int_2=" + fmt(p.kappa_int_2) + ";kappa_in=" + fmt(p.kappa_in) +
                    ";kappa_out=" + fmt(p.kappa_out) + ";kappa_c=" + fmt(p.kappa_c) + ";j_c=" + fmt(p.j_c) +
                    ";g0_db=" + fmt(p.g0_db) + ";b_g=" + fmt(p.b_g) + ";p_sat=" + fmt(p.p_sat) +
                    ";dissipation=" + (p.dissipation == DissipationModel::Constant ? "constant" : "delta_g_dependent");
    s += ";rel_tol=" + fmt(cfg.rel_tol) + ";abs_tol=" + fmt(cfg.abs_tol) +
         ";samples=" + std::to_string(cfg.samples) + ";t_end=" + (cfg.t_end ? fmt(*cfg.t_end) : "default") +
         ";max_step=" + (cfg.max_step ? fmt(*cfg.max_step) : "default") + ";initial=" + fmt(cfg.initial.a1.real()) +
         "," + fmt(cfg.initial.a1.imag()) + "," + fmt(cfg.initial.a2.real()) + "," + fmt(cfg.initial.a2.imag());
    return s;
}

std::vector<double> linspace(double start, double stop, std::size_t count, bool endpoint) {
    std::vector<double> v(count);
    if (count == 0) {
        return v;
    }
    if (count == 1) {
        v[0] = start;
        return v;
    }
    const double div = static_cast<double>(endpoint ? count - 1 : count);
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = start + (stop - start) * static_cast<double>(i) / div;
    }
    return v;
}

// ---------------------------------------------------------------------------

std::vector<double> default_drive_grid_hz(std::size_t count) { return linspace(5.98e9, 6.09e9, count); }

double linear_s21_db(const PhysicalParams& params, const OperatingPoint& op) {
    const FieldState eq = linear_steady_state(params, op);
    return s21_db(params, eq.a2, drive_strength(params, op));
}

TransmissionMap transmission_sweep(const PhysicalParams& params, double phi, const std::vector<double>& delta_g_list,
                                   const std::vector<double>& drive_freq_hz, double p_drive_dbm,
                                   const SweepOptions& options) {
    params.validate();
    TransmissionMap out{SweepGrid({"delta_g_db", delta_g_list}, {"drive_freq_hz", drive_freq_hz}, "s21_db"),
                        SweepGrid({"delta_g_db", delta_g_list}, {"drive_freq_hz", drive_freq_hz}, "lc_leakage_dbm")};
    const IntegratorConfig cfg = cell_config(options);
    const std::size_t n = out.s21_db.values.size();

    parallel_for(n, options.workers, [&](std::size_t idx) {
        const std::size_t i = idx / out.s21_db.cols();
        const std::size_t j = idx % out.s21_db.cols();
        try {
            const OperatingPoint op = OperatingPoint::driven(delta_g_list[i], phi, units::hz_to_rad(drive_freq_hz[j]),
                                                             p_drive_dbm);
            const Trajectory traj = integrate(params, op, cfg);
            out.s21_db.values[idx] = s21_db(params, dc_component(traj, options.discard_fraction),
                                            drive_strength(params, op));

            const Spectrum spec = emission_spectrum(params, traj, options.discard_fraction);
            const std::size_t dc = spec.dc_index();
            double leak = kPowerFloorDb;
            for (std::size_t k = 0; k < spec.size(); ++k) {
                if (k + 2 < dc || k > dc + 2) {
                    leak = std::max(leak, spec.power_dbm[k]);
                }
            }
            out.lc_leakage_dbm.values[idx] = leak;
        } catch (const std::exception& e) {
            mark_failed(out.s21_db, idx, e.what());
            mark_failed(out.lc_leakage_dbm, idx, e.what());
        }
    });

    const std::string run_id = fnv1a_hex(describe(params, cfg) + ";transmission;phi=" + fmt(phi) +
                                         ";dg=" + join(delta_g_list) + ";fd=" + join(drive_freq_hz) +
                                         ";pd=" + fmt(p_drive_dbm));
    for (SweepGrid* g : {&out.s21_db, &out.lc_leakage_dbm}) {
        g->metadata = {{"experiment", "transmission"},
                       {"phi_rad", fmt(phi)},
                       {"p_drive_dbm", fmt(p_drive_dbm)},
                       {"run_id", run_id}};
    }
    return out;
}

// ---------------------------------------------------------------------------

PhaseDiagram lc_phase_diagram(const PhysicalParams& params, const std::vector<double>& phi_grid,
                              const std::vector<double>& delta_g_grid, const SweepOptions& options) {
    params.validate();
    PhaseDiagram out{SweepGrid({"phi_rad", phi_grid}, {"delta_g_db", delta_g_grid}, "amp_dbm"),
                     SweepGrid({"phi_rad", phi_grid}, {"delta_g_db", delta_g_grid}, "freq_offset_hz")};
    const IntegratorConfig cfg = cell_config(options);
    LcExtractOptions lc = options.lc;
    lc.discard_fraction = options.discard_fraction;

    parallel_for(out.amp_dbm.values.size(), options.workers, [&](std::size_t idx) {
        const std::size_t i = idx / out.amp_dbm.cols();
        const std::size_t j = idx % out.amp_dbm.cols();
        guarded(out.amp_dbm, idx, [&] {
            const OperatingPoint op = OperatingPoint::undriven(params, delta_g_grid[j], phi_grid[i]);
            const LcObservation obs = lc_extract(params, integrate(params, op, cfg), lc);
            out.amp_dbm.values[idx] = obs.amp_dbm;
            if (obs.present) {
                out.freq_offset_hz.values[idx] = obs.freq_offset_hz;
            } else {
                out.freq_offset_hz.values[idx] = std::numeric_limits<double>::quiet_NaN();
                out.freq_offset_hz.status[idx] = CellStatus::Masked;
            }
        });
        if (out.amp_dbm.status[idx] == CellStatus::Failed) {
            mark_failed(out.freq_offset_hz, idx, out.amp_dbm.errors[idx]);
        }
    });

    const std::string run_id = fnv1a_hex(describe(params, cfg) + ";phase-diagram;phi=" + join(phi_grid) +
                                         ";dg=" + join(delta_g_grid));
    for (SweepGrid* g : {&out.amp_dbm, &out.freq_offset_hz}) {
        g->metadata = {{"experiment", "phase-diagram"}, {"floor_dbm", fmt(lc.floor_dbm)}, {"run_id", run_id}};
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> find_peaks(const std::vector<double>& p, const PeakOptions& options) {
    const std::size_t n = p.size();
    struct Candidate {
        std::size_t index;
        double height;
    };
    std::vector<Candidate> accepted;
    for (std::size_t k = 0; k < n; ++k) {
        if (p[k] < options.floor_dbm) {
            continue;
        }
        if (k > 0 && !(p[k] > p[k - 1])) {
            continue;
        }
        // a plateau counts once, at its first index, if it falls off on the right
        std::size_t end = k;
        while (end + 1 < n && p[end + 1] == p[k]) {
            ++end;
        }
        if (end + 1 < n && p[end + 1] > p[k]) {
            continue;
        }
        if (k == 0 && end + 1 >= n) {
            continue;  // constant input
        }
        double left_min = p[k];
        for (std::size_t i = k; i-- > 0 && p[i] <= p[k];) {
            left_min = std::min(left_min, p[i]);
        }
        double right_min = p[k];
        for (std::size_t i = end + 1; i < n && p[i] <= p[k]; ++i) {
            right_min = std::min(right_min, p[i]);
        }
        const double prominence = p[k] - std::max(left_min, right_min);
        if (prominence >= options.prominence_db) {
            accepted.push_back({k, p[k]});
        }
    }
    std::stable_sort(accepted.begin(), accepted.end(),
                     [](const Candidate& a, const Candidate& b) { return a.height > b.height; });
    std::vector<std::size_t> kept;
    for (const Candidate& c : accepted) {
        const bool near = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            const std::size_t d = k > c.index ? k - c.index : c.index - k;
            return d <= options.min_separation_bins;
        });
        if (!near) {
            kept.push_back(c.index);
        }
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

int peak_count(const std::vector<double>& power_dbm, const PeakOptions& options) {
    return static_cast<int>(find_peaks(power_dbm, options).size());
}

int peak_count(const Spectrum& spectrum, const PeakOptions& options) {
    return peak_count(spectrum.power_dbm, options);
}

std::vector<SweepGrid> sync_power_contours(const PhysicalParams& params, const std::vector<double>& phi_grid,
                                           const std::vector<double>& delta_g_grid,
                                           const std::vector<double>& p_drive_dbm_list, const SweepOptions& options,
                                           const PeakOptions& peaks) {
    params.validate();
    const IntegratorConfig cfg = cell_config(options);
    std::vector<SweepGrid> grids;
    grids.reserve(p_drive_dbm_list.size());
    for (std::size_t g = 0; g < p_drive_dbm_list.size(); ++g) {
        grids.emplace_back(Axis{"phi_rad", phi_grid}, Axis{"delta_g_db", delta_g_grid}, "peak_count");
    }
    const std::size_t per_grid = phi_grid.size() * delta_g_grid.size();

    parallel_for(per_grid * grids.size(), options.workers, [&](std::size_t flat) {
        const std::size_t g = flat / per_grid;
        const std::size_t idx = flat % per_grid;
        SweepGrid& grid = grids[g];
        const std::size_t i = idx / grid.cols();
        const std::size_t j = idx % grid.cols();
        guarded(grid, idx, [&] {
            const OperatingPoint op =
                OperatingPoint::driven(delta_g_grid[j], phi_grid[i], params.omega_c, p_drive_dbm_list[g]);
            const Trajectory traj = integrate(params, op, cfg);
            grid.values[idx] = peak_count(emission_spectrum(params, traj, options.discard_fraction), peaks);
        });
    });

    for (std::size_t g = 0; g < grids.size(); ++g) {
        const std::string run_id =
            fnv1a_hex(describe(params, cfg) + ";sync;phi=" + join(phi_grid) + ";dg=" + join(delta_g_grid) +
                      ";pd=" + fmt(p_drive_dbm_list[g]));
        grids[g].metadata = {{"experiment", "sync"}, {"p_drive_dbm", fmt(p_drive_dbm_list[g])}, {"run_id", run_id}};
    }
    return grids;
}

DriveSweep drive_frequency_sweep(const PhysicalParams& params, double phi, double delta_g_db, double p_drive_dbm,
                                 const std::vector<double>& drive_freq_hz, const SweepOptions& options,
                                 const PeakOptions& peaks, double band_hz) {
    params.validate();
    const IntegratorConfig cfg = cell_config(options);
    const std::size_t n = drive_freq_hz.size();
    DriveSweep out;
    out.drive_freq_hz = drive_freq_hz;
    out.spectra.resize(n);
    out.peak_count.assign(n, 0);
    out.drive_bin_dbm.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.status.assign(n, CellStatus::Valid);
    out.errors.assign(n, std::string{});

    parallel_for(n, options.workers, [&](std::size_t k) {
        try {
            const OperatingPoint op =
                OperatingPoint::driven(delta_g_db, phi, units::hz_to_rad(drive_freq_hz[k]), p_drive_dbm);
            const Spectrum full = emission_spectrum(params, integrate(params, op, cfg), options.discard_fraction);
            out.peak_count[k] = peak_count(full, peaks);
            out.drive_bin_dbm[k] = full.power_dbm[full.dc_index()];

            Spectrum cropped;
            cropped.bin_hz = full.bin_hz;
            for (std::size_t b = 0; b < full.size(); ++b) {
                if (std::abs(full.freq_hz[b]) <= band_hz) {
                    cropped.freq_hz.push_back(full.freq_hz[b]);
                    cropped.amp.push_back(full.amp[b]);
                    cropped.power_dbm.push_back(full.power_dbm[b]);
                }
            }
            out.spectra[k] = std::move(cropped);
        } catch (const std::exception& e) {
            out.status[k] = CellStatus::Failed;
            out.errors[k] = e.what();
        }
    });
    return out;
}

double locking_window_width(const DriveSweep& sweep, double center_hz) {
    const std::size_t n = sweep.drive_freq_hz.size();
    if (n == 0) {
        return 0.0;
    }
    std::size_t c = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (std::abs(sweep.drive_freq_hz[k] - center_hz) < std::abs(sweep.drive_freq_hz[c] - center_hz)) {
            c = k;
        }
    }
    const auto locked = [&](std::size_t k) { return sweep.status[k] == CellStatus::Valid && sweep.peak_count[k] == 1; };
    if (!locked(c)) {
        return 0.0;
    }
    std::size_t lo = c;
    while (lo > 0 && locked(lo - 1)) {
        --lo;
    }
    std::size_t hi = c;
    while (hi + 1 < n && locked(hi + 1)) {
        ++hi;
    }
    return std::abs(sweep.drive_freq_hz[hi] - sweep.drive_freq_hz[lo]);
}

// ---------------------------------------------------------------------------

double lorentzian_model(const LorentzianFit& fit, double f_hz) {
    double y = fit.baseline;
    for (const LorentzianPeak& p : fit.peaks) {
        const double hw = 0.5 * p.fwhm_hz;
        const double d = f_hz - p.center_hz;
        y += p.height * hw * hw / (d * d + hw * hw);
    }
    return y;
}

LorentzianFit lorentzian_fit(const std::vector<double>& freq_hz, const std::vector<double>& values, int n_peaks) {
    if (n_peaks != 1 && n_peaks != 2) {
        throw DomainError("lorentzian_fit: n_peaks must be 1 or 2");
    }
    const std::size_t m = freq_hz.size();
    if (values.size() != m) {
        throw DomainError("lorentzian_fit: frequency and value arrays differ in length");
    }
    if (m < 8 * static_cast<std::size_t>(n_peaks)) {
        throw DomainError("lorentzian_fit: needs at least 8 samples per peak");
    }
    if (!std::is_sorted(freq_hz.begin(), freq_hz.end())) {
        throw DomainError("lorentzian_fit: frequencies must be ascending");
    }

    // work in normalised units: x in spans from the window centre, y in units of max
    const double f_lo = freq_hz.front();
    const double f_hi = freq_hz.back();
    const double span = f_hi - f_lo;
    const double f_mid = 0.5 * (f_lo + f_hi);
    const double y_max = *std::max_element(values.begin(), values.end());
    const double y_min = *std::min_element(values.begin(), values.end());
    if (!(span > 0.0) || !(y_max > 0.0) || !(y_max > y_min)) {
        throw FitFailed("lorentzian_fit: data has no peak", 0.0, 0);
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(m));
    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    double min_spacing = span;
    for (std::size_t k = 0; k < m; ++k) {
        x[static_cast<Eigen::Index>(k)] = (freq_hz[k] - f_mid) / span;
        y[static_cast<Eigen::Index>(k)] = values[k] / y_max;
        if (k > 0) {
            min_spacing = std::min(min_spacing, freq_hz[k] - freq_hz[k - 1]);
        }
    }
    const double w_min = min_spacing / span;
    const double base0 = y_min / y_max;

    // initial peaks: tallest local maxima, kept apart by a few samples
    std::vector<std::size_t> maxima;
    for (std::size_t k = 0; k < m; ++k) {
        const bool left_ok = k == 0 || values[k] >= values[k - 1];
        const bool right_ok = k + 1 == m || values[k] >= values[k + 1];
        if (left_ok && right_ok) {
            maxima.push_back(k);
        }
    }
    std::stable_sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<std::size_t> seeds;
    for (std::size_t k : maxima) {
        const bool far = std::all_of(seeds.begin(), seeds.end(), [&](std::size_t s) {
            return (s > k ? s - k : k - s) >= 3;
        });
        if (far) {
            seeds.push_back(k);
        }
        if (seeds.size() == static_cast<std::size_t>(n_peaks)) {
            break;
        }
    }
    if (seeds.size() < static_cast<std::size_t>(n_peaks)) {
        throw FitFailed("lorentzian_fit: fewer local maxima than requested peaks", 0.0, 0);
    }

    const Eigen::Index np = 1 + 3 * n_peaks;
    Eigen::VectorXd p0(np), lo(np), hi(np);
    p0[0] = base0;
    lo[0] = -1.0;
    hi[0] = 1.0;
    for (int j = 0; j < n_peaks; ++j) {
        const std::size_t s = seeds[static_cast<std::size_t>(j)];
        const double ys = values[s] / y_max;
        const double half = 0.5 * (ys + base0);
        std::size_t l = s;
        while (l > 0 && values[l] / y_max > half) {
            --l;
        }
        std::size_t r = s;
        while (r + 1 < m && values[r] / y_max > half) {
            ++r;
        }
        double w0 = x[static_cast<Eigen::Index>(r)] - x[static_cast<Eigen::Index>(l)];
        w0 = std::clamp(w0, w_min, 1.0);
        const Eigen::Index o = 1 + 3 * j;
        p0[o] = std::max(ys - base0, 1e-6);
        p0[o + 1] = x[static_cast<Eigen::Index>(s)];
        p0[o + 2] = w0;
        lo[o] = 0.0;
        hi[o] = 10.0;
        lo[o + 1] = x[0];
        hi[o + 1] = x[static_cast<Eigen::Index>(m - 1)];
        lo[o + 2] = w_min;
        hi[o + 2] = 1.0;
    }

    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(m));
        for (Eigen::Index k = 0; k < r.size(); ++k) {
            double model = p[0];
            for (int j = 0; j < n_peaks; ++j) {
                const Eigen::Index o = 1 + 3 * j;
                const double hw = 0.5 * p[o + 2];
                const double d = x[k] - p[o + 1];
                model += p[o] * hw * hw / (d * d + hw * hw);
            }
            r[k] = model - y[k];
        }
        return r;
    };

    const LsqResult res = fit_least_squares(residual, p0, lo, hi, "lorentzian_fit");

    LorentzianFit fit;
    fit.baseline = res.x[0] * y_max;
    fit.residual_rms = res.residual_rms * y_max;
    double tallest = -1.0;
    for (int j = 0; j < n_peaks; ++j) {
        const Eigen::Index o = 1 + 3 * j;
        LorentzianPeak pk{f_mid + res.x[o + 1] * span, res.x[o + 2] * span, res.x[o] * y_max};
        if (!(pk.fwhm_hz > 0.0) || !std::isfinite(pk.center_hz) || !std::isfinite(pk.height)) {
            throw FitFailed("lorentzian_fit: degenerate peak", fit.residual_rms, res.iterations);
        }
        fit.s21_max = std::max(fit.s21_max, fit.baseline + pk.height);
        if (pk.height > tallest) {
            tallest = pk.height;
            fit.fwhm_hz = pk.fwhm_hz;
        }
        fit.peaks.push_back(pk);
    }
    std::sort(fit.peaks.begin(), fit.peaks.end(),
              [](const LorentzianPeak& a, const LorentzianPeak& b) { return a.center_hz < b.center_hz; });
    if (!std::isfinite(fit.residual_rms)) {
        throw FitFailed("lorentzian_fit: non-finite residual", fit.residual_rms, res.iterations);
    }
    return fit;
}

}  // namespace nhdimer
