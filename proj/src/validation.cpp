#include "nhdimer/validation.hpp"

#include "nhdimer/calibration.hpp"
#include "nhdimer/error.hpp"
#include "nhdimer/experiments.hpp"
#include "nhdimer/lc_analytics.hpp"
#include "nhdimer/output.hpp"
#include "nhdimer/stability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace nhdimer {

namespace {

using std::numbers::pi;

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

struct Outcome {
    bool passed;
    std::string detail;
};

// Operating points shared by the amplitude and frequency checks.
struct LcPoint {
    double phi;
    double delta_g_db;
};
const std::vector<LcPoint> kLcPoints{{pi, 8.4}, {pi, 6.0}, {pi / 2.0, 8.4}, {2.5, 7.0}, {4.0, 6.5}};

// Sampling window 1 / T of a default run, the nominal FFT bin.
double nominal_bin_hz(const PhysicalParams& params) { return 1.0 / default_t_end(params); }

Outcome threshold_check() {
    const std::optional<double> dg = threshold_gain(PhysicalParams::symmetric(), pi);
    if (!dg) {
        return {false, "no threshold at phi = pi"};
    }
    const bool ok = *dg >= 4.72 && *dg <= 4.92;
    return {ok, "dG*(pi) = " + fmt("%.4f", *dg) + " dB, window [4.72, 4.92], quoted 4.78"};
}

Outcome continuity_check() {
    const PhysicalParams p = PhysicalParams::symmetric();
    double worst = 0.0;
    int evaluated = 0;
    for (int k = 0; k < 50; ++k) {
        const double phi = 2.0 * pi * (k + 0.5) / 50.0;
        const std::optional<double> dg = threshold_gain(p, phi);
        if (!dg) {
            continue;
        }
        const double n = lc_amplitude_formula(p, OperatingPoint::undriven(p, *dg, phi));
        worst = std::max(worst, std::abs(n - p.n_sat()) / p.n_sat());
        ++evaluated;
    }
    const bool ok = evaluated == 50 && worst < 1e-9;
    return {ok, std::to_string(evaluated) + " phases, max |n_LC - n_sat| / n_sat = " + fmt("%.2e", worst)};
}

Outcome lc_amplitude_check(std::size_t workers) {
    const PhysicalParams sym = PhysicalParams::symmetric();
    const PhysicalParams dev = PhysicalParams::device();
    std::vector<double> err_sym(kLcPoints.size()), err_dev(kLcPoints.size());
    parallel_for(2 * kLcPoints.size(), workers, [&](std::size_t idx) {
        const bool use_sym = idx < kLcPoints.size();
        const LcPoint pt = kLcPoints[idx % kLcPoints.size()];
        const PhysicalParams& p = use_sym ? sym : dev;
        const OperatingPoint op = OperatingPoint::undriven(p, pt.delta_g_db, pt.phi);
        const LcObservation obs = lc_extract(p, integrate(p, op));
        const double n = *lc_amplitude(sym, OperatingPoint::undriven(sym, pt.delta_g_db, pt.phi));
        (use_sym ? err_sym : err_dev)[idx % kLcPoints.size()] = std::abs(obs.mean_photons / n - 1.0);
    });
    const double ws = *std::max_element(err_sym.begin(), err_sym.end());
    const double wd = *std::max_element(err_dev.begin(), err_dev.end());
    return {ws < 0.01 && wd < 0.03, "max rel error symmetric " + fmt("%.3e", ws) + " (< 1e-2), device " +
                                        fmt("%.3e", wd) + " (< 3e-2) over 5 points"};
}

Outcome lc_frequency_check(std::size_t workers) {
    const PhysicalParams sym = PhysicalParams::symmetric();
    const PhysicalParams dev = PhysicalParams::device();
    const double tol = 2.0 * nominal_bin_hz(sym);
    std::vector<double> dev_sym(kLcPoints.size()), dev_dev(kLcPoints.size());
    parallel_for(2 * kLcPoints.size(), workers, [&](std::size_t idx) {
        const bool use_sym = idx < kLcPoints.size();
        const LcPoint pt = kLcPoints[idx % kLcPoints.size()];
        const PhysicalParams& p = use_sym ? sym : dev;
        const LcObservation obs = lc_extract(p, integrate(p, OperatingPoint::undriven(p, pt.delta_g_db, pt.phi)));
        const double expected = units::rad_to_hz(lc_frequency(sym, pt.phi));
        (use_sym ? dev_sym : dev_dev)[idx % kLcPoints.size()] = std::abs(obs.freq_offset_hz - expected);
    });
    const double ws = *std::max_element(dev_sym.begin(), dev_sym.end());
    const double wd = *std::max_element(dev_dev.begin(), dev_dev.end());
    const bool at_pi = dev_sym[0] <= tol && dev_sym[1] <= tol;
    return {ws <= tol && wd <= tol && at_pi,
            "max |df| symmetric " + fmt("%.0f", ws) + " Hz, device " + fmt("%.0f", wd) + " Hz, tolerance 2 bins = " +
                fmt("%.0f", tol) + " Hz; at phi = pi " + fmt("%.0f", std::max(dev_sym[0], dev_sym[1])) + " Hz"};
}

Outcome antisymmetry_check(std::size_t workers) {
    const PhysicalParams p = PhysicalParams::symmetric();
    const double scale = p.j_c + 2.0 * p.mean_loss_sum();
    double worst = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double x = pi * k / 101.0;
        const double a = lc_frequency(p, pi + x);
        const double b = lc_frequency(p, pi - x);
        worst = std::max(worst, std::abs(a + b) / std::max(std::abs(a), 1e-12 * scale));
    }

    const std::size_t n_phi = 24;
    SweepOptions opts;
    opts.workers = workers;
    const std::vector<double> phis = linspace(0.0, 2.0 * pi, n_phi, false);
    const PhaseDiagram pd = lc_phase_diagram(p, phis, {7.5, 8.4}, opts);
    const double tol = 2.0 * nominal_bin_hz(p);
    double num_worst = 0.0;
    int pairs = 0;
    bool mask_mismatch = false;
    const SweepGrid& g = pd.freq_offset_hz;
    for (std::size_t i = 1; i < n_phi / 2; ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            const bool a = g.status_at(i, j) == CellStatus::Valid;
            const bool b = g.status_at(n_phi - i, j) == CellStatus::Valid;
            if (a != b) {
                mask_mismatch = true;
            } else if (a) {
                num_worst = std::max(num_worst, std::abs(g.at(i, j) + g.at(n_phi - i, j)));
                ++pairs;
            }
        }
    }
    const bool ok = worst <= 1e-12 && num_worst <= tol && !mask_mismatch && pairs > 0 &&
                    g.count(CellStatus::Failed) == 0;
    return {ok, "closed form max rel " + fmt("%.1e", worst) + "; grid " + std::to_string(pairs) +
                    " mirrored pairs, max |f(pi+x) + f(pi-x)| = " + fmt("%.0f", num_worst) + " Hz (tol " +
                    fmt("%.0f", tol) + " Hz)" + (mask_mismatch ? ", limit-cycle masks not mirrored" : "")};
}

Outcome stability_agreement_check() {
    PhysicalParams p = PhysicalParams::symmetric();
    PhysicalParams p0 = p;
    p0.j_c = 0.0;
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> dg_dist(-4.6, 8.4);
    std::uniform_real_distribution<double> phi_dist(0.0, 2.0 * pi);
    const double band = 1e-9 * p.kappa_c;
    int disagreements = 0;
    int tested = 0;
    double worst_jc = 0.0;
    while (tested < 10000) {
        const OperatingPoint op = OperatingPoint::undriven(p, dg_dist(rng), phi_dist(rng));
        const StabilityReport r = is_stable(p, op);
        if (!r.criterion_valid) {
            continue;
        }
        ++tested;
        if (std::abs(r.max_re_eigenvalue) > band && (r.criterion_lhs < 1.0) != (r.max_re_eigenvalue < 0.0)) {
            ++disagreements;
        }
        const StabilityReport r0 = is_stable(p0, op);
        worst_jc = std::max(worst_jc, std::abs(r.max_re_eigenvalue - r0.max_re_eigenvalue) /
                                          std::max(std::abs(r.max_re_eigenvalue), p.kappa_c));
    }
    return {disagreements == 0 && worst_jc <= 1e-9,
            std::to_string(tested) + " points, " + std::to_string(disagreements) +
                " disagreements; max J_c effect on max Re(lambda) " + fmt("%.1e", worst_jc) + " (relative)"};
}

Outcome linear_transmission_check(std::size_t workers) {
    const PhysicalParams p = PhysicalParams::device();
    const double fc = units::rad_to_hz(p.omega_c);
    const std::vector<double> offsets_mhz{-30.0, -10.0, 0.0, 10.0, 30.0};
    std::vector<double> freqs;
    for (double o : offsets_mhz) {
        freqs.push_back(fc + o * 1e6);
    }
    SweepOptions opts;
    opts.workers = workers;
    double worst = 0.0;
    std::size_t failed = 0;
    for (const double phi : {0.0, pi}) {
        const TransmissionMap tm = transmission_sweep(p, phi, {0.0, 2.0, 4.0}, freqs, -30.0, opts);
        failed += tm.s21_db.count(CellStatus::Failed);
        for (std::size_t i = 0; i < tm.s21_db.rows(); ++i) {
            for (std::size_t j = 0; j < tm.s21_db.cols(); ++j) {
                const OperatingPoint op = OperatingPoint::driven(tm.s21_db.axis1.values[i], phi,
                                                                 units::hz_to_rad(freqs[j]), -30.0);
                const double lin = linear_s21_db(p, op);
                worst = std::max(worst, std::abs(units::db_to_power(tm.s21_db.at(i, j) - lin) - 1.0));
            }
        }
    }

    const std::vector<double> grid = default_drive_grid_hz(111);
    const TransmissionMap split = transmission_sweep(p, 0.0, {8.4}, grid, -30.0, opts);
    std::vector<double> lin_s21;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        lin_s21.push_back(units::db_to_power(split.s21_db.at(0, j)));
    }
    const LorentzianFit fit = lorentzian_fit(grid, lin_s21, 2);
    const double measured = fit.peaks[1].center_hz - fit.peaks[0].center_hz;
    const double expected = units::rad_to_hz(2.0 * (bare_hopping(p, 8.4) + p.j_c));
    const double split_err = std::abs(measured / expected - 1.0);
    const bool ok = failed == 0 && worst <= 0.01 && split_err <= 0.05 && split.s21_db.count(CellStatus::Failed) == 0;
    return {ok, "30 cells, max |S21/S21_lin - 1| = " + fmt("%.2e", worst) + "; splitting " +
                    fmt("%.3f", measured * 1e-6) + " MHz vs " + fmt("%.3f", expected * 1e-6) + " MHz (" +
                    fmt("%.2f", 100.0 * split_err) + "%)"};
}

Outcome linewidth_check(std::size_t workers) {
    const PhysicalParams p = PhysicalParams::symmetric();
    const double fc = units::rad_to_hz(p.omega_c);
    const std::vector<double> gains{2.0, 2.5, 3.0, 3.5, 4.0, 4.5};
    SweepOptions opts;
    opts.workers = workers;
    std::vector<double> fwhm;
    double worst = 0.0;
    std::string detail;
    for (const double dg : gains) {
        const NormalModeRates rates = normal_mode_rates(p, OperatingPoint::undriven(p, dg, pi));
        const double expected = units::rad_to_hz(2.0 * rates.kappa_plus0);
        const std::vector<double> grid = linspace(fc - 4.0 * expected, fc + 4.0 * expected, 41);
        const TransmissionMap tm = transmission_sweep(p, pi, {dg}, grid, -30.0, opts);
        if (tm.s21_db.count(CellStatus::Failed) != 0) {
            return {false, "integration failed at dG = " + fmt("%.1f", dg)};
        }
        std::vector<double> lin;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            lin.push_back(units::db_to_power(tm.s21_db.at(0, j)));
        }
        const LorentzianFit fit = lorentzian_fit(grid, lin, 1);
        fwhm.push_back(fit.fwhm_hz);
        const double ratio = fit.fwhm_hz / expected;
        worst = std::max(worst, std::abs(ratio - 1.0));
        detail += (detail.empty() ? "" : ", ") + fmt("%.1f", dg) + " dB: " + fmt("%.3f", ratio);
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < fwhm.size(); ++k) {
        decreasing = decreasing && fwhm[k] < fwhm[k - 1];
    }
    return {worst <= 0.10 && decreasing, "FWHM / (2 kappa_+0) = " + detail +
                                             (decreasing ? "; strictly decreasing" : "; NOT decreasing")};
}

Outcome synchronisation_check(std::size_t workers) {
    const PhysicalParams p = PhysicalParams::device();
    const double fc = units::rad_to_hz(p.omega_c);
    const std::vector<double> grid = linspace(fc - 4e6, fc + 4e6, 41);
    SweepOptions opts;
    opts.workers = workers;
    double width[2] = {0.0, 0.0};
    int outside = 0;
    int outside_ok = 0;
    std::size_t failed = 0;
    const double powers[2] = {0.0, 4.0};
    for (int k = 0; k < 2; ++k) {
        const DriveSweep sw = drive_frequency_sweep(p, pi, 8.4, powers[k], grid, opts);
        width[k] = locking_window_width(sw, fc);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            if (sw.status[j] != CellStatus::Valid) {
                ++failed;
                continue;
            }
            if (sw.peak_count[j] != 1) {
                ++outside;
                outside_ok += sw.peak_count[j] >= 3 ? 1 : 0;
            }
        }
    }
    const bool ok = failed == 0 && width[1] > width[0] && width[0] > 0.0 && outside > 0 && outside_ok == outside;
    return {ok, "locking width " + fmt("%.2f", width[0] * 1e-6) + " MHz at 0 dBm, " + fmt("%.2f", width[1] * 1e-6) +
                    " MHz at 4 dBm; " + std::to_string(outside_ok) + "/" + std::to_string(outside) +
                    " unlocked spectra show >= 3 peaks"};
}

Outcome fit_roundtrip_check() {
    std::ostringstream detail;
    bool ok = true;

    // S11: amplifier-port cavity values
    const S11FitResult truth =
        S11FitResult::from_rates(units::ghz_to_rad(6.034), units::mhz_to_rad(5.7), units::mhz_to_rad(9.9), 1.0);
    const std::vector<double> f = linspace(6.034e9 - 60e6, 6.034e9 + 60e6, 241);
    std::vector<double> mag;
    for (double fh : f) {
        mag.push_back(s11_model(units::hz_to_rad(fh), truth));
    }
    const auto s11_err = [&](const S11FitResult& r) {
        return std::max({std::abs(r.omega_res / truth.omega_res - 1.0), std::abs(r.kappa_c() / truth.kappa_c() - 1.0),
                         std::abs(r.kappa_int() / truth.kappa_int() - 1.0)});
    };
    const double e_clean = s11_err(s11_fit(f, mag));
    const double e_noisy = s11_err(s11_fit(f, add_noise(mag, 0.01, 7)));
    ok = ok && e_clean <= 0.01 && e_noisy <= 0.05;
    detail << "S11 " << fmt("%.1e", e_clean) << " / " << fmt("%.1e", e_noisy) << " (noisy)";

    // gain profile: simulator defaults
    const GainProfile g_truth{20.3, units::mw_to_w(0.9981), units::mw_to_w(8.6), 0.0};
    std::vector<double> pin, pout;
    for (double dbm : linspace(-30.0, 15.0, 61)) {
        pin.push_back(units::dbm_to_watts(dbm));
        pout.push_back(gain_model_output(g_truth, pin.back()));
    }
    const auto gain_err = [&](const GainProfile& r) {
        return std::max({std::abs(r.p_sat / g_truth.p_sat - 1.0), std::abs(r.b_g / g_truth.b_g - 1.0),
                         std::abs(r.g0_db - g_truth.g0_db) / g_truth.g0_db});
    };
    std::vector<double> pout_noisy = pout;
    const std::vector<double> noise = add_noise(std::vector<double>(pout.size(), 0.0), 0.01, 11);
    for (std::size_t k = 0; k < pout.size(); ++k) {
        pout_noisy[k] *= 1.0 + noise[k];
    }
    const double g_clean = gain_err(gain_profile_fit(pin, pout));
    const double g_noisy = gain_err(gain_profile_fit(pin, pout_noisy));
    ok = ok && g_clean <= 0.01 && g_noisy <= 0.05;
    detail << "; gain " << fmt("%.1e", g_clean) << " / " << fmt("%.1e", g_noisy) << " (noisy)";

    // hash map: build, look up every non-outlier node, read back
    const std::vector<double> targets{-4.6, 0.0, 4.0, 8.4};
    const HashMap map = hashmap_build(synthetic_calibration(), targets);
    double dg_err = 0.0;
    double phi_err = 0.0;
    for (const HashEntry& e : map.entries) {
        if (e.outlier) {
            continue;
        }
        const ImpliedPoint ip = map.implied(map.lookup(e.delta_g_db, e.phi_rad));
        dg_err = std::max({dg_err, std::abs(ip.delta_g_bwd_db - e.delta_g_db), std::abs(ip.delta_g_fwd_db - e.delta_g_db)});
        const double d = std::abs(units::wrap_phase(ip.phi_rad - e.phi_rad + pi) - pi);
        phi_err = std::max(phi_err, d);
    }
    const bool wrap_flagged = map.outlier.back();
    ok = ok && dg_err <= 0.1 && phi_err <= map.phi_resolution() && wrap_flagged;
    detail << "; hash map max dG " << fmt("%.1e", dg_err) << " dB, max dphi " << fmt("%.1e", phi_err)
           << " rad (res " << fmt("%.3f", map.phi_resolution()) << ")" << (wrap_flagged ? ", wrap row excluded" : ", wrap row NOT flagged");
    return {ok, detail.str()};
}

Outcome determinism_check(std::size_t workers) {
    const PhysicalParams p = PhysicalParams::device();
    const std::vector<double> phis = linspace(0.0, 2.0 * pi, 8, false);
    const std::vector<double> gains = linspace(4.0, 8.4, 4);
    const Curve boundary = stability_boundary(p, 200);
    const auto render = [&](std::size_t w) {
        SweepOptions opts;
        opts.workers = w;
        const PhaseDiagram pd = lc_phase_diagram(p, phis, gains, opts);
        return grid_csv(pd.amp_dbm) + grid_csv(pd.freq_offset_hz) + render_heatmap(pd.amp_dbm, boundary) +
               render_heatmap(pd.freq_offset_hz, boundary);
    };
    const std::string a = render(workers);
    const std::string b = render(1);
    return {a == b, std::to_string(a.size()) + " bytes of CSV and SVG, " + (a == b ? "identical" : "DIFFERENT") +
                        " across two runs (" + std::to_string(workers) + " and 1 workers)"};
}

const char* criterion_name(int id) {
    switch (id) {
        case 1: return "instability threshold";
        case 2: return "bifurcation continuity";
        case 3: return "limit-cycle amplitude vs closed form";
        case 4: return "limit-cycle frequency vs closed form";
        case 5: return "frequency anti-symmetry";
        case 6: return "stability criterion vs eigenvalues";
        case 7: return "linear transmission and mode splitting";
        case 8: return "linewidth collapse below threshold";
        case 9: return "injection locking window";
        case 10: return "calibration fit round-trips";
        case 11: return "phase-diagram determinism";
        default: return "unknown";
    }
}

}  // namespace

CriterionResult run_criterion(int id, const ValidationOptions& options) {
    CriterionResult r;
    r.id = id;
    r.name = criterion_name(id);
    const auto start = std::chrono::steady_clock::now();
    try {
        Outcome o{false, "unknown criterion"};
        switch (id) {
            case 1: o = threshold_check(); break;
            case 2: o = continuity_check(); break;
            case 3: o = lc_amplitude_check(options.workers); break;
            case 4: o = lc_frequency_check(options.workers); break;
            case 5: o = antisymmetry_check(options.workers); break;
            case 6: o = stability_agreement_check(); break;
            case 7: o = linear_transmission_check(options.workers); break;
            case 8: o = linewidth_check(options.workers); break;
            case 9: o = synchronisation_check(options.workers); break;
            case 10: o = fit_roundtrip_check(); break;
            case 11: o = determinism_check(options.workers); break;
            default: break;
        }
        r.passed = o.passed;
        r.detail = o.detail;
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<CriterionResult> run_acceptance(const ValidationOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
    std::vector<int> ids = options.only;
    if (ids.empty()) {
        for (int k = 1; k <= kCriterionCount; ++k) {
            ids.push_back(k);
        }
    }
    std::vector<CriterionResult> results;
    for (const int id : ids) {
        results.push_back(run_criterion(id, options));
        if (on_result) {
            on_result(results.back());
        }
    }
    return results;
}

std::string format_result(const CriterionResult& r) {
    return std::string(r.passed ? "[PASS]" : "[FAIL]") + " C" + std::to_string(r.id) + " " + r.name + " (" +
           fmt("%.1f", r.seconds) + " s): " + r.detail;
}

}  // namespace nhdimer
