// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure (integration, fit, range or failed acceptance criterion).

#include "nhdimer/calibration.hpp"
#include "nhdimer/config.hpp"
#include "nhdimer/error.hpp"
#include "nhdimer/experiments.hpp"
#include "nhdimer/lc_analytics.hpp"
#include "nhdimer/output.hpp"
#include "nhdimer/stability.hpp"
#include "nhdimer/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace nhdimer;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::string format = "csv";
    std::optional<double> phi;
    std::optional<double> delta_g;
    std::optional<double> pd_dbm;
    std::optional<std::size_t> workers;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RunConfig resolve_config(const GlobalFlags& flags) {
    RunConfig c = flags.config_path.empty() ? RunConfig{} : load_config(flags.config_path);
    if (!flags.out_dir.empty()) {
        c.out_dir = flags.out_dir;
    }
    if (const char* env = std::getenv("NHDIMER_OUT"); env != nullptr && *env != '\0') {
        c.out_dir = env;
    }
    if (flags.phi) {
        c.phi = *flags.phi;
    }
    if (flags.delta_g) {
        c.delta_g_db = *flags.delta_g;
    }
    if (flags.pd_dbm) {
        c.p_drive_dbm = *flags.pd_dbm;
    }
    if (flags.workers) {
        c.workers = *flags.workers;
    }
    if (flags.format != "csv" && flags.format != "json") {
        throw ConfigError("--format must be csv or json");
    }
    if (!OperatingPoint{c.delta_g_db, 0.0, 0.0, {}}.delta_g_in_explored_range()) {
        std::cerr << "warning: delta_g " << c.delta_g_db << " dB lies outside the explored range [-4.6, 8.4] dB\n";
    }
    return c;
}

std::string path_in(const RunConfig& c, const std::string& name) { return c.out_dir + "/" + name; }

SweepOptions sweep_options(const RunConfig& c) {
    SweepOptions o;
    o.integrator = c.integrator;
    o.workers = c.workers;
    return o;
}

void report_failures(const SweepGrid& grid) {
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        for (std::size_t j = 0; j < grid.cols(); ++j) {
            if (grid.status_at(i, j) == CellStatus::Failed) {
                std::cerr << "cell " << grid.axis1.name << "=" << grid.axis1.values[i] << ", " << grid.axis2.name
                          << "=" << grid.axis2.values[j] << " failed: " << grid.errors[grid.index(i, j)] << "\n";
            }
        }
    }
}

// Writes grid data (CSV or JSON), an SVG heatmap when requested, and the metadata sidecar.
void write_grid(const RunConfig& c, const GlobalFlags& flags, const SweepGrid& grid, const std::string& stem,
                const std::optional<Curve>& overlay) {
    if (flags.format == "json" || c.wants("json")) {
        write_text_file(path_in(c, stem + ".json"), grid_json(grid));
    }
    if (flags.format == "csv" && c.wants("csv")) {
        write_text_file(path_in(c, stem + ".csv"), grid_csv(grid));
    }
    if (c.wants("svg")) {
        write_text_file(path_in(c, stem + ".svg"), render_heatmap(grid, overlay, {stem, 0}));
    }
    write_text_file(path_in(c, stem + ".meta.json"), metadata_json(grid, {{"config", "run_config.json"}}));
    report_failures(grid);
}

int cmd_simulate(const GlobalFlags& flags) {
    const RunConfig c = resolve_config(flags);
    const PhysicalParams& p = c.physical;
    const OperatingPoint op =
        c.p_drive_dbm ? OperatingPoint::driven(c.delta_g_db, c.phi,
                                               units::hz_to_rad(c.drive_freq_hz.value_or(units::rad_to_hz(p.omega_c))),
                                               *c.p_drive_dbm)
                      : OperatingPoint::undriven(p, c.delta_g_db, c.phi);
    const Trajectory traj = integrate(p, op, c.integrator);
    const Spectrum spec = emission_spectrum(p, traj);
    write_text_file(path_in(c, "trajectory.csv"), trajectory_csv(traj));
    write_text_file(path_in(c, "spectrum.csv"), spectrum_csv(spec));
    write_text_file(path_in(c, "run_config.json"), dump_config(c));
    std::cout << "samples " << traj.size() << ", accepted steps " << traj.accepted_steps << ", rejected "
              << traj.rejected_steps << "\n";
    if (op.is_driven()) {
        const double s21 = s21_db(p, dc_component(traj), drive_strength(p, op));
        std::cout << "S21_db " << fmt(s21) << "\npeak_count " << peak_count(spec) << "\n";
    } else {
        const LcObservation obs = lc_extract(p, traj);
        std::cout << "lc_present " << (obs.present ? "true" : "false") << "\nlc_amp_dbm " << fmt(obs.amp_dbm)
                  << "\nlc_freq_offset_hz " << fmt(obs.freq_offset_hz) << "\nmean_photons " << fmt(obs.mean_photons)
                  << "\n";
    }
    return kExitOk;
}

int cmd_transmission(const GlobalFlags& flags) {
    const RunConfig c = resolve_config(flags);
    const double pd = c.p_drive_dbm.value_or(c.transmission_p_drive_dbm);
    const TransmissionMap tm = transmission_sweep(c.physical, c.phi, c.transmission_delta_g_db,
                                                  c.drive_freq_grid_hz.values(), pd, sweep_options(c));
    write_text_file(path_in(c, "run_config.json"), dump_config(c));
    write_grid(c, flags, tm.s21_db, "transmission_s21_db", std::nullopt);
    write_grid(c, flags, tm.lc_leakage_dbm, "transmission_lc_leakage_dbm", std::nullopt);
    std::cout << "transmission: " << tm.s21_db.values.size() << " cells, " << tm.s21_db.count(CellStatus::Failed)
              << " failed\n";
    return tm.s21_db.count(CellStatus::Failed) == 0 ? kExitOk : kExitNumerical;
}

int cmd_phase_diagram(const GlobalFlags& flags) {
    const RunConfig c = resolve_config(flags);
    const PhaseDiagram pd =
        lc_phase_diagram(c.physical, c.phi_grid.values(), c.delta_g_grid.values(), sweep_options(c));
    const Curve boundary = stability_boundary(c.physical);
    write_text_file(path_in(c, "run_config.json"), dump_config(c));
    write_text_file(path_in(c, "stability_boundary.csv"), boundary_csv(boundary));
    write_grid(c, flags, pd.amp_dbm, "phase_amp_dbm", boundary);
    write_grid(c, flags, pd.freq_offset_hz, "phase_freq_offset_hz", boundary);
    const std::size_t failed = pd.amp_dbm.count(CellStatus::Failed);
    std::cout << "phase-diagram: " << pd.amp_dbm.values.size() << " cells, "
              << pd.freq_offset_hz.count(CellStatus::Valid) << " with a limit cycle, " << failed << " failed\n";
    return failed == 0 ? kExitOk : kExitNumerical;
}

int cmd_sync(const GlobalFlags& flags) {
    const RunConfig c = resolve_config(flags);
    const SweepOptions opts = sweep_options(c);
    const std::vector<SweepGrid> grids = sync_power_contours(c.physical, c.phi_grid.values(), c.delta_g_grid.values(),
                                                             c.sync_p_drive_dbm, opts);
    write_text_file(path_in(c, "run_config.json"), dump_config(c));
    const Curve boundary = stability_boundary(c.physical);
    std::size_t failed = 0;
    for (std::size_t k = 0; k < grids.size(); ++k) {
        char stem[64];
        std::snprintf(stem, sizeof stem, "sync_peak_count_pd%+g_dbm", c.sync_p_drive_dbm[k]);
        write_grid(c, flags, grids[k], stem, boundary);
        failed += grids[k].count(CellStatus::Failed);
    }

    // drive-frequency sweeps at the configured operating point
    const double fc = units::rad_to_hz(c.physical.omega_c);
    const std::vector<double> fd = linspace(fc - 0.5 * c.sync_span_hz, fc + 0.5 * c.sync_span_hz, c.sync_points);
    std::string csv = "p_drive_dbm,drive_freq_hz,peak_count,drive_bin_dbm,valid\n";
    for (const double pd : c.sync_p_drive_dbm) {
        const DriveSweep sw = drive_frequency_sweep(c.physical, c.phi, c.delta_g_db, pd, fd, opts);
        for (std::size_t j = 0; j < fd.size(); ++j) {
            char row[160];
            std::snprintf(row, sizeof row, "%.10g,%.12g,%d,%.10g,%d\n", pd, fd[j], sw.peak_count[j],
                          sw.drive_bin_dbm[j], sw.status[j] == CellStatus::Valid ? 1 : 0);
            csv += row;
            if (sw.status[j] == CellStatus::Failed) {
                ++failed;
                std::cerr << "drive sweep cell p_drive_dbm=" << pd << ", drive_freq_hz=" << fd[j]
                          << " failed: " << sw.errors[j] << "\n";
            }
        }
        std::cout << "locking window at " << pd << " dBm: " << fmt(locking_window_width(sw, fc)) << " Hz\n";
    }
    write_text_file(path_in(c, "sync_drive_sweep.csv"), csv);
    return failed == 0 ? kExitOk : kExitNumerical;
}

int cmd_analytics(const GlobalFlags& flags) {
    const RunConfig c = resolve_config(flags);
    const PhysicalParams& p = c.physical;
    const OperatingPoint op = OperatingPoint::undriven(p, c.delta_g_db, c.phi);
    const StabilityReport st = is_stable(p, op);
    const NormalModeRates rates = normal_mode_rates(p, op);
    const std::optional<double> threshold = threshold_gain(p, op.phi);
    const std::optional<LcSolution> lc = lc_solution(p, op);

    nlohmann::ordered_json j;
    j["phi_rad"] = op.phi;
    j["delta_g_db"] = op.delta_g_db;
    j["threshold_delta_g_db"] = threshold ? nlohmann::ordered_json(*threshold) : nlohmann::ordered_json(nullptr);
    j["stable"] = st.stable;
    j["region"] = st.region == Region::I ? "I" : "II";
    j["max_re_eigenvalue_mhz"] = units::rad_to_mhz(st.max_re_eigenvalue);
    j["criterion_lhs"] = st.criterion_lhs;
    j["kappa_plus0_mhz"] = units::rad_to_mhz(rates.kappa_plus0);
    j["kappa_minus0_mhz"] = units::rad_to_mhz(rates.kappa_minus0);
    j["domega_plus0_mhz"] = units::rad_to_mhz(rates.domega_plus0);
    j["domega_minus0_mhz"] = units::rad_to_mhz(rates.domega_minus0);
    j["n_sat"] = p.n_sat();
    j["domega_lc_mhz"] = units::rad_to_mhz(lc_frequency(p, op.phi));
    if (lc) {
        j["n_lc"] = lc->n_lc;
        j["lc_amp_dbm"] = photons_to_dbm(p, lc->n_lc);
        j["kappa_lc_mhz"] = units::rad_to_mhz(lc->kappa_lc);
    } else {
        j["n_lc"] = nullptr;
        j["lc_amp_dbm"] = nullptr;
        j["kappa_lc_mhz"] = nullptr;
    }
    if (flags.format == "json") {
        std::cout << j.dump(2) << "\n";
    } else {
        for (const auto& [key, value] : j.items()) {
            std::cout << key << " " << (value.is_number_float() ? fmt(value.get<double>()) : value.dump()) << "\n";
        }
    }
    return kExitOk;
}

// Reads a two-column numeric CSV with the given header.
std::pair<std::vector<double>, std::vector<double>> read_two_columns(const std::string& path,
                                                                     const std::string& header) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != header) {
        throw ConfigError(path + ": expected header '" + header + "'");
    }
    std::vector<double> a, b;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        double x = 0.0, y = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) != 2) {
            throw ConfigError(path + ": malformed row '" + line + "'");
        }
        a.push_back(x);
        b.push_back(y);
    }
    return {a, b};
}

int cmd_fit_s11(const GlobalFlags& flags, const std::string& input) {
    const RunConfig c = resolve_config(flags);
    (void)c;
    const auto [f, mag] = read_two_columns(input, "freq_hz,mag_linear");
    const S11FitResult r = s11_fit(f, mag);
    std::cout << "omega_res_ghz " << fmt(units::rad_to_ghz(r.omega_res)) << "\nq_int " << fmt(r.q_int) << "\nq_c "
              << fmt(r.q_c) << "\nkappa_int_mhz " << fmt(units::rad_to_mhz(r.kappa_int())) << "\nkappa_c_mhz "
              << fmt(units::rad_to_mhz(r.kappa_c())) << "\nbaseline " << fmt(r.baseline) << "\nresidual_rms "
              << fmt(r.residual_rms) << "\n";
    return kExitOk;
}

int cmd_fit_gain(const GlobalFlags& flags, const std::string& input) {
    const RunConfig c = resolve_config(flags);
    (void)c;
    const auto [pin, pout] = read_two_columns(input, "p_in_w,p_out_w");
    const GainProfile g = gain_profile_fit(pin, pout);
    std::cout << "g0_db " << fmt(g.g0_db) << "\np_sat_mw " << fmt(units::w_to_mw(g.p_sat)) << "\nb_g_mw "
              << fmt(units::w_to_mw(g.b_g)) << "\nresidual_rms_db " << fmt(g.residual_rms_db) << "\n";
    return kExitOk;
}

int cmd_hashmap_build(const GlobalFlags& flags, const std::string& input, const std::vector<double>& targets) {
    const RunConfig c = resolve_config(flags);
    std::vector<CalibrationRow> rows;
    std::string source = "synthetic";
    if (input.empty()) {
        rows = synthetic_calibration(c.physical.g0_db);
    } else {
        const auto [deg, s21] = read_two_columns(input, "phi_exp_deg,s21_db_at_gamma0");
        for (std::size_t k = 0; k < deg.size(); ++k) {
            rows.push_back({deg[k], s21[k]});
        }
        source = input;
    }
    HashMap map = hashmap_build(rows, targets, c.hashmap);
    map.source = source;
    const std::string path = path_in(c, "hashmap.csv");
    write_text_file(path, "");
    save_hashmap(map, path);
    std::size_t outliers = 0;
    for (const bool o : map.outlier) {
        outliers += o ? 1 : 0;
    }
    std::cout << "hashmap: " << map.phi_exp_deg.size() << " phase rows, " << outliers << " outlier(s), "
              << map.entries.size() << " entries written to " << path << "\n";
    return kExitOk;
}

int cmd_hashmap_lookup(const GlobalFlags& flags, const std::string& map_path) {
    const RunConfig c = resolve_config(flags);
    const HashMap map = load_hashmap(map_path);
    const DeviceSettings s = map.lookup(c.delta_g_db, c.phi);
    const ImpliedPoint ip = map.implied(s);
    std::cout << "gamma_fwd_db " << fmt(s.gamma_fwd_db) << "\ngamma_bwd_db " << fmt(s.gamma_bwd_db)
              << "\nphi_exp_deg " << fmt(s.phi_exp_deg) << "\nimplied_delta_g_db " << fmt(ip.delta_g_bwd_db)
              << "\nimplied_phi_rad " << fmt(ip.phi_rad) << "\n";
    return kExitOk;
}

int cmd_validate(const GlobalFlags& flags, const std::vector<int>& only) {
    const RunConfig c = resolve_config(flags);
    ValidationOptions opts;
    opts.workers = c.workers;
    opts.only = only;
    int failed = 0;
    run_acceptance(opts, [&](const CriterionResult& r) {
        std::cout << format_result(r) << std::endl;
        failed += r.passed ? 0 : 1;
    });
    return failed == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and analysis of a gain-saturated, phase non-reciprocal two-cavity system"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", flags.out_dir, "output directory (NHDIMER_OUT overrides)");
    app.add_option("--format", flags.format, "data format for grids and analytics")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--phi", flags.phi, "relative hopping phase in rad");
    app.add_option("--delta-g", flags.delta_g, "net hopping gain in dB");
    app.add_option("--pd-dbm", flags.pd_dbm, "drive power in dBm");
    app.add_option("--workers", flags.workers, "worker threads (0: all cores)");

    std::string input;
    std::string map_path;
    std::vector<double> targets{-4.6, 0.0, 4.0, 8.4};
    std::vector<int> only;

    auto* simulate = app.add_subcommand("simulate", "integrate one trajectory and dump it");
    auto* transmission = app.add_subcommand("transmission", "weak-drive S21 map over delta_g and drive frequency");
    auto* phase = app.add_subcommand("phase-diagram", "limit-cycle amplitude and frequency over phi and delta_g");
    auto* sync = app.add_subcommand("sync", "peak-count maps and drive-frequency sweeps under strong drive");
    auto* analytics = app.add_subcommand("analytics", "closed-form stability and limit-cycle quantities");
    auto* fit_s11 = app.add_subcommand("fit-s11", "fit a reflection trace (CSV: freq_hz,mag_linear)");
    fit_s11->add_option("--input", input, "trace CSV")->required()->check(CLI::ExistingFile);
    auto* fit_gain = app.add_subcommand("fit-gain", "fit an amplifier gain profile (CSV: p_in_w,p_out_w)");
    fit_gain->add_option("--input", input, "profile CSV")->required()->check(CLI::ExistingFile);
    auto* hashmap = app.add_subcommand("hashmap", "build or query the device-settings lookup table");
    hashmap->require_subcommand(1);
    hashmap->fallthrough();
    auto* hm_build = hashmap->add_subcommand("build", "build from calibration CSV or a synthetic profile");
    hm_build->add_option("--input", input, "calibration CSV (phi_exp_deg,s21_db_at_gamma0); synthetic if absent")
        ->check(CLI::ExistingFile);
    hm_build->add_option("--targets", targets, "target net gains in dB");
    auto* hm_lookup = hashmap->add_subcommand("lookup", "settings for --delta-g and --phi");
    hm_lookup->add_option("--map", map_path, "hash-map CSV written by build")->required()->check(CLI::ExistingFile);
    auto* validate = app.add_subcommand("validate", "run the acceptance suite");
    validate->add_option("--only", only, "criterion ids to run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(flags);
        if (*transmission) return cmd_transmission(flags);
        if (*phase) return cmd_phase_diagram(flags);
        if (*sync) return cmd_sync(flags);
        if (*analytics) return cmd_analytics(flags);
        if (*fit_s11) return cmd_fit_s11(flags, input);
        if (*fit_gain) return cmd_fit_gain(flags, input);
        if (*hm_build) return cmd_hashmap_build(flags, input, targets);
        if (*hm_lookup) return cmd_hashmap_lookup(flags, map_path);
        if (*validate) return cmd_validate(flags, only);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitConfig;
}
