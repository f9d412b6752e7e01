#include "catch_amalgamated.hpp"

#include "nhdimer/error.hpp"
#include "nhdimer/experiments.hpp"
#include "nhdimer/lc_analytics.hpp"
#include "nhdimer/stability.hpp"

#include <atomic>
#include <numbers>
#include <random>

using namespace nhdimer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

constexpr double kPi = std::numbers::pi;

namespace {

std::vector<double> lorentzians(const std::vector<double>& f, const std::vector<LorentzianPeak>& peaks, double base) {
    LorentzianFit fit;
    fit.peaks = peaks;
    fit.baseline = base;
    std::vector<double> y;
    for (const double x : f) {
        y.push_back(lorentzian_model(fit, x));
    }
    return y;
}

double linear_ratio(double db_a, double db_b) { return std::pow(10.0, (db_a - db_b) / 10.0); }

}  // namespace

TEST_CASE("grid helpers", "[experiments]") {
    const auto a = linspace(0.0, 1.0, 5);
    REQUIRE(a.size() == 5);
    CHECK(a.front() == 0.0);
    CHECK(a.back() == 1.0);
    const auto b = linspace(0.0, 1.0, 4, false);
    CHECK(b == std::vector<double>{0.0, 0.25, 0.5, 0.75});
    CHECK(linspace(2.0, 3.0, 1) == std::vector<double>{2.0});

    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(describe(PhysicalParams::device(), {}) == describe(PhysicalParams::device(), {}));
    CHECK(describe(PhysicalParams::device(), {}) != describe(PhysicalParams::symmetric(), {}));

    const auto grid = default_drive_grid_hz();
    REQUIRE(grid.size() == 111);
    CHECK_THAT(grid.front(), WithinRel(5.98e9, 1e-15));
    CHECK_THAT(grid.back(), WithinRel(6.09e9, 1e-15));

    SweepGrid g(Axis{"x", {1.0, 2.0}}, Axis{"y", {1.0, 2.0, 3.0}}, "v");
    CHECK(g.rows() == 2);
    CHECK(g.cols() == 3);
    CHECK(g.index(1, 2) == 5);
    CHECK(g.values.size() == 6);
    CHECK(g.count(CellStatus::Valid) == 6);
}

TEST_CASE("parallel_for visits every index once", "[experiments]") {
    for (const std::size_t workers : {std::size_t{0}, std::size_t{1}, std::size_t{4}}) {
        std::vector<std::atomic<int>> hits(257);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i].fetch_add(1); });
        for (const auto& h : hits) {
            CHECK(h.load() == 1);
        }
    }
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) {
                                         throw DomainError("boom");
                                     }
                                 }),
                    DomainError);
}

TEST_CASE("peak counting", "[experiments]") {
    std::vector<double> flat(200, -200.0);
    CHECK(peak_count(flat) == 0);

    std::vector<double> one = flat;
    one[100] = -10.0;
    CHECK(peak_count(one) == 1);

    std::vector<double> three = flat;
    three[40] = -20.0;
    three[55] = -12.0;
    three[70] = -30.0;
    CHECK(peak_count(three) == 3);
    CHECK(find_peaks(three) == std::vector<std::size_t>{40, 55, 70});

    SECTION("neighbours within the separation merge, keeping the taller") {
        std::vector<double> close = flat;
        close[100] = -20.0;
        close[103] = -10.0;
        CHECK(find_peaks(close) == std::vector<std::size_t>{103});
    }
    SECTION("below floor or without prominence") {
        std::vector<double> low = flat;
        low[50] = -50.0;
        CHECK(peak_count(low) == 0);
        std::vector<double> shoulder(200, -200.0);
        for (std::size_t k = 80; k <= 120; ++k) {
            shoulder[k] = -10.0;
        }
        shoulder[110] = -9.0;  // only 1 dB above its saddle
        shoulder[90] = -8.0;
        CHECK(peak_count(shoulder) == 1);
    }
    SECTION("a plateau is one peak") {
        std::vector<double> plateau = flat;
        for (std::size_t k = 60; k < 66; ++k) {
            plateau[k] = -15.0;
        }
        CHECK(find_peaks(plateau) == std::vector<std::size_t>{60});
    }
    SECTION("spectrum overload") {
        Spectrum s;
        s.power_dbm = three;
        s.freq_hz.assign(three.size(), 0.0);
        CHECK(peak_count(s) == 3);
    }
}

TEST_CASE("Lorentzian fits on synthetic data", "[experiments]") {
    const auto f = linspace(5.98e9, 6.09e9, 221);

    SECTION("single peak, no noise") {
        const LorentzianPeak truth{6.027e9, 8e6, 0.004};
        const LorentzianFit fit = lorentzian_fit(f, lorentzians(f, {truth}, 1e-4), 1);
        REQUIRE(fit.peaks.size() == 1);
        CHECK_THAT(fit.peaks[0].center_hz, WithinRel(truth.center_hz, 1e-3));
        CHECK_THAT(fit.peaks[0].fwhm_hz, WithinRel(truth.fwhm_hz, 1e-3));
        CHECK_THAT(fit.peaks[0].height, WithinRel(truth.height, 1e-3));
        CHECK_THAT(fit.baseline, WithinRel(1e-4, 1e-3));
        CHECK_THAT(fit.fwhm_hz, WithinRel(truth.fwhm_hz, 1e-3));
        CHECK_THAT(fit.s21_max, WithinRel(truth.height + 1e-4, 1e-3));
    }
    SECTION("double peak, 3:1 heights, 30 MHz apart") {
        const LorentzianPeak a{6.012e9, 6e6, 0.003};
        const LorentzianPeak b{6.042e9, 6e6, 0.001};
        const LorentzianFit fit = lorentzian_fit(f, lorentzians(f, {a, b}, 0.0), 2);
        REQUIRE(fit.peaks.size() == 2);
        CHECK(std::abs(fit.peaks[0].center_hz - a.center_hz) < 0.01 * 30e6);
        CHECK(std::abs(fit.peaks[1].center_hz - b.center_hz) < 0.01 * 30e6);
        CHECK_THAT(fit.fwhm_hz, WithinRel(a.fwhm_hz, 1e-2));
    }
    SECTION("input errors") {
        const auto y = lorentzians(f, {{6.027e9, 8e6, 1.0}}, 0.0);
        CHECK_THROWS_AS(lorentzian_fit(f, y, 3), DomainError);
        CHECK_THROWS_AS(lorentzian_fit({1.0, 2.0, 3.0}, {0.0, 1.0, 0.0}, 1), DomainError);
        CHECK_THROWS_AS(lorentzian_fit(f, std::vector<double>(f.size(), 1.0), 1), FitFailed);
    }
}

TEST_CASE("linear transmission against the oracle", "[experiments]") {
    const PhysicalParams p = PhysicalParams::device();
    const double fc = units::rad_to_hz(p.omega_c);
    const auto at = [&](double dg, double phi, double det_hz) {
        return linear_s21_db(p, OperatingPoint::driven(dg, phi, units::hz_to_rad(fc + det_hz), -30.0));
    };
    CHECK_THAT(at(0.0, 0.0, 0.0), WithinRel(-25.131589763964, 1e-10));
    CHECK_THAT(at(4.0, 0.0, 30e6), WithinRel(-24.264196581074007, 1e-10));
    CHECK_THAT(at(2.0, kPi, -10e6), WithinRel(-24.0066069533978, 1e-10));

    // the phi = 0 map is mirror symmetric about omega_c (exact for equal losses)
    const PhysicalParams s = PhysicalParams::symmetric();
    for (const double det : {5e6, 17e6, 34e6, 50e6}) {
        const double up = linear_s21_db(s, OperatingPoint::driven(8.4, 0.0, s.omega_c + units::hz_to_rad(det), -30.0));
        const double dn = linear_s21_db(s, OperatingPoint::driven(8.4, 0.0, s.omega_c - units::hz_to_rad(det), -30.0));
        CHECK_THAT(linear_ratio(up, dn), WithinAbs(1.0, 1e-2));
    }
}

TEST_CASE("transmission sweep", "[experiments]") {
    const PhysicalParams p = PhysicalParams::device();
    const double fc = units::rad_to_hz(p.omega_c);
    const std::vector<double> fd{fc - 20e6, fc, fc + 7e6};
    SweepOptions opts;
    opts.integrator.samples = 20000;
    opts.workers = 2;
    const TransmissionMap tm = transmission_sweep(p, kPi, {0.0, 3.0}, fd, -30.0, opts);
    REQUIRE(tm.s21_db.rows() == 2);
    REQUIRE(tm.s21_db.cols() == 3);
    CHECK(tm.s21_db.axis1.name == "delta_g_db");
    CHECK(tm.s21_db.axis2.name == "drive_freq_hz");
    CHECK(tm.s21_db.metadata.at("experiment") == "transmission");
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            REQUIRE(tm.s21_db.status_at(i, j) == CellStatus::Valid);
            const double linear = linear_s21_db(
                p, OperatingPoint::driven(tm.s21_db.axis1.values[i], kPi, units::hz_to_rad(fd[j]), -30.0));
            CHECK_THAT(linear_ratio(tm.s21_db.at(i, j), linear), WithinAbs(1.0, 1e-2));
        }
    }

    SECTION("a failing cell is recorded and the sweep continues") {
        SweepOptions broken = opts;
        broken.integrator.max_steps = 5;
        const TransmissionMap bad = transmission_sweep(p, kPi, {0.0}, fd, -30.0, broken);
        CHECK(bad.s21_db.count(CellStatus::Failed) == 3);
        CHECK_FALSE(bad.s21_db.errors[0].empty());
        CHECK(std::isnan(bad.s21_db.values[0]));
    }
}

TEST_CASE("phase diagram", "[experiments]") {
    const PhysicalParams p = PhysicalParams::symmetric();
    const std::vector<double> phis{kPi / 2.0, 2.5, kPi, 2.0 * kPi - 2.5, 1.5 * kPi};
    const std::vector<double> dgs{4.0, 5.5, 7.0, 8.4};
    SweepOptions opts;
    opts.workers = 3;
    const PhaseDiagram pd = lc_phase_diagram(p, phis, dgs, opts);
    REQUIRE(pd.amp_dbm.count(CellStatus::Failed) == 0);
    const double step = dgs[1] - dgs[0];
    // retained window of the default integration: 80% of 100000 samples over 10000 / kappa_c
    const IntegratorConfig defaults;
    const double dt = default_t_end(p) / static_cast<double>(defaults.samples - 1);
    const double bin = 1.0 / (0.8 * static_cast<double>(defaults.samples) * dt);
    for (std::size_t i = 0; i < phis.size(); ++i) {
        const double threshold = *threshold_gain(p, phis[i]);
        std::optional<double> first_unstable;
        for (std::size_t j = 0; j < dgs.size(); ++j) {
            const OperatingPoint op = OperatingPoint::undriven(p, dgs[j], phis[i]);
            if (dgs[j] < threshold) {
                CHECK(pd.amp_dbm.at(i, j) == kLcFloorDbm);
                CHECK(pd.freq_offset_hz.status_at(i, j) == CellStatus::Masked);
                continue;
            }
            if (!first_unstable) {
                first_unstable = dgs[j];
            }
            REQUIRE(pd.freq_offset_hz.status_at(i, j) == CellStatus::Valid);
            CHECK_THAT(pd.amp_dbm.at(i, j), WithinAbs(photons_to_dbm(p, *lc_amplitude(p, op)), 10.0 * std::log10(1.01)));
            CHECK(std::abs(pd.freq_offset_hz.at(i, j) - units::rad_to_hz(lc_frequency(p, phis[i]))) <= 2.0 * bin);
        }
        if (first_unstable) {
            CHECK(*first_unstable - threshold < step);
        }
    }
    // frequency map anti-symmetric about pi
    for (std::size_t j = 0; j < dgs.size(); ++j) {
        if (pd.freq_offset_hz.status_at(1, j) == CellStatus::Valid) {
            CHECK(std::abs(pd.freq_offset_hz.at(1, j) + pd.freq_offset_hz.at(3, j)) <= 2.0 * bin);
        }
    }

    SECTION("results do not depend on the worker count") {
        SweepOptions serial = opts;
        serial.workers = 1;
        const PhaseDiagram again = lc_phase_diagram(p, phis, dgs, serial);
        CHECK(again.amp_dbm.values == pd.amp_dbm.values);
        for (std::size_t k = 0; k < pd.freq_offset_hz.values.size(); ++k) {
            CHECK((again.freq_offset_hz.values[k] == pd.freq_offset_hz.values[k] ||
                   (std::isnan(again.freq_offset_hz.values[k]) && std::isnan(pd.freq_offset_hz.values[k]))));
        }
        CHECK(again.amp_dbm.metadata == pd.amp_dbm.metadata);
    }
}

TEST_CASE("synchronisation under strong drive", "[experiments]") {
    const PhysicalParams p = PhysicalParams::device();
    SweepOptions opts;
    opts.workers = 2;
    const auto grids = sync_power_contours(p, {kPi}, {2.0, 8.4}, {0.0}, opts);
    REQUIRE(grids.size() == 1);
    CHECK(grids[0].at(0, 0) == 1.0);  // stable: drive tone only
    CHECK(grids[0].at(0, 1) == 1.0);  // limit cycle already at the drive frequency

    const double fc = units::rad_to_hz(p.omega_c);
    const DriveSweep sw = drive_frequency_sweep(p, kPi, 8.4, 0.0, {fc - 4e6, fc, fc + 4e6}, opts);
    REQUIRE(sw.status == std::vector<CellStatus>(3, CellStatus::Valid));
    CHECK(sw.peak_count[1] == 1);
    CHECK(sw.peak_count[0] >= 3);
    CHECK(sw.peak_count[2] >= 3);
    for (const Spectrum& s : sw.spectra) {
        CHECK(s.freq_hz.front() >= -20e6 - s.bin_hz);
        CHECK(s.freq_hz.back() <= 20e6 + s.bin_hz);
    }
    CHECK_THAT(locking_window_width(sw, fc), WithinAbs(0.0, 1e-6));

    SECTION("locking window on a synthetic sweep") {
        DriveSweep fake;
        fake.drive_freq_hz = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
        fake.peak_count = {3, 1, 1, 1, 3, 1};
        fake.status.assign(6, CellStatus::Valid);
        CHECK_THAT(locking_window_width(fake, 3.2), WithinAbs(2.0, 1e-12));
        CHECK(locking_window_width(fake, 5.0) == 0.0);
    }
}
