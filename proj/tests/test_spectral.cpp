#include "catch_amalgamated.hpp"

#include "nhdimer/error.hpp"
#include "nhdimer/lc_analytics.hpp"
#include "nhdimer/spectral.hpp"

#include <numbers>
#include <random>

using namespace nhdimer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

constexpr double kPi = std::numbers::pi;

namespace {

// Uniform synthetic trajectory with alpha_2(t) = f(t) and alpha_1 = 0.
template <class F>
Trajectory synthetic(std::size_t n, double dt, F&& f) {
    Trajectory traj;
    traj.dt = dt;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        traj.t.push_back(t);
        traj.states.push_back(FieldState{Complex{}, f(t)});
    }
    return traj;
}

std::vector<Complex> brute_force_dft(const std::vector<Complex>& x) {
    const std::size_t n = x.size();
    std::vector<Complex> y(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < n; ++m) {
            const double angle = -2.0 * kPi * static_cast<double>(k * m) / static_cast<double>(n);
            y[k] += x[m] * std::polar(1.0, angle);
        }
    }
    return y;
}

}  // namespace

TEST_CASE("dft basics", "[spectral]") {
    const std::vector<Complex> c(16, Complex{2.0, -1.0});
    const auto y = dft(c);
    CHECK(std::abs(y[0] - 16.0 * Complex{2.0, -1.0}) < 1e-12);
    for (std::size_t k = 1; k < y.size(); ++k) {
        CHECK(std::abs(y[k]) < 1e-12);
    }

    const std::size_t n = 32;
    const std::size_t m = 5;
    std::vector<Complex> tone(n);
    for (std::size_t k = 0; k < n; ++k) {
        tone[k] = std::polar(1.0, 2.0 * kPi * static_cast<double>(m * k) / static_cast<double>(n));
    }
    const auto yt = dft(tone);
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(yt[k] - (k == m ? Complex{32.0, 0.0} : Complex{})) < 1e-12);
    }
}

TEST_CASE("dft matches the direct sum", "[spectral]") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (const std::size_t n : {std::size_t{8}, std::size_t{37}, std::size_t{64}}) {
        std::vector<Complex> x(n);
        for (auto& v : x) {
            v = Complex{g(rng), g(rng)};
        }
        const auto fast = dft(x);
        const auto slow = brute_force_dft(x);
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(std::abs(fast[k] - slow[k]) < 1e-12 * static_cast<double>(n));
        }
    }
}

TEST_CASE("Parseval identity", "[spectral][property]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1e6);
    for (const std::size_t n : {std::size_t{100}, std::size_t{1024}, std::size_t{80000}}) {
        std::vector<Complex> x(n);
        double time_energy = 0.0;
        for (auto& v : x) {
            v = Complex{g(rng), g(rng)};
            time_energy += std::norm(v);
        }
        double freq_energy = 0.0;
        for (const Complex v : dft(x)) {
            freq_energy += std::norm(v);
        }
        CHECK_THAT(freq_energy / static_cast<double>(n), WithinRel(time_energy, 1e-9));
    }
}

TEST_CASE("argmax ties resolve to the lowest index", "[spectral]") {
    const std::vector<Complex> y{Complex{1.0, 0.0}, Complex{0.0, 3.0}, Complex{-3.0, 0.0}, Complex{2.0, 0.0}};
    CHECK(argmax_magnitude(y) == 1);
}

TEST_CASE("dc component", "[spectral]") {
    const Trajectory c = synthetic(1000, 1e-9, [](double) { return Complex{3.0, 4.0}; });
    CHECK(std::abs(dc_component(c) - Complex{3.0, 4.0}) < 1e-12);

    // 800 retained samples; 7 full periods fit exactly
    const double dt = 1e-9;
    const double f = 7.0 / (800.0 * dt);
    const Trajectory osc = synthetic(1000, dt, [&](double t) { return std::polar(1e6, 2.0 * kPi * f * t); });
    CHECK(std::abs(dc_component(osc)) < 1e-9 * 1e6);
    CHECK(retained_start(osc, 0.2) == 200);
}

TEST_CASE("stable driven steady state gives the linear DC amplitude", "[spectral]") {
    const PhysicalParams p = PhysicalParams::device();
    const OperatingPoint op = OperatingPoint::driven(2.0, kPi, p.omega_c + units::mhz_to_rad(4.0), -30.0);
    IntegratorConfig cfg;
    cfg.samples = 20000;
    const Complex dc = dc_component(integrate(p, op, cfg));
    const Complex expected = linear_steady_state(p, op).a2;
    CHECK(std::abs(dc - expected) < 1e-2 * std::abs(expected));
}

TEST_CASE("s21 and dBm conversions", "[spectral]") {
    const PhysicalParams p = PhysicalParams::device();
    const double eps = 1e12;
    const double unit = eps / std::sqrt(p.kappa_in * p.kappa_out);
    CHECK_THAT(s21_db(p, Complex{unit, 0.0}, eps), WithinAbs(0.0, 1e-12));
    CHECK(s21_db(p, Complex{}, eps) == kPowerFloorDb);
    CHECK_THROWS_AS(s21_db(p, Complex{1.0, 0.0}, 0.0), DomainError);

    const double n_mw = 1e-3 / (p.hbar * p.omega_c * p.kappa_out);
    CHECK_THAT(photons_to_dbm(p, n_mw), WithinAbs(0.0, 1e-12));
    CHECK_THAT(photons_to_dbm(p, p.n_sat()), WithinRel(-5.786173610125407, 1e-12));
    CHECK_THAT(photons_to_dbm(p, 27015225133908.516), WithinRel(1.9287351613409371, 1e-12));
    CHECK(photons_to_dbm(p, 0.0) == kPowerFloorDb);
    CHECK_THROWS_AS(photons_to_dbm(p, -1.0), DomainError);
}

TEST_CASE("spectrum layout and sign convention", "[spectral]") {
    const PhysicalParams p = PhysicalParams::device();
    const double dt = 1e-9;
    const std::size_t n = 1250;  // 1000 retained samples, 1 MHz bins
    const double delta = units::mhz_to_rad(37.0);
    const Trajectory traj = synthetic(n, dt, [&](double t) { return std::polar(2e6, delta * t); });
    const Spectrum s = emission_spectrum(p, traj);
    REQUIRE(s.size() == 1000);
    CHECK_THAT(s.bin_hz, WithinRel(1e6, 1e-12));
    CHECK(s.freq_hz[s.dc_index()] == 0.0);
    for (std::size_t k = 1; k < s.size(); ++k) {
        CHECK_THAT(s.freq_hz[k] - s.freq_hz[k - 1], WithinRel(1e6, 1e-9));
    }
    // a growing mode e^{+i delta t} in the frame rotating at omega_c oscillates at omega_c - delta
    const std::size_t peak = argmax_magnitude(s.amp);
    CHECK_THAT(s.freq_hz[peak], WithinAbs(37e6, 1.0));
    CHECK_THAT(std::abs(s.amp[peak]), WithinRel(2e6, 1e-9));

    Trajectory marked = traj;
    marked.driven = false;
    const LcObservation obs = lc_extract(p, marked);
    CHECK(obs.present);
    CHECK_THAT(obs.freq_offset_hz, WithinAbs(37e6, 1.0));
    CHECK_THAT(obs.amp_dbm, WithinAbs(photons_to_dbm(p, 4e12), 0.1));
}

TEST_CASE("lc_extract on synthetic tones", "[spectral]") {
    const PhysicalParams p = PhysicalParams::device();
    const double dt = 2e-9;
    const double n_photons = 3e13;
    // off-bin frequency: recovered within one bin
    const double f = 12.3456e6;
    const Trajectory traj = synthetic(5000, dt, [&](double t) { return std::polar(std::sqrt(n_photons), 2.0 * kPi * f * t); });
    const LcObservation obs = lc_extract(p, traj);
    CHECK(obs.present);
    CHECK(std::abs(obs.freq_offset_hz - f) <= obs.bin_hz);
    CHECK_THAT(obs.amp_dbm, WithinAbs(photons_to_dbm(p, n_photons), 0.1));
    CHECK_THAT(obs.mean_photons, WithinRel(n_photons, 1e-9));

    SECTION("vacuum guard") {
        const Trajectory tiny = synthetic(5000, dt, [&](double) { return Complex{1e3, 0.0}; });
        const LcObservation none = lc_extract(p, tiny);
        CHECK_FALSE(none.present);
        CHECK(none.amp_dbm == kLcFloorDbm);
    }
    SECTION("driven trajectories are rejected") {
        Trajectory driven = traj;
        driven.driven = true;
        CHECK_THROWS_AS(lc_extract(p, driven), DomainError);
    }
}

TEST_CASE("lc_extract on integrated trajectories", "[spectral]") {
    const PhysicalParams p = PhysicalParams::symmetric();
    IntegratorConfig cfg;

    const LcObservation stable = lc_extract(p, integrate(p, OperatingPoint::undriven(p, 0.0, kPi), cfg));
    CHECK_FALSE(stable.present);
    CHECK(stable.amp_dbm == kLcFloorDbm);

    const LcObservation at_pi = lc_extract(p, integrate(p, OperatingPoint::undriven(p, 8.4, kPi), cfg));
    CHECK(at_pi.present);
    CHECK(std::abs(at_pi.freq_offset_hz) <= 2.0 * at_pi.bin_hz);

    const LcObservation quarter = lc_extract(p, integrate(p, OperatingPoint::undriven(p, 8.4, kPi / 2.0), cfg));
    CHECK(quarter.present);
    CHECK_THAT(units::rad_to_mhz(lc_frequency(p, kPi / 2.0)), WithinRel(20.682398923550075, 1e-12));
    CHECK(std::abs(quarter.freq_offset_hz - 20.682398923550075e6) <= 2.0 * quarter.bin_hz);
}
