#include "catch_amalgamated.hpp"

#include "nhdimer/error.hpp"
#include "nhdimer/stability.hpp"

#include <numbers>
#include <random>

using namespace nhdimer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

constexpr double kPi = std::numbers::pi;

TEST_CASE("eig2 on simple matrices", "[stability]") {
    const auto id = eig2(Matrix2c::Identity());
    CHECK(id[0] == Complex{1.0, 0.0});
    CHECK(id[1] == Complex{1.0, 0.0});

    Matrix2c d = Matrix2c::Zero();
    d(0, 0) = -2.0;
    d(1, 1) = -1.0;
    const auto ev = eig2(d);
    CHECK_THAT(ev[0].real(), WithinAbs(-1.0, 1e-15));
    CHECK_THAT(ev[1].real(), WithinAbs(-2.0, 1e-15));

    Matrix2c bad = Matrix2c::Identity();
    bad(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(eig2(bad), DomainError);
}

TEST_CASE("eig2 roots satisfy the characteristic polynomial", "[stability]") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        Matrix2c m;
        for (int i = 0; i < 4; ++i) {
            m(i / 2, i % 2) = Complex{g(rng), g(rng)} * 1e8;
        }
        const auto ev = eig2(m);
        CHECK(ev[0].real() >= ev[1].real());
        const double scale = m.squaredNorm();
        for (const Complex lambda : ev) {
            CHECK(std::abs((m - lambda * Matrix2c::Identity()).determinant()) < 1e-9 * scale);
        }
    }
}

TEST_CASE("stability examples", "[stability]") {
    const PhysicalParams p = PhysicalParams::symmetric();
    const StabilityReport high = is_stable(p, OperatingPoint::undriven(p, 8.4, kPi));
    CHECK_FALSE(high.stable);
    CHECK(high.region == Region::II);
    CHECK(high.max_re_eigenvalue > 0.0);
    CHECK(high.criterion_lhs > 1.0);

    for (double dg = -4.6; dg <= 8.4; dg += 0.5) {
        CHECK(is_stable(p, OperatingPoint::undriven(p, dg, 0.0)).stable);
    }

    const StabilityReport zero = is_stable(p, OperatingPoint::undriven(p, 0.0, kPi));
    CHECK(zero.stable);
    CHECK(zero.region == Region::I);
    CHECK_THAT(zero.criterion_lhs, WithinRel(8.7 / (2.0 * 15.15 - 8.7), 1e-12));
    CHECK(zero.criterion_valid);

    // the linear matrix at phi = pi has real parts -kappa0 +- J0
    const double j0 = bare_hopping(p, 3.0);
    const double k0 = 2.0 * p.mean_loss_sum() - j0;
    const auto ev = eig2(linear_matrix(p, OperatingPoint::undriven(p, 3.0, kPi)));
    CHECK_THAT(ev[0].real(), WithinRel(-k0 + j0, 1e-12));
    CHECK_THAT(ev[1].real(), WithinRel(-k0 - j0, 1e-12));
}

TEST_CASE("threshold gain", "[stability]") {
    const PhysicalParams p = PhysicalParams::symmetric();
    CHECK_THAT(*threshold_gain(p, kPi), WithinRel(4.817867604394105, 1e-12));
    // sin(phi/2) = 0.5
    CHECK_THAT(*threshold_gain(p, kPi / 3.0), WithinRel(7.316642336560105, 1e-12));

    PhysicalParams strong = p;
    strong.kappa_c *= 2.0;
    CHECK(*threshold_gain(strong, kPi) < *threshold_gain(p, kPi));

    // at phi = 0 the threshold coincides with kappa0 = 0, the edge of validity
    CHECK_FALSE(threshold_gain(p, 0.0).has_value());
    CHECK(threshold_gain(p, 0.0, ThresholdOptions{100.0}).has_value());
    CHECK_THAT(*threshold_gain(p, 0.2), WithinRel(20.0 * std::log10(2.0 * 15.15 / (8.7 * (1.0 + std::sin(0.1)))), 1e-12));
    CHECK_FALSE(threshold_gain(p, 0.2, ThresholdOptions{9.0}).has_value());

    SECTION("symmetric about pi with its minimum there") {
        const double min = *threshold_gain(p, kPi);
        for (double phi = 0.3; phi < kPi; phi += 0.1) {
            const auto a = threshold_gain(p, phi);
            const auto b = threshold_gain(p, 2.0 * kPi - phi);
            REQUIRE(a.has_value() == b.has_value());
            if (a) {
                CHECK_THAT(*a, WithinRel(*b, 1e-12));
                CHECK(*a >= min);
            }
        }
    }
    SECTION("stability flips at the threshold") {
        for (const double phi : {1.0, 2.0, kPi, 4.0, 5.5}) {
            const double t = *threshold_gain(p, phi);
            CHECK(is_stable(p, OperatingPoint::undriven(p, t - 1e-6, phi)).stable);
            CHECK_FALSE(is_stable(p, OperatingPoint::undriven(p, t + 1e-6, phi)).stable);
        }
    }
}

TEST_CASE("stability boundary curve", "[stability]") {
    const PhysicalParams p = PhysicalParams::symmetric();
    const auto curve = stability_boundary(p);
    REQUIRE_FALSE(curve.empty());
    CHECK(curve.size() < 1000);
    for (const auto& [phi, dg] : curve) {
        CHECK(phi >= 0.0);
        CHECK(phi < 2.0 * kPi);
        CHECK_THAT(dg, WithinRel(*threshold_gain(p, phi), 1e-12));
    }
}

TEST_CASE("closed-form criterion agrees with eigenvalues", "[stability][property]") {
    const PhysicalParams p = PhysicalParams::symmetric();
    std::mt19937_64 rng(20240607);
    std::uniform_real_distribution<double> dg_dist(-4.6, 10.5);
    std::uniform_real_distribution<double> phi_dist(0.0, 2.0 * kPi);
    const double dead_band = 1e-9 * p.kappa_c;
    int compared = 0;
    for (int k = 0; k < 10000; ++k) {
        const OperatingPoint op = OperatingPoint::undriven(p, dg_dist(rng), phi_dist(rng));
        const StabilityReport r = is_stable(p, op);
        CHECK(r.stable == (r.max_re_eigenvalue < 0.0));
        if (!r.criterion_valid || std::abs(r.max_re_eigenvalue) < dead_band) {
            continue;
        }
        ++compared;
        if ((r.criterion_lhs < 1.0) != r.stable) {
            FAIL("disagreement at delta_g=" << op.delta_g_db << " phi=" << op.phi);
        }
    }
    CHECK(compared > 9000);
}

TEST_CASE("coherent coupling leaves the growth rate unchanged", "[stability][property]") {
    const PhysicalParams p = PhysicalParams::symmetric();
    PhysicalParams no_jc = p;
    no_jc.j_c = 0.0;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dg_dist(-4.6, 8.4);
    std::uniform_real_distribution<double> phi_dist(0.0, 2.0 * kPi);
    for (int k = 0; k < 500; ++k) {
        const OperatingPoint op = OperatingPoint::undriven(p, dg_dist(rng), phi_dist(rng));
        const double a = is_stable(p, op).max_re_eigenvalue;
        const double b = is_stable(no_jc, op).max_re_eigenvalue;
        CHECK_THAT(a, WithinAbs(b, 1e-9 * std::abs(b) + 1e-6));
    }
}
