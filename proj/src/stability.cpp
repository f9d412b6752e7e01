#include "nhdimer/stability.hpp"

#include "nhdimer/error.hpp"

#include <cmath>
#include <limits>

namespace nhdimer {

std::array<Complex, 2> eig2(const Matrix2c& m) {
    for (Eigen::Index k = 0; k < 4; ++k) {
        const Complex v = m(k);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw DomainError("eig2: non-finite matrix entry");
        }
    }
    // lambda = mean +- sqrt(half_diff^2 + b c), written around the mean to avoid
    // cancellation between nearly equal diagonal entries.
    const Complex mean = 0.5 * (m(0, 0) + m(1, 1));
    const Complex half_diff = 0.5 * (m(0, 0) - m(1, 1));
    const Complex root = std::sqrt(half_diff * half_diff + m(0, 1) * m(1, 0));
    Complex l1 = mean + root;
    Complex l2 = mean - root;
    if (l2.real() > l1.real()) {
        std::swap(l1, l2);
    }
    return {l1, l2};
}

namespace {

double mean_kappa0(const PhysicalParams& params, double delta_g_db) {
    const double k1 = kappa_eff(params, delta_g_db, 0.0, Cavity::First, params.dissipation);
    const double k2 = kappa_eff(params, delta_g_db, 0.0, Cavity::Second, params.dissipation);
    return 0.5 * (k1 + k2);
}

}  // namespace

StabilityReport is_stable(const PhysicalParams& params, const OperatingPoint& op) {
    StabilityReport report;
    report.eigenvalues = eig2(linear_matrix(params, op));
    report.max_re_eigenvalue = report.eigenvalues[0].real();
    report.stable = report.max_re_eigenvalue < 0.0;

    const double j0 = bare_hopping(params, op.delta_g_db);
    const double kappa0 = mean_kappa0(params, op.delta_g_db);
    report.region = j0 <= kappa0 ? Region::I : Region::II;
    report.criterion_valid = kappa0 > 0.0;
    report.criterion_lhs = kappa0 > 0.0 ? j0 * std::sin(0.5 * op.phi) / kappa0
                                        : std::numeric_limits<double>::infinity();
    return report;
}

std::optional<double> threshold_gain(const PhysicalParams& params, double phi,
                                     const ThresholdOptions& options) {
    const double s = std::sin(0.5 * units::wrap_phase(phi));
    const double loss = params.mean_loss_sum();

    // J0 (1 + s) = 2 K  for kappa0 = 2K - J0;  J0 s = K  for the constant model.
    double amplitude_ratio = 0.0;
    double cap_db = 0.0;
    if (params.dissipation == DissipationModel::DeltaGDependent) {
        amplitude_ratio = 2.0 * loss / (params.kappa_c * (1.0 + s));
        cap_db = 20.0 * std::log10(2.0 * loss / params.kappa_c);
    } else {
        if (s <= 0.0) {
            return std::nullopt;
        }
        amplitude_ratio = loss / (params.kappa_c * s);
        cap_db = std::numeric_limits<double>::infinity();
    }
    if (options.max_delta_g_db) {
        cap_db = *options.max_delta_g_db;
    }

    const double threshold = 20.0 * std::log10(amplitude_ratio);
    // At the cap itself kappa0 = 0, so the instability is not a single-mode one.
    if (!(threshold < cap_db)) {
        return std::nullopt;
    }
    return threshold;
}

std::vector<std::pair<double, double>> stability_boundary(const PhysicalParams& params,
                                                          std::size_t points) {
    std::vector<std::pair<double, double>> curve;
    curve.reserve(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double phi = units::kTwoPi * static_cast<double>(k) / static_cast<double>(points);
        if (auto dg = threshold_gain(params, phi)) {
            curve.emplace_back(phi, *dg);
        }
    }
    return curve;
}

}  // namespace nhdimer
