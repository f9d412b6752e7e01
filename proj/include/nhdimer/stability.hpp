#pragma once

#include "nhdimer/model.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace nhdimer {

/// Eigenvalues of a 2x2 complex matrix from the characteristic quadratic,
/// ordered by descending real part. Throws DomainError on non-finite input.
std::array<Complex, 2> eig2(const Matrix2c& m);

enum class Region {
    I,   ///< loss dominated, J0 <= kappa0: always stable
    II,  ///< gain dominated, stable only while J0 sin(phi/2) < kappa0
};

struct StabilityReport {
    std::array<Complex, 2> eigenvalues{};
    double max_re_eigenvalue = 0.0;
    bool stable = false;
    Region region = Region::I;
    /// J0 sin(phi/2) / kappa0, using the cavity-averaged kappa0.
    double criterion_lhs = 0.0;
    /// The closed form is meaningful only while kappa0 > 0.
    bool criterion_valid = false;
};

/// Vacuum stability of the linear model. The eigenvalues decide; the closed-form
/// criterion is recorded alongside as an independent route.
StabilityReport is_stable(const PhysicalParams& params, const OperatingPoint& op);

struct ThresholdOptions {
    /// Thresholds above this are reported as absent. Defaults to the gain at which
    /// kappa0 reaches zero (beyond it the second normal mode is no longer damped).
    std::optional<double> max_delta_g_db;
};

/// Net gain at which the vacuum loses stability for phase phi, in dB, or nothing
/// if no finite threshold exists inside the validity cap. Uses the
/// cavity-averaged loss sum, exact for the symmetric preset.
std::optional<double> threshold_gain(const PhysicalParams& params, double phi,
                                     const ThresholdOptions& options = {});

/// threshold_gain sampled on a uniform phi grid over [0, 2*pi); points without a
/// threshold are skipped. Pairs are (phi_rad, delta_g_star_db).
std::vector<std::pair<double, double>> stability_boundary(const PhysicalParams& params,
                                                          std::size_t points = 1000);

}  // namespace nhdimer
