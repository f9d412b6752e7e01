#pragma once

#include "nhdimer/model.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace nhdimer {

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1.0;  ///< sqrt-photon units
    /// Upper bound on the internal step; defaults to 100 output samples.
    std::optional<double> max_step;
    std::size_t samples = 100000;
    /// End of the time span; defaults to 10000 / kappa_c.
    std::optional<double> t_end;
    /// [Re a1, Im a1, Re a2, Im a2] = [1e7, 0, 1e7, 0]
    FieldState initial{Complex{1e7, 0.0}, Complex{1e7, 0.0}};
    std::size_t max_steps = 50'000'000;
};

/// Uniformly sampled solution on [0, t_end].
struct Trajectory {
    std::vector<double> t;
    std::vector<FieldState> states;
    double dt = 0.0;
    bool driven = false;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    [[nodiscard]] std::size_t size() const { return states.size(); }
};

/// Default time span 10000 / kappa_c.
double default_t_end(const PhysicalParams& params);

/// Right-hand side A(|a1|^2, |a2|^2) a + eps (1, 0)^T.
FieldState rhs(const PhysicalParams& params, const OperatingPoint& op, const FieldState& state);

/// Adaptive Dormand-Prince 5(4) integration with the 4th-order dense output used
/// to fill the uniform sample grid. Throws IntegrationError on step underflow,
/// non-finite values, or when max_steps is exhausted.
Trajectory integrate(const PhysicalParams& params, const OperatingPoint& op,
                     const IntegratorConfig& cfg = {});

}  // namespace nhdimer
