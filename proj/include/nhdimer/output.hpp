#pragma once

#include "nhdimer/experiments.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nhdimer {

using Curve = std::vector<std::pair<double, double>>;

/// Columns t_s, re_a1, im_a1, re_a2, im_a2.
std::string trajectory_csv(const Trajectory& traj);

/// Columns freq_hz, power_dbm.
std::string spectrum_csv(const Spectrum& spectrum);

/// Columns phi_rad, delta_g_star_db.
std::string boundary_csv(const Curve& boundary);

/// Long form: <axis1>, <axis2>, <value>, valid (1 or 0). Failed cells print nan.
std::string grid_csv(const SweepGrid& grid);

/// The grid as JSON (axes, values with null for invalid cells, status, metadata).
std::string grid_json(const SweepGrid& grid);

/// Run metadata sidecar for a grid. Includes everything in grid.metadata plus
/// cell counts; `extra` key/value pairs are appended verbatim.
std::string metadata_json(const SweepGrid& grid, const std::vector<std::pair<std::string, std::string>>& extra = {});

struct HeatmapOptions {
    std::string title;
    int cell_px = 0;  ///< 0 picks a size that fits roughly 480 px
};

/// Deterministic SVG heatmap: axis1 runs left to right, axis2 bottom to top,
/// linear colour scale annotated with min and max, invalid or masked cells in
/// gray, and an optional overlay polyline given in axis units. Throws
/// DomainError for an empty grid.
std::string render_heatmap(const SweepGrid& grid, const std::optional<Curve>& overlay = std::nullopt,
                           const HeatmapOptions& options = {});

/// Writes text to a file, creating parent directories. Throws Error on failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace nhdimer
