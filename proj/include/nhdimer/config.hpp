#pragma once

#include "nhdimer/calibration.hpp"
#include "nhdimer/integrator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nhdimer {

/// Evenly spaced axis described by its end points.
struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 1;
    bool endpoint = true;

    [[nodiscard]] std::vector<double> values() const;
    bool operator==(const GridSpec&) const = default;
};

/// Everything a CLI run needs. Values are held in internal units; the JSON form
/// uses GHz/MHz/mW as documented in config/run_config.schema.json.
struct RunConfig {
    std::string preset = "device";
    PhysicalParams physical = PhysicalParams::device();

    double phi = 3.141592653589793;
    double delta_g_db = 8.4;
    std::optional<double> p_drive_dbm;
    std::optional<double> drive_freq_hz;  ///< defaults to omega_c / 2 pi
    GridSpec phi_grid{0.0, 6.283185307179586, 60, false};
    GridSpec delta_g_grid{4.0, 8.4, 23, true};
    GridSpec drive_freq_grid_hz{5.98e9, 6.09e9, 111, true};
    std::vector<double> transmission_delta_g_db{0.0, 2.0, 4.0, 8.4};
    double transmission_p_drive_dbm = -30.0;
    std::vector<double> sync_p_drive_dbm{0.0, 4.0, 8.0, 12.0, 16.0};
    double sync_span_hz = 8e6;
    std::size_t sync_points = 41;

    IntegratorConfig integrator{};

    std::string out_dir = "out";
    std::vector<std::string> formats{"csv", "svg"};
    std::string experiment = "phase-diagram";
    std::size_t workers = 0;

    HashMapOptions hashmap{};

    [[nodiscard]] bool wants(const std::string& format) const;
};

/// Parses and validates a JSON document. Unknown keys, wrong types and
/// out-of-range values raise ConfigError naming the offending key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// Fully explicit JSON form; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const RunConfig& config);

/// Top-level and per-block key names accepted by the parser (for schema checks).
std::vector<std::string> config_keys(const std::string& block = "");

}  // namespace nhdimer
