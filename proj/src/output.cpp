#include "nhdimer/output.hpp"

#include "nhdimer/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace nhdimer {

namespace {

std::string num(double v, const char* format = "%.10g") {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Five anchors of a perceptually ordered dark-to-bright scale, interpolated linearly.
std::string colour(double t) {
    static constexpr std::array<std::array<double, 3>, 5> anchors{{
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37},
    }};
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * static_cast<double>(anchors.size() - 1);
    const auto k = std::min(static_cast<std::size_t>(pos), anchors.size() - 2);
    const double f = pos - static_cast<double>(k);
    char buf[8];
    std::array<int, 3> rgb{};
    for (std::size_t c = 0; c < 3; ++c) {
        rgb[c] = static_cast<int>(std::lround(anchors[k][c] + f * (anchors[k + 1][c] - anchors[k][c])));
    }
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

// Maps an axis value to a fractional cell index (cell centres sit on integers).
double axis_position(const std::vector<double>& values, double v) {
    const std::size_t n = values.size();
    if (n == 1) {
        return 0.0;
    }
    const bool ascending = values.back() >= values.front();
    const auto before = [&](double a, double b) { return ascending ? a < b : a > b; };
    if (!before(values.front(), v)) {
        return (v - values[0]) / (values[1] - values[0]);
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!before(values[i], v)) {
            return static_cast<double>(i - 1) + (v - values[i - 1]) / (values[i] - values[i - 1]);
        }
    }
    return static_cast<double>(n - 1) + (v - values[n - 1]) / (values[n - 1] - values[n - 2]);
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t_s,re_a1,im_a1,re_a2,im_a2\n";
    out.reserve(traj.size() * 90);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const FieldState& s = traj.states[k];
        out += num(traj.t[k], "%.12g") + "," + num(s.a1.real()) + "," + num(s.a1.imag()) + "," + num(s.a2.real()) +
               "," + num(s.a2.imag()) + "\n";
    }
    return out;
}

std::string spectrum_csv(const Spectrum& spectrum) {
    std::string out = "freq_hz,power_dbm\n";
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        out += num(spectrum.freq_hz[k], "%.12g") + "," + num(spectrum.power_dbm[k]) + "\n";
    }
    return out;
}

std::string boundary_csv(const Curve& boundary) {
    std::string out = "phi_rad,delta_g_star_db\n";
    for (const auto& [phi, dg] : boundary) {
        out += num(phi, "%.12g") + "," + num(dg, "%.12g") + "\n";
    }
    return out;
}

std::string grid_csv(const SweepGrid& grid) {
    std::string out = grid.axis1.name + "," + grid.axis2.name + "," + grid.value_name + ",valid\n";
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        for (std::size_t j = 0; j < grid.cols(); ++j) {
            const bool valid = grid.status_at(i, j) == CellStatus::Valid;
            out += num(grid.axis1.values[i], "%.12g") + "," + num(grid.axis2.values[j], "%.12g") + "," +
                   num(grid.at(i, j)) + "," + (valid ? "1" : "0") + "\n";
        }
    }
    return out;
}

std::string grid_json(const SweepGrid& grid) {
    nlohmann::ordered_json j;
    j["axis1"] = {{"name", grid.axis1.name}, {"values", grid.axis1.values}};
    j["axis2"] = {{"name", grid.axis2.name}, {"values", grid.axis2.values}};
    j["value_name"] = grid.value_name;
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    nlohmann::ordered_json status = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < grid.values.size(); ++k) {
        const double v = grid.values[k];
        values.push_back(std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr));
        switch (grid.status[k]) {
            case CellStatus::Valid: status.push_back("valid"); break;
            case CellStatus::Masked: status.push_back("masked"); break;
            case CellStatus::Failed: status.push_back("failed"); break;
        }
    }
    j["values"] = values;
    j["status"] = status;
    j["metadata"] = grid.metadata;
    return j.dump(2) + "\n";
}

std::string metadata_json(const SweepGrid& grid, const std::vector<std::pair<std::string, std::string>>& extra) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : grid.metadata) {
        j[k] = v;
    }
    j["axis1"] = grid.axis1.name;
    j["axis2"] = grid.axis2.name;
    j["value"] = grid.value_name;
    j["cells_valid"] = grid.count(CellStatus::Valid);
    j["cells_masked"] = grid.count(CellStatus::Masked);
    j["cells_failed"] = grid.count(CellStatus::Failed);
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        for (std::size_t jj = 0; jj < grid.cols(); ++jj) {
            if (grid.status_at(i, jj) == CellStatus::Failed) {
                failures.push_back({{grid.axis1.name, grid.axis1.values[i]},
                                    {grid.axis2.name, grid.axis2.values[jj]},
                                    {"error", grid.errors[grid.index(i, jj)]}});
            }
        }
    }
    j["failures"] = failures;
    for (const auto& [k, v] : extra) {
        j[k] = v;
    }
    return j.dump(2) + "\n";
}

std::string render_heatmap(const SweepGrid& grid, const std::optional<Curve>& overlay, const HeatmapOptions& options) {
    const std::size_t nx = grid.rows();
    const std::size_t ny = grid.cols();
    if (nx == 0 || ny == 0 || grid.values.size() != nx * ny) {
        throw DomainError("render_heatmap: empty grid");
    }
    const int cell = options.cell_px > 0
                         ? options.cell_px
                         : std::max(4, static_cast<int>(480 / std::max<std::size_t>({nx, ny, std::size_t{1}})));
    const int plot_w = cell * static_cast<int>(nx);
    const int plot_h = cell * static_cast<int>(ny);
    const int left = 80;
    const int top = 40;
    const int legend_w = 170;
    const int width = left + plot_w + 20 + legend_w;
    const int height = top + plot_h + 60;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.values.size(); ++k) {
        if (grid.status[k] == CellStatus::Valid && std::isfinite(grid.values[k])) {
            lo = std::min(lo, grid.values[k]);
            hi = std::max(hi, grid.values[k]);
        }
    }
    const bool any_valid = std::isfinite(lo);
    const std::size_t invalid = grid.values.size() - grid.count(CellStatus::Valid);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
    const std::string title = options.title.empty() ? grid.value_name : options.title;
    svg << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << xml_escape(title) << "</text>\n";

    svg << "<g id=\"cells\" shape-rendering=\"crispEdges\">\n";
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t k = grid.index(i, j);
            const bool valid = grid.status[k] == CellStatus::Valid && std::isfinite(grid.values[k]);
            std::string fill = "#9a9a9a";
            if (valid) {
                fill = colour(hi > lo ? (grid.values[k] - lo) / (hi - lo) : 0.5);
            }
            const int x = left + cell * static_cast<int>(i);
            const int y = top + plot_h - cell * static_cast<int>(j + 1);
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    svg << "</g>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"#000000\"/>\n";

    if (overlay && !overlay->empty()) {
        svg << "<clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w
            << "\" height=\"" << plot_h << "\"/></clipPath>\n";
        svg << "<polyline clip-path=\"url(#plot)\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"2\" "
               "stroke-dasharray=\"6 3\" points=\"";
        bool first = true;
        for (const auto& [a, b] : *overlay) {
            const double px = left + cell * (axis_position(grid.axis1.values, a) + 0.5);
            const double py = top + plot_h - cell * (axis_position(grid.axis2.values, b) + 0.5);
            svg << (first ? "" : " ") << num(px, "%.2f") << "," << num(py, "%.2f");
            first = false;
        }
        svg << "\"/>\n";
    }

    // axis labels with the first and last tick values
    const int base_y = top + plot_h;
    svg << "<text x=\"" << left << "\" y=\"" << base_y + 16 << "\">" << num(grid.axis1.values.front(), "%.4g")
        << "</text>\n";
    svg << "<text x=\"" << left + plot_w << "\" y=\"" << base_y + 16 << "\" text-anchor=\"end\">"
        << num(grid.axis1.values.back(), "%.4g") << "</text>\n";
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << base_y + 40 << "\" text-anchor=\"middle\">"
        << xml_escape(grid.axis1.name) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << base_y << "\" text-anchor=\"end\">"
        << num(grid.axis2.values.front(), "%.4g") << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">"
        << num(grid.axis2.values.back(), "%.4g") << "</text>\n";
    svg << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 16 " << top + plot_h / 2
        << ")\" text-anchor=\"middle\">" << xml_escape(grid.axis2.name) << "</text>\n";

    // legend: colour bar from min (bottom) to max (top)
    const int lx = left + plot_w + 20;
    const int bar_h = std::min(plot_h, 200);
    const int steps = 32;
    for (int s = 0; s < steps; ++s) {
        const double t = (static_cast<double>(s) + 0.5) / steps;
        const int y = top + bar_h - (s + 1) * bar_h / steps;
        const int h = (s + 1) * bar_h / steps - s * bar_h / steps;
        svg << "<rect x=\"" << lx << "\" y=\"" << y << "\" width=\"16\" height=\"" << h << "\" fill=\"" << colour(t)
            << "\"/>\n";
    }
    svg << "<text x=\"" << lx + 22 << "\" y=\"" << top + 10 << "\">max " << (any_valid ? num(hi, "%.6g") : "n/a")
        << "</text>\n";
    svg << "<text x=\"" << lx + 22 << "\" y=\"" << top + bar_h << "\">min " << (any_valid ? num(lo, "%.6g") : "n/a")
        << "</text>\n";
    svg << "<text x=\"" << lx << "\" y=\"" << top + bar_h + 20 << "\">" << xml_escape(grid.value_name) << "</text>\n";
    svg << "<rect x=\"" << lx << "\" y=\"" << top + bar_h + 30 << "\" width=\"16\" height=\"12\" fill=\"#9a9a9a\"/>\n";
    svg << "<text x=\"" << lx + 22 << "\" y=\"" << top + bar_h + 40 << "\">invalid: " << invalid << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) {
            throw Error("cannot create directory " + p.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << content;
    if (!out) {
        throw Error("write failed for " + path);
    }
}

}  // namespace nhdimer
