#include "nhdimer/config.hpp"

#include "nhdimer/error.hpp"
#include "nhdimer/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nhdimer {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::map<std::string, std::vector<std::string>>& schema_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"", {"physical", "operating", "integrator", "output", "experiment", "workers", "calibration"}},
        {"physical",
         {"preset", "omega_c_ghz", "kappa_int_1_mhz", "kappa_int_2_mhz", "kappa_in_mhz", "kappa_out_mhz",
          "kappa_c_mhz", "j_c_mhz", "g0_db", "b_g_mw", "p_sat_mw", "dissipation_model"}},
        {"operating",
         {"phi_rad", "delta_g_db", "p_drive_dbm", "drive_freq_ghz", "phi_grid", "delta_g_grid", "drive_freq_grid_ghz",
          "transmission_delta_g_db", "transmission_p_drive_dbm", "sync_p_drive_dbm", "sync_span_mhz",
          "sync_points"}},
        {"grid", {"start", "stop", "count", "endpoint"}},
        {"integrator", {"rel_tol", "abs_tol", "samples", "t_end_s", "max_step_s", "initial_state", "max_steps"}},
        {"output", {"directory", "formats"}},
        {"calibration",
         {"l_fwd_db", "phi_ref_deg", "attenuator_min_db", "attenuator_max_db", "outlier_threshold_db"}},
    };
    return keys;
}

const std::vector<std::string> kExperiments{"simulate", "transmission", "phase-diagram", "sync", "analytics"};
const std::vector<std::string> kFormats{"csv", "svg", "json"};

// Walks one JSON object, tracking the dotted path for error messages.
class Block {
public:
    Block(const json& node, std::string path, const std::string& schema) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) {
            throw ConfigError(where() + ": expected an object");
        }
        const auto& allowed = schema_keys().at(schema);
        for (const auto& [key, value] : node_.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw ConfigError("unknown key '" + join(key) + "'");
            }
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }
    [[nodiscard]] bool is_null(const std::string& key) const { return has(key) && node_.at(key).is_null(); }

    [[nodiscard]] std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[nodiscard]] Block child(const std::string& key, const std::string& schema) const {
        return Block(node_.at(key), join(key), schema);
    }

    void number(const std::string& key, double& out, bool positive = false) const {
        if (!has(key)) {
            return;
        }
        const json& v = node_.at(key);
        if (!v.is_number()) {
            throw ConfigError(join(key) + ": expected a number");
        }
        out = v.get<double>();
        if (positive && !(out > 0.0)) {
            throw ConfigError(join(key) + ": must be positive");
        }
    }

    void optional_number(const std::string& key, std::optional<double>& out, bool positive = false) const {
        if (!has(key)) {
            return;
        }
        if (node_.at(key).is_null()) {
            out.reset();
            return;
        }
        double v = 0.0;
        number(key, v, positive);
        out = v;
    }

    void count(const std::string& key, std::size_t& out, std::size_t min_value) const {
        if (!has(key)) {
            return;
        }
        const json& v = node_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
            throw ConfigError(join(key) + ": expected an integer >= " + std::to_string(min_value));
        }
        out = v.get<std::size_t>();
    }

    void boolean(const std::string& key, bool& out) const {
        if (!has(key)) {
            return;
        }
        if (!node_.at(key).is_boolean()) {
            throw ConfigError(join(key) + ": expected true or false");
        }
        out = node_.at(key).get<bool>();
    }

    void text(const std::string& key, std::string& out, const std::vector<std::string>& choices = {}) const {
        if (!has(key)) {
            return;
        }
        if (!node_.at(key).is_string()) {
            throw ConfigError(join(key) + ": expected a string");
        }
        out = node_.at(key).get<std::string>();
        if (!choices.empty() && std::find(choices.begin(), choices.end(), out) == choices.end()) {
            throw ConfigError(join(key) + ": unsupported value '" + out + "'");
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) const {
        if (!has(key)) {
            return;
        }
        const json& v = node_.at(key);
        if (!v.is_array() || v.empty()) {
            throw ConfigError(join(key) + ": expected a non-empty array of numbers");
        }
        std::vector<double> tmp;
        for (const json& e : v) {
            if (!e.is_number()) {
                throw ConfigError(join(key) + ": expected a non-empty array of numbers");
            }
            tmp.push_back(e.get<double>());
        }
        out = std::move(tmp);
    }

    void grid(const std::string& key, GridSpec& out, double scale = 1.0) const {
        if (!has(key)) {
            return;
        }
        const Block g = child(key, "grid");
        double start = out.start / scale;
        double stop = out.stop / scale;
        g.number("start", start);
        g.number("stop", stop);
        g.count("count", out.count, 1);
        g.boolean("endpoint", out.endpoint);
        out.start = start * scale;
        out.stop = stop * scale;
    }

private:
    [[nodiscard]] std::string where() const { return path_.empty() ? "config" : path_; }

    const json& node_;
    std::string path_;
};

void read_physical(const Block& b, RunConfig& c) {
    if (b.has("preset")) {
        b.text("preset", c.preset, {"device", "symmetric"});
        c.physical = c.preset == "symmetric" ? PhysicalParams::symmetric() : PhysicalParams::device();
    }
    PhysicalParams& p = c.physical;
    const auto rate = [&](const std::string& key, double& field, double (*to_internal)(double),
                          double (*to_io)(double)) {
        double v = to_io(field);
        b.number(key, v, true);
        field = to_internal(v);
    };
    rate("omega_c_ghz", p.omega_c, units::ghz_to_rad, units::rad_to_ghz);
    rate("kappa_int_1_mhz", p.kappa_int_1, units::mhz_to_rad, units::rad_to_mhz);
    rate("kappa_int_2_mhz", p.kappa_int_2, units::mhz_to_rad, units::rad_to_mhz);
    rate("kappa_in_mhz", p.kappa_in, units::mhz_to_rad, units::rad_to_mhz);
    rate("kappa_out_mhz", p.kappa_out, units::mhz_to_rad, units::rad_to_mhz);
    rate("kappa_c_mhz", p.kappa_c, units::mhz_to_rad, units::rad_to_mhz);
    double jc = units::rad_to_mhz(p.j_c);
    b.number("j_c_mhz", jc);
    if (jc < 0.0) {
        throw ConfigError(b.join("j_c_mhz") + ": must be non-negative");
    }
    p.j_c = units::mhz_to_rad(jc);
    b.number("g0_db", p.g0_db);
    rate("b_g_mw", p.b_g, units::mw_to_w, units::w_to_mw);
    rate("p_sat_mw", p.p_sat, units::mw_to_w, units::w_to_mw);
    std::string model = p.dissipation == DissipationModel::Constant ? "constant" : "delta_g_dependent";
    b.text("dissipation_model", model, {"delta_g_dependent", "constant"});
    p.dissipation = model == "constant" ? DissipationModel::Constant : DissipationModel::DeltaGDependent;
}

void read_operating(const Block& b, RunConfig& c) {
    b.number("phi_rad", c.phi);
    b.number("delta_g_db", c.delta_g_db);
    b.optional_number("p_drive_dbm", c.p_drive_dbm);
    std::optional<double> fd_ghz;
    if (c.drive_freq_hz) {
        fd_ghz = *c.drive_freq_hz * 1e-9;
    }
    b.optional_number("drive_freq_ghz", fd_ghz, true);
    c.drive_freq_hz = fd_ghz ? std::optional<double>(*fd_ghz * 1e9) : std::nullopt;
    b.grid("phi_grid", c.phi_grid);
    b.grid("delta_g_grid", c.delta_g_grid);
    b.grid("drive_freq_grid_ghz", c.drive_freq_grid_hz, 1e9);
    b.numbers("transmission_delta_g_db", c.transmission_delta_g_db);
    b.number("transmission_p_drive_dbm", c.transmission_p_drive_dbm);
    b.numbers("sync_p_drive_dbm", c.sync_p_drive_dbm);
    double span_mhz = c.sync_span_hz * 1e-6;
    b.number("sync_span_mhz", span_mhz, true);
    c.sync_span_hz = span_mhz * 1e6;
    b.count("sync_points", c.sync_points, 2);
}

void read_integrator(const Block& b, IntegratorConfig& cfg) {
    b.number("rel_tol", cfg.rel_tol, true);
    b.number("abs_tol", cfg.abs_tol, true);
    b.count("samples", cfg.samples, 2);
    b.optional_number("t_end_s", cfg.t_end, true);
    b.optional_number("max_step_s", cfg.max_step, true);
    if (b.has("initial_state")) {
        std::vector<double> v;
        b.numbers("initial_state", v);
        if (v.size() != 4) {
            throw ConfigError(b.join("initial_state") + ": expected [re_a1, im_a1, re_a2, im_a2]");
        }
        cfg.initial = FieldState{Complex{v[0], v[1]}, Complex{v[2], v[3]}};
    }
    b.count("max_steps", cfg.max_steps, 1);
}

}  // namespace

std::vector<double> GridSpec::values() const { return linspace(start, stop, count, endpoint); }

bool RunConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    const Block top(root, "", "");
    RunConfig c;
    if (top.has("physical")) {
        read_physical(top.child("physical", "physical"), c);
    }
    if (top.has("operating")) {
        read_operating(top.child("operating", "operating"), c);
    }
    if (top.has("integrator")) {
        read_integrator(top.child("integrator", "integrator"), c.integrator);
    }
    if (top.has("output")) {
        const Block out = top.child("output", "output");
        out.text("directory", c.out_dir);
        if (out.has("formats")) {
            const json& f = root.at("output").at("formats");
            if (!f.is_array()) {
                throw ConfigError("output.formats: expected an array of strings");
            }
            std::vector<std::string> formats;
            for (const json& e : f) {
                if (!e.is_string() ||
                    std::find(kFormats.begin(), kFormats.end(), e.get<std::string>()) == kFormats.end()) {
                    throw ConfigError("output.formats: entries must be one of csv, svg, json");
                }
                formats.push_back(e.get<std::string>());
            }
            c.formats = formats;
        }
    }
    top.text("experiment", c.experiment, kExperiments);
    top.count("workers", c.workers, 0);
    if (top.has("calibration")) {
        const Block cal = top.child("calibration", "calibration");
        cal.number("l_fwd_db", c.hashmap.l_fwd_db);
        cal.number("phi_ref_deg", c.hashmap.phi_ref_deg);
        cal.number("attenuator_min_db", c.hashmap.attenuator_min_db);
        cal.number("attenuator_max_db", c.hashmap.attenuator_max_db);
        cal.number("outlier_threshold_db", c.hashmap.outlier_threshold_db, true);
        if (c.hashmap.attenuator_max_db < c.hashmap.attenuator_min_db) {
            throw ConfigError("calibration.attenuator_max_db: must not be below attenuator_min_db");
        }
    }
    c.hashmap.g0_db = c.physical.g0_db;
    try {
        c.physical.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("physical: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string dump_config(const RunConfig& c) {
    const PhysicalParams& p = c.physical;
    const auto grid = [](const GridSpec& g, double scale) {
        return ordered_json{{"start", g.start / scale}, {"stop", g.stop / scale}, {"count", g.count},
                            {"endpoint", g.endpoint}};
    };
    const auto opt = [](const std::optional<double>& v, double scale) {
        return v ? ordered_json(*v / scale) : ordered_json(nullptr);
    };
    ordered_json root;
    root["physical"] = {
        {"preset", c.preset},
        {"omega_c_ghz", units::rad_to_ghz(p.omega_c)},
        {"kappa_int_1_mhz", units::rad_to_mhz(p.kappa_int_1)},
        {"kappa_int_2_mhz", units::rad_to_mhz(p.kappa_int_2)},
        {"kappa_in_mhz", units::rad_to_mhz(p.kappa_in)},
        {"kappa_out_mhz", units::rad_to_mhz(p.kappa_out)},
        {"kappa_c_mhz", units::rad_to_mhz(p.kappa_c)},
        {"j_c_mhz", units::rad_to_mhz(p.j_c)},
        {"g0_db", p.g0_db},
        {"b_g_mw", units::w_to_mw(p.b_g)},
        {"p_sat_mw", units::w_to_mw(p.p_sat)},
        {"dissipation_model", p.dissipation == DissipationModel::Constant ? "constant" : "delta_g_dependent"},
    };
    root["operating"] = {
        {"phi_rad", c.phi},
        {"delta_g_db", c.delta_g_db},
        {"p_drive_dbm", opt(c.p_drive_dbm, 1.0)},
        {"drive_freq_ghz", opt(c.drive_freq_hz, 1e9)},
        {"phi_grid", grid(c.phi_grid, 1.0)},
        {"delta_g_grid", grid(c.delta_g_grid, 1.0)},
        {"drive_freq_grid_ghz", grid(c.drive_freq_grid_hz, 1e9)},
        {"transmission_delta_g_db", c.transmission_delta_g_db},
        {"transmission_p_drive_dbm", c.transmission_p_drive_dbm},
        {"sync_p_drive_dbm", c.sync_p_drive_dbm},
        {"sync_span_mhz", c.sync_span_hz * 1e-6},
        {"sync_points", c.sync_points},
    };
    const IntegratorConfig& ic = c.integrator;
    root["integrator"] = {
        {"rel_tol", ic.rel_tol},
        {"abs_tol", ic.abs_tol},
        {"samples", ic.samples},
        {"t_end_s", opt(ic.t_end, 1.0)},
        {"max_step_s", opt(ic.max_step, 1.0)},
        {"initial_state", {ic.initial.a1.real(), ic.initial.a1.imag(), ic.initial.a2.real(), ic.initial.a2.imag()}},
        {"max_steps", ic.max_steps},
    };
    root["output"] = {{"directory", c.out_dir}, {"formats", c.formats}};
    root["experiment"] = c.experiment;
    root["workers"] = c.workers;
    root["calibration"] = {
        {"l_fwd_db", c.hashmap.l_fwd_db},
        {"phi_ref_deg", c.hashmap.phi_ref_deg},
        {"attenuator_min_db", c.hashmap.attenuator_min_db},
        {"attenuator_max_db", c.hashmap.attenuator_max_db},
        {"outlier_threshold_db", c.hashmap.outlier_threshold_db},
    };
    return root.dump(2) + "\n";
}

std::vector<std::string> config_keys(const std::string& block) {
    const auto it = schema_keys().find(block);
    if (it == schema_keys().end()) {
        throw DomainError("unknown config block '" + block + "'");
    }
    std::vector<std::string> keys = it->second;
    std::sort(keys.begin(), keys.end());
    return keys;
}

}  // namespace nhdimer
