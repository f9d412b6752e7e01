#include "catch_amalgamated.hpp"

#include "nhdimer/config.hpp"
#include "nhdimer/error.hpp"
#include "nhdimer/output.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace nhdimer;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

constexpr double kPi = std::numbers::pi;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void require_config_error(const std::string& text, const std::string& fragment) {
    try {
        parse_config(text);
        FAIL("expected ConfigError for " << text);
    } catch (const ConfigError& e) {
        CHECK_THAT(std::string(e.what()), ContainsSubstring(fragment));
    }
}

SweepGrid small_grid() {
    SweepGrid g(Axis{"phi_rad", {0.0, kPi}}, Axis{"delta_g_db", {4.0, 6.0, 8.0}}, "amp_dbm");
    g.values = {-44.0, -10.0, 1.5, -44.0, std::numeric_limits<double>::quiet_NaN(), 2.0};
    g.status[4] = CellStatus::Failed;
    g.errors[4] = "integration aborted";
    g.status[3] = CellStatus::Masked;
    g.metadata = {{"experiment", "phase-diagram"}, {"run_id", "0123"}};
    return g;
}

}  // namespace

TEST_CASE("default configuration", "[config]") {
    const RunConfig c = parse_config("{}");
    CHECK(c.physical == PhysicalParams::device());
    CHECK(c.phi == kPi);
    CHECK(c.delta_g_db == 8.4);
    CHECK_FALSE(c.p_drive_dbm.has_value());
    CHECK(c.phi_grid.values().size() == 60);
    CHECK(c.delta_g_grid.values().size() == 23);
    CHECK(c.delta_g_grid.values().back() == 8.4);
    CHECK(c.drive_freq_grid_hz.values().size() == 111);
    CHECK(c.integrator.samples == 100000);
    CHECK(c.wants("csv"));
    CHECK(c.wants("svg"));
    CHECK_FALSE(c.wants("json"));
}

TEST_CASE("shipped default config equals the built-in defaults", "[config]") {
    const RunConfig file = load_config(std::string(NHDIMER_SOURCE_DIR) + "/config/default.json");
    CHECK(dump_config(file) == dump_config(RunConfig{}));
}

TEST_CASE("shipped schema lists exactly the accepted keys", "[config]") {
    const auto schema = nlohmann::json::parse(read_file(std::string(NHDIMER_SOURCE_DIR) + "/config/run_config.schema.json"));
    CHECK(schema.at("additionalProperties") == false);
    const auto keys_of = [](const nlohmann::json& node) {
        std::vector<std::string> keys;
        for (const auto& [k, v] : node.at("properties").items()) {
            keys.push_back(k);
        }
        std::sort(keys.begin(), keys.end());
        return keys;
    };
    CHECK(keys_of(schema) == config_keys());
    for (const std::string block : {"physical", "operating", "integrator", "output", "calibration"}) {
        const auto& node = schema.at("properties").at(block);
        CHECK(node.at("additionalProperties") == false);
        CHECK(keys_of(node) == config_keys(block));
    }
    CHECK(keys_of(schema.at("properties").at("operating").at("properties").at("phi_grid")) == config_keys("grid"));
}

TEST_CASE("configuration round trip", "[config]") {
    RunConfig c;
    c.physical = PhysicalParams::symmetric();
    c.preset = "symmetric";
    c.phi = 1.25;
    c.delta_g_db = 6.5;
    c.p_drive_dbm = 4.0;
    c.drive_freq_hz = 6.03e9;
    c.phi_grid = GridSpec{0.5, 5.5, 11, true};
    c.integrator.rel_tol = 1e-9;
    c.integrator.t_end = 5e-5;
    c.integrator.initial = FieldState{Complex{1.0, 2.0}, Complex{3.0, 4.0}};
    c.formats = {"json"};
    c.experiment = "sync";
    c.workers = 3;
    c.hashmap.l_fwd_db = 0.7;
    const std::string text = dump_config(c);
    const RunConfig back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.physical == c.physical);
    CHECK(back.phi_grid == c.phi_grid);
    CHECK(back.integrator.initial == c.integrator.initial);
    CHECK(*back.p_drive_dbm == 4.0);
    CHECK_THAT(*back.drive_freq_hz, WithinRel(6.03e9, 1e-15));
}

TEST_CASE("configuration errors name the offending key", "[config]") {
    require_config_error("[1, 2]", "object");
    require_config_error(R"({"bogus": 1})", "unknown key 'bogus'");
    require_config_error(R"({"physical": {"kappa_cc_mhz": 1}})", "unknown key 'physical.kappa_cc_mhz'");
    require_config_error(R"({"operating": {"phi_grid": {"stat": 0}}})", "unknown key 'operating.phi_grid.stat'");
    require_config_error(R"({"operating": {"phi_rad": "pi"}})", "operating.phi_rad");
    require_config_error(R"({"physical": {"kappa_c_mhz": -1}})", "physical.kappa_c_mhz");
    require_config_error(R"({"physical": {"preset": "other"}})", "physical.preset");
    require_config_error(R"({"integrator": {"initial_state": [1, 2, 3]}})", "integrator.initial_state");
    require_config_error(R"({"output": {"formats": ["png"]}})", "output.formats");
    require_config_error(R"({"experiment": "fly"})", "experiment");
    require_config_error(R"({"workers": -2})", "workers");
    require_config_error("{not json", "");
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("physical overrides and presets", "[config]") {
    const RunConfig c = parse_config(R"({"physical": {"preset": "symmetric", "b_g_mw": 7.7, "dissipation_model": "constant"}})");
    CHECK_THAT(c.physical.b_g, WithinRel(7.7e-3, 1e-12));
    CHECK(c.physical.dissipation == DissipationModel::Constant);
    CHECK(c.physical.kappa_int_1 == PhysicalParams::symmetric().kappa_int_1);
}

TEST_CASE("csv writers", "[output]") {
    Trajectory traj;
    traj.t = {0.0, 1e-9};
    traj.states = {FieldState{Complex{1.0, 2.0}, Complex{3.0, 4.0}}, FieldState{}};
    const std::string t = trajectory_csv(traj);
    CHECK(t.rfind("t_s,re_a1,im_a1,re_a2,im_a2\n", 0) == 0);
    CHECK_THAT(t, ContainsSubstring("0,1,2,3,4\n"));

    Spectrum s;
    s.freq_hz = {-1e6, 0.0};
    s.power_dbm = {-200.0, -3.5};
    CHECK(spectrum_csv(s).rfind("freq_hz,power_dbm\n", 0) == 0);

    CHECK(boundary_csv({{0.5, 7.0}}).rfind("phi_rad,delta_g_star_db\n", 0) == 0);

    const std::string g = grid_csv(small_grid());
    std::istringstream lines(g);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "phi_rad,delta_g_db,amp_dbm,valid");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
    }
    CHECK(rows == 6);
    CHECK_THAT(g, ContainsSubstring("nan,0\n"));
}

TEST_CASE("json writers", "[output]") {
    const auto j = nlohmann::json::parse(grid_json(small_grid()));
    CHECK(j.at("values").size() == 6);
    CHECK(j.at("values")[4].is_null());
    CHECK(j.at("status")[4] == "failed");
    CHECK(j.at("status")[3] == "masked");
    CHECK(j.at("metadata").at("run_id") == "0123");

    const auto m = nlohmann::json::parse(metadata_json(small_grid(), {{"config", "run_config.json"}}));
    CHECK(m.at("cells_failed") == 1);
    CHECK(m.at("cells_masked") == 1);
    CHECK(m.at("cells_valid") == 4);
    CHECK(m.at("config") == "run_config.json");
    CHECK(m.at("experiment") == "phase-diagram");
}

TEST_CASE("heatmap rendering", "[output]") {
    const SweepGrid g = small_grid();
    const std::string svg = render_heatmap(g, Curve{{0.0, 9.0}, {1.0, 5.0}, {3.0, 5.0}}, {"amp", 0});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK_THAT(svg, ContainsSubstring("#9a9a9a"));
    CHECK_THAT(svg, ContainsSubstring("invalid: 2"));
    CHECK_THAT(svg, ContainsSubstring("polyline"));
    CHECK(svg == render_heatmap(g, Curve{{0.0, 9.0}, {1.0, 5.0}, {3.0, 5.0}}, {"amp", 0}));

    SweepGrid one(Axis{"x", {1.0}}, Axis{"y", {2.0}}, "v");
    one.values = {3.0};
    CHECK_NOTHROW(render_heatmap(one));

    SweepGrid empty(Axis{"x", {}}, Axis{"y", {}}, "v");
    CHECK_THROWS_AS(render_heatmap(empty), DomainError);
}

TEST_CASE("write_text_file creates directories", "[output]") {
    const auto dir = std::filesystem::temp_directory_path() / "nhdimer_output_test";
    std::filesystem::remove_all(dir);
    const std::string path = (dir / "a" / "b.txt").string();
    write_text_file(path, "hello\n");
    CHECK(read_file(path) == "hello\n");
    std::filesystem::remove_all(dir);
}
