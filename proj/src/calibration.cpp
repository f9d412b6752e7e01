#include "nhdimer/calibration.hpp"

#include "nhdimer/error.hpp"
#include "nhdimer/least_squares.hpp"
#include "nhdimer/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace nhdimer {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) {
        throw DomainError("median of an empty set");
    }
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double wrap_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    return w >= 360.0 ? 0.0 : w;
}

double circular_deg_distance(double a, double b) {
    const double d = std::abs(wrap_deg(a) - wrap_deg(b));
    return std::min(d, 360.0 - d);
}

}  // namespace

// ---------------------------------------------------------------------------

S11FitResult S11FitResult::from_rates(double omega_res, double kappa_int, double kappa_c, double baseline) {
    S11FitResult r;
    r.omega_res = omega_res;
    r.q_int = omega_res / kappa_int;
    r.q_c = omega_res / (2.0 * kappa_c);
    r.baseline = baseline;
    return r;
}

double s11_model(double omega_probe, const S11FitResult& fit) {
    const double w = fit.omega_res;
    const Complex denom{w * (1.0 / fit.q_int + 1.0 / fit.q_c), w - omega_probe};
    return fit.baseline - std::abs(w / (2.0 * fit.q_c) / denom);
}

S11FitResult s11_fit(const std::vector<double>& freq_hz, const std::vector<double>& magnitude) {
    const std::size_t m = freq_hz.size();
    if (magnitude.size() != m) {
        throw DomainError("s11_fit: frequency and magnitude arrays differ in length");
    }
    if (m < 16) {
        throw DomainError("s11_fit: needs at least 16 points");
    }
    if (!std::is_sorted(freq_hz.begin(), freq_hz.end()) || !(freq_hz.back() > freq_hz.front())) {
        throw DomainError("s11_fit: frequencies must be strictly ascending");
    }

    const std::size_t quarter = std::max<std::size_t>(1, m / 4);
    std::vector<double> outer(magnitude.begin(), magnitude.begin() + static_cast<std::ptrdiff_t>(quarter));
    outer.insert(outer.end(), magnitude.end() - static_cast<std::ptrdiff_t>(quarter), magnitude.end());
    const double base0 = median(outer);
    std::vector<double> dev;
    for (double v : outer) {
        dev.push_back(std::abs(v - base0));
    }
    const double noise = 1.4826 * median(dev);

    const auto kmin = static_cast<std::size_t>(std::min_element(magnitude.begin(), magnitude.end()) - magnitude.begin());
    const double depth = base0 - magnitude[kmin];
    if (!(depth > std::max(5.0 * noise, 1e-9 * std::abs(base0)))) {
        throw FitFailed("s11_fit: no resonance dip found", noise, 0);
    }

    const double f_lo = freq_hz.front();
    const double span = freq_hz.back() - f_lo;
    const double f_mid = f_lo + 0.5 * span;
    const auto x_of = [&](std::size_t k) { return (freq_hz[k] - f_mid) / span; };

    // half-depth crossings on either side of the minimum
    const double half = base0 - 0.5 * depth;
    std::size_t l = kmin;
    while (l > 0 && magnitude[l] < half) {
        --l;
    }
    std::size_t r = kmin;
    while (r + 1 < m && magnitude[r] < half) {
        ++r;
    }
    const double half_width = std::max(0.5 * (x_of(r) - x_of(l)), 0.5 / static_cast<double>(m));
    // the dip k_c / |i d + k_t| falls to half its depth at d = sqrt(3) k_t
    const double kt = half_width / std::sqrt(3.0);
    const double kc0 = std::clamp(depth / base0, 0.01, 0.49) * kt;
    const double ki0 = std::max(kt - 2.0 * kc0, 0.05 * kt);

    Eigen::VectorXd y(static_cast<Eigen::Index>(m));
    Eigen::VectorXd x(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
        x[static_cast<Eigen::Index>(k)] = x_of(k);
        y[static_cast<Eigen::Index>(k)] = magnitude[k];
    }
    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd res(x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const Complex d{p[1] + 2.0 * p[2], p[0] - x[k]};
            res[k] = p[3] - p[2] / std::abs(d) - y[k];
        }
        return res;
    };
    Eigen::Vector4d p0(x_of(kmin), ki0, kc0, base0);
    Eigen::Vector4d lo(x[0], 1e-9, 1e-9, 0.0);
    Eigen::Vector4d hi(x[x.size() - 1], 10.0, 10.0, 10.0 * std::abs(base0) + 1.0);
    const LsqResult fit = fit_least_squares(residual, p0, lo, hi, "s11_fit");

    const double omega_res = units::hz_to_rad(f_mid + fit.x[0] * span);
    S11FitResult out = S11FitResult::from_rates(omega_res, units::hz_to_rad(fit.x[1] * span),
                                                units::hz_to_rad(fit.x[2] * span), fit.x[3]);
    out.residual_rms = fit.residual_rms;
    if (!(out.q_int > 0.0 && out.q_c > 0.0) || !std::isfinite(out.q_int) || !std::isfinite(out.q_c)) {
        throw FitFailed("s11_fit: non-physical quality factors", fit.residual_rms, fit.iterations);
    }
    return out;
}

// ---------------------------------------------------------------------------

GainProfile GainProfile::measured() {
    GainProfile g;
    g.g0_db = 20.3;
    g.p_sat = units::mw_to_w(0.995);
    g.b_g = units::mw_to_w(7.7);
    return g;
}

double gain_model_output(const GainProfile& profile, double p_in) {
    const double compression = p_in <= profile.p_sat ? 1.0 : (profile.b_g + profile.p_sat) / (profile.b_g + p_in);
    return p_in * units::db_to_power(profile.g0_db) * compression * compression;
}

GainProfile gain_profile_fit(const std::vector<double>& p_in_w, const std::vector<double>& p_out_w) {
    const std::size_t m = p_in_w.size();
    if (p_out_w.size() != m) {
        throw DomainError("gain_profile_fit: input and output arrays differ in length");
    }
    if (m < 8) {
        throw DomainError("gain_profile_fit: needs at least 8 points");
    }
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) {
        order[k] = k;
        if (!(p_in_w[k] > 0.0) || !(p_out_w[k] > 0.0)) {
            throw DomainError("gain_profile_fit: powers must be positive");
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_in_w[a] < p_in_w[b]; });
    std::vector<double> pin_mw(m), gain_db(m), out_db(m);
    for (std::size_t k = 0; k < m; ++k) {
        pin_mw[k] = units::w_to_mw(p_in_w[order[k]]);
        out_db[k] = 10.0 * std::log10(units::w_to_mw(p_out_w[order[k]]));
        gain_db[k] = out_db[k] - 10.0 * std::log10(pin_mw[k]);
    }

    const std::size_t low = std::max<std::size_t>(1, m / 5);
    const double g0 = median(std::vector<double>(gain_db.begin(), gain_db.begin() + static_cast<std::ptrdiff_t>(low)));

    // 1 dB compression point, interpolated in log input power
    double p1db = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (g0 - gain_db[k] >= 1.0) {
            if (k == 0) {
                p1db = pin_mw[0];
            } else {
                const double d0 = g0 - gain_db[k - 1];
                const double d1 = g0 - gain_db[k];
                const double t = (1.0 - d0) / (d1 - d0);
                p1db = std::exp(std::log(pin_mw[k - 1]) + t * (std::log(pin_mw[k]) - std::log(pin_mw[k - 1])));
            }
            break;
        }
    }
    if (!(p1db > 0.0)) {
        throw FitFailed("gain_profile_fit: no knee detected", 0.0, 0);
    }

    // parameters: [G0 (dB), ln P_sat (mW), ln b_G (mW)]
    const auto residual = [&](const Eigen::VectorXd& p) {
        const GainProfile g{p[0], std::exp(p[1]), std::exp(p[2]), 0.0};
        Eigen::VectorXd r(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k) {
            r[static_cast<Eigen::Index>(k)] = 10.0 * std::log10(gain_model_output(g, pin_mw[k])) - out_db[k];
        }
        return r;
    };

    // coarse search around the compression point seeds the local fit
    Eigen::Vector3d best(g0, std::log(p1db), std::log(10.0 * p1db));
    double best_cost = residual(best).squaredNorm();
    for (int a = 0; a <= 16; ++a) {
        const double ps = p1db * std::pow(10.0, -1.0 + 1.2 * a / 16.0);
        for (int b = 0; b <= 30; ++b) {
            const double bg = p1db * std::pow(10.0, -1.0 + 3.0 * b / 30.0);
            const Eigen::Vector3d p(g0, std::log(ps), std::log(bg));
            const double c = residual(p).squaredNorm();
            if (c < best_cost) {
                best_cost = c;
                best = p;
            }
        }
    }
    const double lp_lo = std::log(pin_mw.front()) - 5.0;
    const double lp_hi = std::log(pin_mw.back()) + 5.0;
    const Eigen::Vector3d lo(g0 - 20.0, lp_lo, lp_lo - 5.0);
    const Eigen::Vector3d hi(g0 + 20.0, lp_hi, lp_hi + 5.0);
    const LsqResult fit = fit_least_squares(residual, best, lo, hi, "gain_profile_fit");

    GainProfile out;
    out.g0_db = fit.x[0];
    out.p_sat = units::mw_to_w(std::exp(fit.x[1]));
    out.b_g = units::mw_to_w(std::exp(fit.x[2]));
    out.residual_rms_db = fit.residual_rms;
    return out;
}

// ---------------------------------------------------------------------------

DeviceSettings HashMap::lookup(double delta_g_db, double phi) const {
    const double target_deg = wrap_deg(rad_to_deg(phi) + options.phi_ref_deg);
    std::size_t best = phi_exp_deg.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < phi_exp_deg.size(); ++i) {
        if (outlier[i]) {
            continue;
        }
        const double d = circular_deg_distance(phi_exp_deg[i], target_deg);
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    if (best == phi_exp_deg.size()) {
        throw DomainError("hashmap lookup: table has no usable phase rows");
    }
    if (best_dist > 1.5 * rad_to_deg(phi_resolution()) + 1e-9) {
        throw DomainError("hashmap lookup: phase outside table coverage");
    }
    DeviceSettings s;
    s.phi_exp_deg = phi_exp_deg[best];
    s.gamma_bwd_db = options.g0_db - delta_g_db - loss_db[best];
    s.gamma_fwd_db = options.g0_db - delta_g_db - options.l_fwd_db;
    for (const double g : {s.gamma_fwd_db, s.gamma_bwd_db}) {
        if (g < options.attenuator_min_db || g > options.attenuator_max_db) {
            throw RangeError("hashmap lookup: attenuation " + std::to_string(g) + " dB outside [" +
                             std::to_string(options.attenuator_min_db) + ", " +
                             std::to_string(options.attenuator_max_db) + "] dB");
        }
    }
    return s;
}

ImpliedPoint HashMap::implied(const DeviceSettings& s) const {
    if (phi_exp_deg.empty()) {
        throw DomainError("hashmap: empty table");
    }
    std::size_t row = 0;
    for (std::size_t i = 1; i < phi_exp_deg.size(); ++i) {
        if (std::abs(phi_exp_deg[i] - s.phi_exp_deg) < std::abs(phi_exp_deg[row] - s.phi_exp_deg)) {
            row = i;
        }
    }
    ImpliedPoint p;
    p.delta_g_bwd_db = options.g0_db - loss_db[row] - s.gamma_bwd_db;
    p.delta_g_fwd_db = options.g0_db - options.l_fwd_db - s.gamma_fwd_db;
    p.phi_rad = units::wrap_phase(deg_to_rad(s.phi_exp_deg - options.phi_ref_deg));
    return p;
}

double HashMap::phi_resolution() const {
    if (phi_exp_deg.size() < 2) {
        return units::kTwoPi;
    }
    double step = 360.0;
    for (std::size_t i = 1; i < phi_exp_deg.size(); ++i) {
        const double d = phi_exp_deg[i] - phi_exp_deg[i - 1];
        if (d > 0.0) {
            step = std::min(step, d);
        }
    }
    return deg_to_rad(step);
}

HashMap hashmap_build(const std::vector<CalibrationRow>& rows, const std::vector<double>& delta_g_targets,
                      const HashMapOptions& options) {
    if (rows.size() < 3) {
        throw DomainError("hashmap_build: need at least 3 calibration rows");
    }
    std::vector<CalibrationRow> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const CalibrationRow& a, const CalibrationRow& b) { return a.phi_exp_deg < b.phi_exp_deg; });
    if (sorted.front().phi_exp_deg > 0.0 + 1e-9 || sorted.back().phi_exp_deg < 360.0 - 1.5 * 360.0 / static_cast<double>(rows.size())) {
        throw DomainError("hashmap_build: calibration must cover [0, 360) degrees");
    }

    HashMap map;
    map.options = options;
    for (const CalibrationRow& r : sorted) {
        map.phi_exp_deg.push_back(r.phi_exp_deg);
        map.loss_db.push_back(options.g0_db - r.s21_db_at_gamma0);
    }

    // outliers stand apart from the median of their two neighbours on each side
    const std::size_t n = sorted.size();
    map.outlier.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> neighbours;
        for (const std::size_t off : {n - 2, n - 1, std::size_t{1}, std::size_t{2}}) {
            neighbours.push_back(map.loss_db[(i + off) % n]);
        }
        map.outlier[i] = std::abs(map.loss_db[i] - median(neighbours)) > options.outlier_threshold_db;
    }

    for (const double dg : delta_g_targets) {
        for (std::size_t i = 0; i < n; ++i) {
            HashEntry e;
            e.delta_g_db = dg;
            e.phi_exp_deg = map.phi_exp_deg[i];
            e.phi_rad = units::wrap_phase(deg_to_rad(e.phi_exp_deg - options.phi_ref_deg));
            e.gamma_bwd_db = options.g0_db - dg - map.loss_db[i];
            e.gamma_fwd_db = options.g0_db - dg - options.l_fwd_db;
            e.outlier = map.outlier[i];
            if (!e.outlier) {
                for (const double g : {e.gamma_fwd_db, e.gamma_bwd_db}) {
                    if (g < options.attenuator_min_db || g > options.attenuator_max_db) {
                        throw RangeError("hashmap_build: delta_g " + std::to_string(dg) + " dB needs attenuation " +
                                         std::to_string(g) + " dB at phi_exp " + std::to_string(e.phi_exp_deg));
                    }
                }
            }
            map.entries.push_back(e);
        }
    }
    return map;
}

std::vector<CalibrationRow> synthetic_calibration(double g0_db, double step_deg, double glitch_db) {
    if (!(step_deg > 0.0)) {
        throw DomainError("synthetic_calibration: step must be positive");
    }
    std::vector<CalibrationRow> rows;
    const auto count = static_cast<std::size_t>(std::llround(360.0 / step_deg));
    for (std::size_t k = 0; k <= count; ++k) {
        const double deg = static_cast<double>(k) * step_deg;
        const double rad = deg_to_rad(deg);
        // insertion loss of a few dB with a slow non-monotonic ripple
        const double loss = 3.0 + 1.2 * std::sin(rad) + 0.6 * std::cos(2.0 * rad + 0.4);
        double s21 = g0_db - loss;
        if (k == count) {
            s21 -= glitch_db;
        }
        rows.push_back({deg, s21});
    }
    return rows;
}

void save_hashmap(const HashMap& map, const std::string& csv_path) {
    std::ofstream csv(csv_path);
    if (!csv) {
        throw ConfigError("cannot write " + csv_path);
    }
    csv << "delta_g_db,phi_rad,gamma_fwd_db,gamma_bwd_db,phi_exp_deg,outlier\n";
    char buf[256];
    for (const HashEntry& e : map.entries) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%d\n", e.delta_g_db, e.phi_rad, e.gamma_fwd_db,
                      e.gamma_bwd_db, e.phi_exp_deg, e.outlier ? 1 : 0);
        csv << buf;
    }

    nlohmann::ordered_json meta;
    meta["g0_db"] = map.options.g0_db;
    meta["l_fwd_db"] = map.options.l_fwd_db;
    meta["phi_ref_deg"] = map.options.phi_ref_deg;
    meta["attenuator_min_db"] = map.options.attenuator_min_db;
    meta["attenuator_max_db"] = map.options.attenuator_max_db;
    meta["outlier_threshold_db"] = map.options.outlier_threshold_db;
    meta["source"] = map.source;
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char date[32];
    std::strftime(date, sizeof date, "%Y-%m-%d", std::gmtime(&now));
    meta["date"] = date;
    nlohmann::ordered_json profile = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < map.phi_exp_deg.size(); ++i) {
        profile.push_back({{"phi_exp_deg", map.phi_exp_deg[i]}, {"loss_db", map.loss_db[i]}, {"outlier", static_cast<bool>(map.outlier[i])}});
    }
    meta["profile"] = profile;
    std::ofstream side(csv_path + ".json");
    if (!side) {
        throw ConfigError("cannot write " + csv_path + ".json");
    }
    side << meta.dump(2) << "\n";
}

HashMap load_hashmap(const std::string& csv_path) {
    std::ifstream side(csv_path + ".json");
    if (!side) {
        throw ConfigError("missing hash-map sidecar " + csv_path + ".json");
    }
    HashMap map;
    try {
        const nlohmann::json meta = nlohmann::json::parse(side);
        map.options.g0_db = meta.at("g0_db").get<double>();
        map.options.l_fwd_db = meta.at("l_fwd_db").get<double>();
        map.options.phi_ref_deg = meta.at("phi_ref_deg").get<double>();
        map.options.attenuator_min_db = meta.at("attenuator_min_db").get<double>();
        map.options.attenuator_max_db = meta.at("attenuator_max_db").get<double>();
        map.options.outlier_threshold_db = meta.at("outlier_threshold_db").get<double>();
        map.source = meta.at("source").get<std::string>();
        for (const auto& row : meta.at("profile")) {
            map.phi_exp_deg.push_back(row.at("phi_exp_deg").get<double>());
            map.loss_db.push_back(row.at("loss_db").get<double>());
            map.outlier.push_back(row.at("outlier").get<bool>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed hash-map sidecar: " + std::string(e.what()));
    }

    std::ifstream csv(csv_path);
    if (!csv) {
        throw ConfigError("cannot read " + csv_path);
    }
    std::string line;
    std::getline(csv, line);
    if (line != "delta_g_db,phi_rad,gamma_fwd_db,gamma_bwd_db,phi_exp_deg,outlier") {
        throw ConfigError("unexpected hash-map header in " + csv_path);
    }
    while (std::getline(csv, line)) {
        if (line.empty()) {
            continue;
        }
        HashEntry e;
        int outlier = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%d", &e.delta_g_db, &e.phi_rad, &e.gamma_fwd_db,
                        &e.gamma_bwd_db, &e.phi_exp_deg, &outlier) != 6) {
            throw ConfigError("malformed hash-map row: " + line);
        }
        e.outlier = outlier != 0;
        map.entries.push_back(e);
    }
    return map;
}

std::vector<double> add_noise(const std::vector<double>& clean, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    std::vector<double> out = clean;
    for (double& v : out) {
        v += normal(rng);
    }
    return out;
}

}  // namespace nhdimer
