#pragma once

#include <cmath>
#include <numbers>

// Internal convention: every rate and frequency is angular (rad/s), every power
// is in watts. Ordinary frequencies (MHz, GHz) and dB/dBm appear only at the I/O
// boundary and are converted with the helpers below.
namespace nhdimer::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHbar = 1.054571817e-34;  // J*s

constexpr double mhz_to_rad(double mhz) { return kTwoPi * 1e6 * mhz; }
constexpr double rad_to_mhz(double rad_per_s) { return rad_per_s / (kTwoPi * 1e6); }
constexpr double ghz_to_rad(double ghz) { return kTwoPi * 1e9 * ghz; }
constexpr double rad_to_ghz(double rad_per_s) { return rad_per_s / (kTwoPi * 1e9); }
constexpr double rad_to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }
constexpr double hz_to_rad(double hz) { return kTwoPi * hz; }

constexpr double mw_to_w(double mw) { return mw * 1e-3; }
constexpr double w_to_mw(double w) { return w * 1e3; }

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

/// Field (amplitude) factor of a gain in dB.
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

/// Wraps an angle into [0, 2*pi).
inline double wrap_phase(double phi) {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) {
        w += kTwoPi;
    }
    // fmod of a value just below a multiple of 2*pi can round up to 2*pi
    return w >= kTwoPi ? 0.0 : w;
}

}  // namespace nhdimer::units
