#include "nhdimer/spectral.hpp"

#include "nhdimer/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>
#include <numeric>

namespace nhdimer {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex, FftwFree>;

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

}  // namespace

std::vector<Complex> dft(std::span<const Complex> x) {
    if (x.empty()) {
        throw DomainError("dft: empty input");
    }
    const int n = static_cast<int>(x.size());
    // fftw_malloc keeps alignment fixed so identical inputs give identical bits.
    FftwBuffer in(fftw_alloc_complex(x.size()));
    FftwBuffer out(fftw_alloc_complex(x.size()));
    Plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_1d(n, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    }
    static_assert(sizeof(Complex) == sizeof(fftw_complex));
    std::memcpy(in.get(), x.data(), x.size() * sizeof(Complex));
    fftw_execute(plan.get());

    std::vector<Complex> y(x.size());
    std::memcpy(static_cast<void*>(y.data()), out.get(), x.size() * sizeof(Complex));
    return y;
}

std::size_t Spectrum::dc_index() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < freq_hz.size(); ++k) {
        if (std::abs(freq_hz[k]) < std::abs(freq_hz[best])) {
            best = k;
        }
    }
    return best;
}

std::size_t retained_start(const Trajectory& traj, double discard_fraction) {
    if (!(discard_fraction >= 0.0 && discard_fraction < 1.0)) {
        throw DomainError("discard_fraction must lie in [0, 1)");
    }
    const auto start = static_cast<std::size_t>(std::floor(discard_fraction * static_cast<double>(traj.size())));
    if (start >= traj.size()) {
        throw DomainError("retained window is empty");
    }
    return start;
}

namespace {

std::vector<Complex> retained_a2(const Trajectory& traj, double discard_fraction) {
    const std::size_t start = retained_start(traj, discard_fraction);
    std::vector<Complex> x;
    x.reserve(traj.size() - start);
    for (std::size_t k = start; k < traj.size(); ++k) {
        x.push_back(traj.states[k].a2);
    }
    return x;
}

// Signed frequency of FFT bin k for a length-n transform.
double bin_frequency(std::size_t k, std::size_t n, double bin_hz) {
    const auto signed_k = k <= (n - 1) / 2 ? static_cast<double>(k)
                                           : static_cast<double>(k) - static_cast<double>(n);
    return signed_k * bin_hz;
}

}  // namespace

Spectrum emission_spectrum(const PhysicalParams& params, const Trajectory& traj, double discard_fraction) {
    const std::vector<Complex> x = retained_a2(traj, discard_fraction);
    const std::vector<Complex> y = dft(x);
    const std::size_t n = y.size();

    Spectrum s;
    s.bin_hz = 1.0 / (static_cast<double>(n) * traj.dt);
    s.freq_hz.resize(n);
    s.amp.resize(n);
    s.power_dbm.resize(n);
    // rotate so that bins run from the most negative frequency upwards
    const std::size_t shift = n - (n - 1) / 2 - 1;  // number of negative bins
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t dst = (k + shift) % n;
        s.freq_hz[dst] = bin_frequency(k, n, s.bin_hz);
        s.amp[dst] = y[k] / static_cast<double>(n);
        s.power_dbm[dst] = photons_to_dbm(params, std::norm(s.amp[dst]));
    }
    return s;
}

Complex dc_component(const Trajectory& traj, double discard_fraction) {
    const std::size_t start = retained_start(traj, discard_fraction);
    Complex sum{};
    for (std::size_t k = start; k < traj.size(); ++k) {
        sum += traj.states[k].a2;
    }
    return sum / static_cast<double>(traj.size() - start);
}

double s21_db(const PhysicalParams& params, Complex dc, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw DomainError("s21_db: drive strength must be positive");
    }
    const double ratio = params.kappa_in * params.kappa_out * std::norm(dc) / (epsilon * epsilon);
    if (ratio <= 0.0) {
        return kPowerFloorDb;
    }
    return std::max(kPowerFloorDb, 10.0 * std::log10(ratio));
}

double photons_to_dbm(const PhysicalParams& params, double n) {
    if (!(n >= 0.0)) {
        throw DomainError("photons_to_dbm: photon number must be non-negative");
    }
    const double watts = params.hbar * params.omega_c * n * params.kappa_out;
    if (watts <= 0.0) {
        return kPowerFloorDb;
    }
    return std::max(kPowerFloorDb, units::watts_to_dbm(watts));
}

std::size_t argmax_magnitude(std::span<const Complex> y) {
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double m = std::norm(y[k]);
        if (m > best_mag) {
            best_mag = m;
            best = k;
        }
    }
    return best;
}

LcObservation lc_extract(const PhysicalParams& params, const Trajectory& traj, const LcExtractOptions& options) {
    if (traj.driven) {
        throw DomainError("lc_extract: expects an undriven trajectory");
    }
    const std::vector<Complex> x = retained_a2(traj, options.discard_fraction);
    const std::size_t n = x.size();

    LcObservation obs;
    obs.bin_hz = 1.0 / (static_cast<double>(n) * traj.dt);

    double mean_all = 0.0;
    for (const Complex& v : x) {
        mean_all += std::norm(v);
    }
    mean_all /= static_cast<double>(n);
    if (mean_all < options.vacuum_fraction * params.n_sat()) {
        obs.mean_photons = mean_all;
        return obs;
    }

    // steady amplitude from the tail of the retained window
    const std::size_t tail = n - std::max<std::size_t>(1, n / 5);
    double mean_tail = 0.0;
    for (std::size_t k = tail; k < n; ++k) {
        mean_tail += std::norm(x[k]);
    }
    mean_tail /= static_cast<double>(n - tail);
    obs.mean_photons = mean_tail;

    const std::vector<Complex> y = dft(x);
    const std::size_t k_max = argmax_magnitude(y);
    // exp(+i mu t) in the frame rotating at omega_c oscillates at omega_c - mu in
    // the lab, so the bin frequency is directly omega_c - omega_LC.
    obs.freq_offset_hz = bin_frequency(k_max, n, obs.bin_hz);

    const double dbm = photons_to_dbm(params, mean_tail);
    if (dbm >= options.floor_dbm) {
        obs.present = true;
        obs.amp_dbm = dbm;
    }
    return obs;
}

}  // namespace nhdimer
