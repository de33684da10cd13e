#include "nhawkes/nufft.hpp"

#include "nhawkes/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace nhawkes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kOversampling = 2.0;

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

} // namespace

std::vector<std::complex<double>> nufft_type1(std::span<const double> x,
                                              std::span<const std::complex<double>> weights,
                                              long first_mode, std::size_t n_modes,
                                              double tolerance) {
    if (!weights.empty() && weights.size() != x.size()) {
        throw ConfigError("nufft: weights and points differ in length");
    }
    if (!(tolerance > 0.0 && tolerance < 1.0)) {
        throw ConfigError("nufft: tolerance must lie in (0, 1)");
    }
    std::vector<std::complex<double>> out(n_modes, {0.0, 0.0});
    if (n_modes == 0 || x.empty()) {
        return out;
    }

    // Centre the band: modes first_mode + q = centre + k with k in [-half, half).
    const long n_even = static_cast<long>(n_modes + (n_modes & 1U));
    const long half = n_even / 2;
    const long centre = first_mode + half;

    // Gaussian width and spreading half-width (Greengard & Lee, R = 2).
    const double decay = std::numbers::pi * (kOversampling - 1.0) / (kOversampling - 0.5);
    const int spread = std::max(2, static_cast<int>(std::ceil(-std::log(tolerance) / decay)) + 1);
    long grid_size = static_cast<long>(std::ceil(kOversampling * static_cast<double>(n_even)));
    grid_size = std::max(grid_size, 2L * spread + 2);
    grid_size += grid_size & 1L;
    const double nm = static_cast<double>(n_even);
    const double tau = std::numbers::pi * spread / (nm * nm * kOversampling * (kOversampling - 0.5));
    const double h = kTwoPi / static_cast<double>(grid_size);

    fftw_complex* grid_raw =
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(grid_size)));
    if (grid_raw == nullptr) {
        throw NumericalError("nufft: allocation failed");
    }
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> grid(grid_raw, &fftw_free);
    std::fill_n(&grid_raw[0][0], 2 * grid_size, 0.0);

    std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        // FFTW_ESTIMATE keeps the algorithm choice, hence the rounding, reproducible.
        plan.reset(fftw_plan_dft_1d(static_cast<int>(grid_size), grid_raw, grid_raw, FFTW_FORWARD,
                                    FFTW_ESTIMATE));
    }
    if (!plan) {
        throw NumericalError("nufft: FFTW planning failed");
    }

    const double inv4tau = 1.0 / (4.0 * tau);
    const double centre_d = static_cast<double>(centre);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double xr = x[j] - kTwoPi * std::floor(x[j] / kTwoPi);  // [0, 2 pi)
        // Shift the band to be centred at zero: multiply by exp(-i centre x).
        const double turns = centre_d * (xr / kTwoPi);
        const double phase = -kTwoPi * (turns - std::floor(turns));
        std::complex<double> c = std::polar(1.0, phase);
        if (!weights.empty()) {
            c *= weights[j];
        }
        const long m0 = static_cast<long>(std::floor(xr / h));
        for (long l = m0 - spread + 1; l <= m0 + spread; ++l) {
            const double dx = xr - static_cast<double>(l) * h;
            const double g = std::exp(-dx * dx * inv4tau);
            const long idx = ((l % grid_size) + grid_size) % grid_size;
            grid_raw[idx][0] += g * c.real();
            grid_raw[idx][1] += g * c.imag();
        }
    }

    fftw_execute(plan.get());

    const double norm = std::sqrt(std::numbers::pi / tau) / static_cast<double>(grid_size);
    for (std::size_t q = 0; q < n_modes; ++q) {
        const long k = static_cast<long>(q) - half;  // centred mode index
        const long idx = ((k % grid_size) + grid_size) % grid_size;
        const double kd = static_cast<double>(k);
        const double s = norm * std::exp(kd * kd * tau);
        out[q] = {grid_raw[idx][0] * s, grid_raw[idx][1] * s};
    }
    return out;
}

} // namespace nhawkes
