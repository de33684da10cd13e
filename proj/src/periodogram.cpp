#include "nhawkes/periodogram.hpp"

#include "nhawkes/error.hpp"
#include "nhawkes/nufft.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace nhawkes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNufftTolerance = 1e-9;

} // namespace

Eigen::MatrixXcd Periodogram::matrix(std::size_t index) const {
    Eigen::MatrixXcd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            m(i, j) = at(index, i, j);
        }
    }
    return m;
}

std::vector<cplx> fourier_sums(std::span<const double> times, double t_start, double horizon,
                               std::size_t m, PeriodogramMethod method) {
    if (!(horizon > 0.0)) {
        throw ConfigError("periodogram needs a positive horizon");
    }
    std::vector<cplx> z(m, {0.0, 0.0});
    if (times.empty() || m == 0) {
        return z;
    }
    if (method == PeriodogramMethod::Fast) {
        std::vector<double> x(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) {
            x[j] = kTwoPi * ((times[j] - t_start) / horizon);
        }
        return nufft_type1(x, {}, 1, m, kNufftTolerance);
    }
    constexpr std::size_t kResync = 64;
    for (double t : times) {
        const double u = (t - t_start) / horizon;  // phase in turns per unit k
        const cplx step = std::polar(1.0, -kTwoPi * u);
        cplx p = step;
        for (std::size_t k = 1; k <= m; ++k) {
            z[k - 1] += p;
            if (k % kResync == 0) {
                const double turns = static_cast<double>(k + 1) * u;
                p = std::polar(1.0, -kTwoPi * (turns - std::floor(turns)));
            } else {
                p *= step;
            }
        }
    }
    return z;
}

Periodogram periodogram(const EventSeries& events, std::size_t m, PeriodogramMethod method) {
    if (m < 1) {
        throw ConfigError("periodogram needs at least one frequency");
    }
    const int d = events.dim();
    const double horizon = events.horizon();
    std::vector<std::vector<cplx>> z(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        z[static_cast<std::size_t>(i)] =
            fourier_sums(events.times(i), events.t_start(), horizon, m, method);
    }
    Periodogram pg;
    pg.dim = d;
    pg.horizon = horizon;
    pg.frequency_count = m;
    const auto dd = static_cast<std::size_t>(d);
    pg.values.assign(m * dd * dd, {0.0, 0.0});
    const double inv_t = 1.0 / horizon;
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < dd; ++i) {
            // Diagonal entries are exactly real and non-negative.
            pg.values[k * dd * dd + i * dd + i] = {std::norm(z[i][k]) * inv_t, 0.0};
            for (std::size_t j = i + 1; j < dd; ++j) {
                const cplx v = z[i][k] * std::conj(z[j][k]) * inv_t;
                pg.values[k * dd * dd + i * dd + j] = v;
                pg.values[k * dd * dd + j * dd + i] = std::conj(v);
            }
        }
    }
    return pg;
}

Periodogram average_periodograms(std::span<const Periodogram> pgs) {
    if (pgs.empty()) {
        throw ConfigError("cannot average an empty list of periodograms");
    }
    Periodogram out = pgs.front();
    double total_weight = out.weight;
    for (auto& v : out.values) {
        v *= out.weight;
    }
    for (std::size_t r = 1; r < pgs.size(); ++r) {
        const auto& pg = pgs[r];
        if (pg.dim != out.dim || pg.horizon != out.horizon ||
            pg.frequency_count != out.frequency_count) {
            throw ConfigError("periodograms differ in dimension, horizon or grid length");
        }
        for (std::size_t q = 0; q < out.values.size(); ++q) {
            out.values[q] += pg.weight * pg.values[q];
        }
        total_weight += pg.weight;
    }
    for (auto& v : out.values) {
        v /= total_weight;
    }
    out.weight = total_weight;
    return out;
}

void write_periodogram_csv(std::ostream& out, const Periodogram& pg) {
    out << "k,nu";
    for (int i = 0; i < pg.dim; ++i) {
        for (int j = 0; j < pg.dim; ++j) {
            out << ",re_" << i << j << ",im_" << i << j;
        }
    }
    out << '\n';
    for (std::size_t k = 0; k < pg.frequency_count; ++k) {
        out << (k + 1) << ',' << format_double(pg.frequency(k));
        for (int i = 0; i < pg.dim; ++i) {
            for (int j = 0; j < pg.dim; ++j) {
                const cplx v = pg.at(k, i, j);
                out << ',' << format_double(v.real()) << ',' << format_double(v.imag());
            }
        }
        out << '\n';
    }
}

} // namespace nhawkes
