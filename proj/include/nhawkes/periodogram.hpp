#pragma once

#include "nhawkes/events.hpp"
#include "nhawkes/spectral.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace nhawkes {

/// Cross-periodogram matrices I(nu_k) = (1/T) z(nu_k) z(nu_k)^* on the grid
/// nu_k = k / T, k = 1..M, where z_i(nu) = sum over events of exp(-2 pi i nu t).
///
/// `weight` is the number of replicates averaged into `values`; the Whittle
/// log-likelihood scales with it so that an averaged periodogram stands for
/// the sum of the individual likelihoods.
struct Periodogram {
    int dim{1};
    double horizon{1.0};
    double weight{1.0};
    std::size_t frequency_count{0};
    /// Row-major d x d blocks, one per frequency.
    std::vector<cplx> values;

    [[nodiscard]] double frequency(std::size_t index) const {
        return static_cast<double>(index + 1) / horizon;
    }
    [[nodiscard]] cplx at(std::size_t index, int i, int j) const {
        const auto d = static_cast<std::size_t>(dim);
        return values[index * d * d + static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
    }
    [[nodiscard]] Eigen::MatrixXcd matrix(std::size_t index) const;
};

enum class PeriodogramMethod {
    Direct,  ///< O(n M) phase recurrences, resynchronised every 64 steps
    Fast,    ///< type-1 NUFFT of the event measure onto the frequency grid
};

/// Fourier sums z(nu_k), k = 1..M, of times in [t_start, t_start + T] taken
/// relative to t_start.
[[nodiscard]] std::vector<cplx> fourier_sums(std::span<const double> times, double t_start,
                                             double horizon, std::size_t m,
                                             PeriodogramMethod method);

[[nodiscard]] Periodogram periodogram(const EventSeries& events, std::size_t m,
                                      PeriodogramMethod method = PeriodogramMethod::Fast);

/// Entrywise average of periodograms sharing dimension, horizon and grid
/// length. The result's weight is the sum of the input weights.
[[nodiscard]] Periodogram average_periodograms(std::span<const Periodogram> pgs);

/// CSV columns: k, nu, then re_ij, im_ij for every entry (row-major).
void write_periodogram_csv(std::ostream& out, const Periodogram& pg);

} // namespace nhawkes
