#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace nhawkes {

/// Type-1 nonuniform DFT onto a contiguous band of integer modes:
///   F[q] = sum_j weights[j] * exp(-i (first_mode + q) x_j),  q = 0 .. n_modes-1,
/// with x_j arbitrary reals (interpreted mod 2 pi). Evaluated by Gaussian
/// gridding onto an oversampled grid followed by an FFT; `tolerance` sets the
/// spreading width. An empty `weights` span means unit weights.
[[nodiscard]] std::vector<std::complex<double>> nufft_type1(
    std::span<const double> x, std::span<const std::complex<double>> weights,
    long first_mode, std::size_t n_modes, double tolerance = 1e-9);

} // namespace nhawkes
