#pragma once

#include "nhawkes/model.hpp"
#include "nhawkes/params.hpp"
#include "nhawkes/periodogram.hpp"

#include <Eigen/Dense>

namespace nhawkes {

/// Spectral log-likelihood
///   l(theta) = -(w/T) sum_k [ log det f(nu_k) + tr(f(nu_k)^{-1} I(nu_k)) ]
/// with w the periodogram weight. When `gradient` is non-null it receives the
/// derivative with respect to every entry in the params_to_vector layout.
///
/// Throws NumericalError when theta is not stationary or f is not positive
/// definite at some grid frequency.
[[nodiscard]] double spectral_loglik(const NoisyHawkesParams& theta, const Periodogram& pg,
                                     Eigen::VectorXd* gradient = nullptr);

/// Same, after checking that theta honours the model's fixed and zero entries.
[[nodiscard]] double spectral_loglik(const ModelSpec& spec, const NoisyHawkesParams& theta,
                                     const Periodogram& pg);

/// Reference evaluation through the general matrix density, one frequency at
/// a time. Slow; used to cross-check the fast path.
[[nodiscard]] double spectral_loglik_matrix(const NoisyHawkesParams& theta, const Periodogram& pg);

/// Univariate closed form sum of log f + I/f with f from spectral_density_uni.
[[nodiscard]] double spectral_loglik_uni(const NoisyHawkesParams& theta, const Periodogram& pg);

/// Central finite-difference gradient of spectral_loglik over all entries.
[[nodiscard]] Eigen::VectorXd spectral_loglik_fd_gradient(const NoisyHawkesParams& theta,
                                                          const Periodogram& pg,
                                                          double rel_step = 1e-6);


/// Expected Hessian of -l (the Whittle Fisher information)
///   (w/T) sum_k Re tr(f^{-1} df_a f^{-1} df_b)
/// over all entries in the params_to_vector layout. Every `stride`-th grid
/// frequency is used and the sum rescaled; stride 0 picks one automatically.
[[nodiscard]] Eigen::MatrixXd spectral_fisher(const NoisyHawkesParams& theta, const Periodogram& pg,
                                              std::size_t stride = 0);

} // namespace nhawkes
