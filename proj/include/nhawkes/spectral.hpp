#pragma once

#include "nhawkes/params.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>

namespace nhawkes {

using cplx = std::complex<double>;

/// d x d complex spectral density evaluated at frequency `nu` (cycles per time unit).
struct SpectralMatrix {
    double nu{0.0};
    Eigen::MatrixXcd values;
};

/// Fourier transform of h(t) = alpha * beta * exp(-beta t) 1{t >= 0}, with the
/// convention h~(nu) = int h(t) exp(-2 pi i nu t) dt.
[[nodiscard]] cplx exp_kernel_ft(double alpha, double beta, double nu);

/// Matrix of exponential kernel transforms h~_ij(nu) for the parameters.
[[nodiscard]] Eigen::MatrixXcd exp_kernel_ft_matrix(const NoisyHawkesParams& params, double nu);

/// Closed-form univariate noisy exponential density
///   mu/(1-a) * b^2 a (2-a) / (b^2 (1-a)^2 + 4 pi^2 nu^2) + mu/(1-a) + lambda0.
/// Accepts nu = +-infinity (returns the high-frequency limit).
[[nodiscard]] double spectral_density_uni(const NoisyHawkesParams& params, double nu);

/// Closed-form bivariate density (explicit 2 x 2 inversion of I - h~).
[[nodiscard]] SpectralMatrix spectral_density_biv(const NoisyHawkesParams& params, double nu);

/// Callback returning the d x d kernel transform matrix at a frequency.
using KernelTransform = std::function<Eigen::MatrixXcd(double)>;

/// Generic matrix formula
///   (I - h~(nu))^{-1} diag(m) (I - h~(-nu)^T)^{-1} + lambda0 I,
/// with m = (I - h~(0))^{-1} mu. Both inverses are computed independently, so
/// this serves as a reference for the closed forms. Throws NumericalError on
/// singular matrices and ConfigError when h~(0) is not stable.
[[nodiscard]] SpectralMatrix spectral_density_general(const Eigen::VectorXd& mu,
                                                      const KernelTransform& kernel_ft,
                                                      double lambda0, double nu);

/// spectral_density_general with exponential kernels.
[[nodiscard]] SpectralMatrix spectral_density_exp(const NoisyHawkesParams& params, double nu);

/// Univariate noisy Hawkes process with rectangle kernel
/// alpha * phi^{-1} 1{0 <= t <= phi}.
struct RectParams {
    double mu{1.0};
    double alpha{0.5};
    double phi{1.0};
    double lambda0{0.0};

    void validate() const;
};

/// Transform of the unit-mass rectangle kernel on [0, phi]:
/// (1 - exp(-2 pi i nu phi)) / (2 pi i nu phi), series-expanded near 0.
[[nodiscard]] cplx rect_kernel_ft(double phi, double nu);

/// mu / ((1 - alpha) |1 - alpha h~(nu)|^2) + lambda0.
[[nodiscard]] double spectral_density_rect(const RectParams& params, double nu);

/// Even Taylor expansion f(nu) = a + c1 nu^2 + c2 nu^4 + o(nu^5) around 0.
struct RectTaylor {
    double a{0.0};
    double c1{0.0};
    double c2{0.0};
};

/// Expansion coefficients for an arbitrary unit-mass kernel with raw moments
/// m1..m4 (m_n = int t^n h(t) dt).
[[nodiscard]] RectTaylor taylor_from_moments(double mu, double alpha, double lambda0,
                                             double m1, double m2, double m3, double m4);

/// taylor_from_moments with the uniform moments m_n = phi^n / (n + 1).
[[nodiscard]] RectTaylor rect_taylor(const RectParams& params);

} // namespace nhawkes
