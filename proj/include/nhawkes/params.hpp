#pragma once

#include <Eigen/Dense>

namespace nhawkes {

/// Parameters of a d-variate exponential-kernel Hawkes process superposed with
/// d independent Poisson processes of common intensity lambda0.
///
/// Kernel convention: h_ij(t) = alpha(i,j) * beta(i) * exp(-beta(i) t) for t >= 0,
/// so alpha(i,j) is the L1 norm of the kernel describing how events of
/// component j excite component i.
struct NoisyHawkesParams {
    Eigen::VectorXd mu;
    Eigen::MatrixXd alpha;
    Eigen::VectorXd beta;
    double lambda0{0.0};

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(mu.size()); }

    [[nodiscard]] static NoisyHawkesParams univariate(double mu, double alpha, double beta,
                                                      double lambda0);

    [[nodiscard]] static NoisyHawkesParams bivariate(const Eigen::Vector2d& mu,
                                                     const Eigen::Matrix2d& alpha,
                                                     const Eigen::Vector2d& beta,
                                                     double lambda0);

    /// Shape and sign checks (finite values, mu >= 0, alpha >= 0, beta > 0,
    /// lambda0 >= 0). Stationarity is checked separately. Throws ConfigError.
    void validate() const;

    /// validate() plus spectral_radius(alpha) < 1.
    void validate_stationary() const;

    bool operator==(const NoisyHawkesParams& other) const;
};

/// Largest eigenvalue modulus of a square matrix.
[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& m);

/// Mean intensities of the Hawkes part: solves (I - alpha) m = mu.
[[nodiscard]] Eigen::VectorXd hawkes_mean_intensity(const NoisyHawkesParams& params);

/// Mean intensities of the noisy process: hawkes_mean_intensity + lambda0.
[[nodiscard]] Eigen::VectorXd mean_intensity(const NoisyHawkesParams& params);

} // namespace nhawkes
