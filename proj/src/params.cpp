#include "nhawkes/params.hpp"

#include "nhawkes/error.hpp"

#include <cmath>
#include <string>

namespace nhawkes {

NoisyHawkesParams NoisyHawkesParams::univariate(double mu, double alpha, double beta,
                                                double lambda0) {
    NoisyHawkesParams p;
    p.mu = Eigen::VectorXd::Constant(1, mu);
    p.alpha = Eigen::MatrixXd::Constant(1, 1, alpha);
    p.beta = Eigen::VectorXd::Constant(1, beta);
    p.lambda0 = lambda0;
    return p;
}

NoisyHawkesParams NoisyHawkesParams::bivariate(const Eigen::Vector2d& mu,
                                               const Eigen::Matrix2d& alpha,
                                               const Eigen::Vector2d& beta, double lambda0) {
    NoisyHawkesParams p;
    p.mu = mu;
    p.alpha = alpha;
    p.beta = beta;
    p.lambda0 = lambda0;
    return p;
}

void NoisyHawkesParams::validate() const {
    const auto d = mu.size();
    if (d < 1) {
        throw ConfigError("parameters need at least one component");
    }
    if (alpha.rows() != d || alpha.cols() != d || beta.size() != d) {
        throw ConfigError("alpha must be d x d and beta must have d entries (d = " +
                          std::to_string(d) + ")");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!std::isfinite(mu(i)) || mu(i) < 0.0) {
            throw ConfigError("mu entries must be finite and non-negative");
        }
        if (!std::isfinite(beta(i)) || beta(i) <= 0.0) {
            throw ConfigError("beta entries must be finite and positive");
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            if (!std::isfinite(alpha(i, j)) || alpha(i, j) < 0.0) {
                throw ConfigError("alpha entries must be finite and non-negative");
            }
        }
    }
    if (!std::isfinite(lambda0) || lambda0 < 0.0) {
        throw ConfigError("lambda0 must be finite and non-negative");
    }
}

void NoisyHawkesParams::validate_stationary() const {
    validate();
    const double rho = spectral_radius(alpha);
    if (!(rho < 1.0)) {
        throw ConfigError("non-stationary parameters: spectral radius of alpha is " +
                          std::to_string(rho) + " (must be < 1)");
    }
}

bool NoisyHawkesParams::operator==(const NoisyHawkesParams& other) const {
    return mu.size() == other.mu.size() && mu == other.mu && alpha == other.alpha &&
           beta == other.beta && lambda0 == other.lambda0;
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw ConfigError("spectral radius needs a square matrix");
    }
    if (m.size() == 0) {
        return 0.0;
    }
    if (m.rows() == 1) {
        return std::abs(m(0, 0));
    }
    if (m.rows() == 2) {
        // Closed form: eigenvalues of [[a, b], [c, d]] are (a + d)/2 +- sqrt(disc).
        const double half_trace = 0.5 * (m(0, 0) + m(1, 1));
        const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        const double disc = half_trace * half_trace - det;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            return std::max(std::abs(half_trace + s), std::abs(half_trace - s));
        }
        return std::sqrt(det);  // complex pair, |lambda|^2 = det
    }
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd hawkes_mean_intensity(const NoisyHawkesParams& params) {
    const auto d = params.dim();
    const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(d, d) - params.alpha;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
    if (!lu.isInvertible()) {
        throw NumericalError("I - alpha is singular; mean intensity undefined");
    }
    return lu.solve(params.mu);
}

Eigen::VectorXd mean_intensity(const NoisyHawkesParams& params) {
    return hawkes_mean_intensity(params).array() + params.lambda0;
}

} // namespace nhawkes
