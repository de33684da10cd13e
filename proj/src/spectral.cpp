#include "nhawkes/spectral.hpp"

#include "nhawkes/error.hpp"

#include <cmath>
#include <numbers>

namespace nhawkes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_univariate_admissible(const NoisyHawkesParams& p) {
    if (p.dim() != 1) {
        throw ConfigError("univariate density needs d = 1");
    }
    p.validate();
    if (!(p.alpha(0, 0) < 1.0)) {
        throw ConfigError("univariate density needs alpha < 1");
    }
}

} // namespace

cplx exp_kernel_ft(double alpha, double beta, double nu) {
    if (!(beta > 0.0)) {
        throw ConfigError("exponential kernel needs beta > 0");
    }
    if (std::isinf(nu)) {
        return {0.0, 0.0};
    }
    return alpha * beta / cplx(beta, kTwoPi * nu);
}

Eigen::MatrixXcd exp_kernel_ft_matrix(const NoisyHawkesParams& params, double nu) {
    const int d = params.dim();
    Eigen::MatrixXcd h(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            h(i, j) = exp_kernel_ft(params.alpha(i, j), params.beta(i), nu);
        }
    }
    return h;
}

double spectral_density_uni(const NoisyHawkesParams& params, double nu) {
    require_univariate_admissible(params);
    const double mu = params.mu(0);
    const double a = params.alpha(0, 0);
    const double b = params.beta(0);
    const double m = mu / (1.0 - a);
    const double w2 = std::isinf(nu) ? std::numeric_limits<double>::infinity()
                                     : kTwoPi * kTwoPi * nu * nu;
    const double excess = m * b * b * a * (2.0 - a) / (b * b * (1.0 - a) * (1.0 - a) + w2);
    return excess + m + params.lambda0;
}

SpectralMatrix spectral_density_biv(const NoisyHawkesParams& params, double nu) {
    if (params.dim() != 2) {
        throw ConfigError("bivariate density needs d = 2");
    }
    params.validate_stationary();
    const auto& a = params.alpha;
    // Mean intensities of the Hawkes part by Cramer's rule.
    const double det0 = (1.0 - a(0, 0)) * (1.0 - a(1, 1)) - a(0, 1) * a(1, 0);
    const double m1 = (params.mu(0) * (1.0 - a(1, 1)) + params.mu(1) * a(0, 1)) / det0;
    const double m2 = (params.mu(1) * (1.0 - a(0, 0)) + params.mu(0) * a(1, 0)) / det0;

    const Eigen::MatrixXcd h = exp_kernel_ft_matrix(params, nu);
    const cplx one(1.0, 0.0);
    const cplx den = (one - h(0, 0)) * (one - h(1, 1)) - h(0, 1) * h(1, 0);
    const double den2 = std::norm(den);
    if (!(den2 > 0.0)) {
        throw NumericalError("I - h~(nu) is singular");
    }
    // h~(-nu) = conj(h~(nu)) for real kernels.
    const double f11 = (m1 * std::norm(one - h(1, 1)) + m2 * std::norm(h(0, 1))) / den2;
    const double f22 = (m2 * std::norm(one - h(0, 0)) + m1 * std::norm(h(1, 0))) / den2;
    const cplx f12 = (m1 * (one - h(1, 1)) * std::conj(h(1, 0)) +
                      m2 * std::conj(one - h(0, 0)) * h(0, 1)) / den2;

    SpectralMatrix out;
    out.nu = nu;
    out.values.resize(2, 2);
    out.values(0, 0) = f11 + params.lambda0;
    out.values(1, 1) = f22 + params.lambda0;
    out.values(0, 1) = f12;
    out.values(1, 0) = std::conj(f12);
    return out;
}

SpectralMatrix spectral_density_general(const Eigen::VectorXd& mu, const KernelTransform& kernel_ft,
                                        double lambda0, double nu) {
    const auto d = mu.size();
    const Eigen::MatrixXcd h0 = kernel_ft(0.0);
    if (h0.rows() != d || h0.cols() != d) {
        throw ConfigError("kernel transform has the wrong shape");
    }
    if (!(spectral_radius(h0.cwiseAbs()) < 1.0)) {
        throw ConfigError("kernel transform at 0 has spectral radius >= 1");
    }
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);

    Eigen::FullPivLU<Eigen::MatrixXcd> lu0(id - h0);
    const Eigen::VectorXcd m = lu0.solve(mu.cast<cplx>());

    Eigen::FullPivLU<Eigen::MatrixXcd> lu_plus(id - kernel_ft(nu));
    Eigen::FullPivLU<Eigen::MatrixXcd> lu_minus(id - kernel_ft(-nu).transpose());
    if (!lu_plus.isInvertible() || !lu_minus.isInvertible()) {
        throw NumericalError("I - h~(nu) is singular at nu = " + std::to_string(nu));
    }
    SpectralMatrix out;
    out.nu = nu;
    out.values = lu_plus.inverse() * m.real().cast<cplx>().asDiagonal() * lu_minus.inverse() +
                 lambda0 * id;
    return out;
}

SpectralMatrix spectral_density_exp(const NoisyHawkesParams& params, double nu) {
    params.validate_stationary();
    return spectral_density_general(
        params.mu, [&params](double v) { return exp_kernel_ft_matrix(params, v); },
        params.lambda0, nu);
}

void RectParams::validate() const {
    if (!(mu > 0.0) || !(alpha > 0.0 && alpha < 1.0) || !(phi > 0.0) || !(lambda0 >= 0.0)) {
        throw ConfigError("rectangle model needs mu > 0, 0 < alpha < 1, phi > 0, lambda0 >= 0");
    }
}

cplx rect_kernel_ft(double phi, double nu) {
    const double x = kTwoPi * nu * phi;
    if (std::abs(x) < 1e-4) {
        // sum_n (-i x)^n / (n + 1)!
        const double x2 = x * x;
        return {1.0 - x2 / 6.0 + x2 * x2 / 120.0, -x / 2.0 + x * x2 / 24.0};
    }
    const double s = std::sin(0.5 * x);
    return {std::sin(x) / x, -2.0 * s * s / x};
}

double spectral_density_rect(const RectParams& params, double nu) {
    params.validate();
    if (std::isinf(nu)) {
        return params.mu / (1.0 - params.alpha) + params.lambda0;
    }
    const cplx g = 1.0 - params.alpha * rect_kernel_ft(params.phi, nu);
    return params.mu / ((1.0 - params.alpha) * std::norm(g)) + params.lambda0;
}

RectTaylor taylor_from_moments(double mu, double alpha, double lambda0, double m1, double m2,
                               double m3, double m4) {
    const double pi = std::numbers::pi;
    const double r = alpha / (1.0 - alpha);
    const double scale = mu * alpha / std::pow(1.0 - alpha, 4);
    RectTaylor t;
    t.a = mu / std::pow(1.0 - alpha, 3) + lambda0;
    t.c1 = 4.0 * scale * pi * pi * (-m2 - r * m1 * m1);
    t.c2 = 16.0 * scale * std::pow(pi, 4) *
           (m4 / 12.0 + r * (m1 * m3 / 3.0 + 0.75 * m2 * m2) + r * r * 2.0 * m2 * m1 * m1 +
            r * r * r * std::pow(m1, 4));
    return t;
}

RectTaylor rect_taylor(const RectParams& params) {
    params.validate();
    const double p = params.phi;
    return taylor_from_moments(params.mu, params.alpha, params.lambda0, p / 2.0, p * p / 3.0,
                               p * p * p / 4.0, p * p * p * p / 5.0);
}

} // namespace nhawkes
