#include "nhawkes/likelihood.hpp"

#include "nhawkes/error.hpp"
#include "nhawkes/spectral.hpp"

#include <cmath>
#include <numbers>
#include <vector>
#include <algorithm>

namespace nhawkes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxRadius = 1.0 - 1e-12;

void check_inputs(const NoisyHawkesParams& theta, const Periodogram& pg) {
    theta.validate();
    if (theta.dim() != pg.dim) {
        throw ConfigError("parameter dimension does not match the periodogram");
    }
    if (!(spectral_radius(theta.alpha) < kMaxRadius)) {
        throw NumericalError("interaction matrix is not stationary");
    }
}

double loglik_uni(const NoisyHawkesParams& theta, const Periodogram& pg, Eigen::VectorXd* gradient) {
    const double mu = theta.mu(0);
    const double a = theta.alpha(0, 0);
    const double b = theta.beta(0);
    const double l0 = theta.lambda0;
    const double om = 1.0 - a;
    const double c0 = mu / om + l0;
    const double c1 = mu * b * b * a * (2.0 - a) / om;
    const double c2 = b * b * om * om;

    double sum = 0.0;
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    const double w2 = kTwoPi * kTwoPi;
    for (std::size_t k = 0; k < pg.frequency_count; ++k) {
        const double nu = pg.frequency(k);
        const double den = c2 + w2 * nu * nu;
        const double f = c0 + c1 / den;
        if (!(f > 0.0) || !std::isfinite(f)) {
            throw NumericalError("spectral density is not positive");
        }
        const double iv = pg.values[k].real();
        sum += std::log(f) + iv / f;
        if (gradient != nullptr) {
            const double s = 1.0 / f - iv / (f * f);
            s0 += s;
            s1 += s / den;
            s2 -= s * c1 / (den * den);
        }
    }
    const double scale = -pg.weight / pg.horizon;
    if (gradient != nullptr) {
        gradient->setZero(5);
        const double dc0_dmu = 1.0 / om;
        const double dc0_da = mu / (om * om);
        const double dc1_dmu = b * b * a * (2.0 - a) / om;
        const double dc1_da = mu * b * b * (2.0 - 2.0 * a + a * a) / (om * om);
        const double dc1_db = 2.0 * mu * b * a * (2.0 - a) / om;
        const double dc2_da = -2.0 * b * b * om;
        const double dc2_db = 2.0 * b * om * om;
        (*gradient)(0) = scale * (s0 * dc0_dmu + s1 * dc1_dmu);
        (*gradient)(1) = scale * (s0 * dc0_da + s1 * dc1_da + s2 * dc2_da);
        (*gradient)(2) = scale * (s1 * dc1_db + s2 * dc2_db);
        (*gradient)(3) = scale * s0;
    }
    return scale * sum;
}

template <int D>
double loglik_multi(const NoisyHawkesParams& theta, const Periodogram& pg, Eigen::VectorXd* gradient) {
    using CMat = Eigen::Matrix<cplx, D, D>;
    using CVec = Eigen::Matrix<cplx, D, 1>;
    using RMat = Eigen::Matrix<double, D, D>;
    using RVec = Eigen::Matrix<double, D, 1>;
    const int d = theta.dim();

    const RMat alpha = theta.alpha;
    const RVec beta = theta.beta;
    const double l0 = theta.lambda0;
    const RMat b_inv = (RMat::Identity(d, d) - alpha).inverse();
    const RVec m = b_inv * RVec(theta.mu);
    for (int i = 0; i < d; ++i) {
        if (!(m(i) >= 0.0) || !std::isfinite(m(i))) {
            throw NumericalError("mean intensity is not admissible");
        }
    }
    const CMat ident = CMat::Identity(d, d);

    double sum = 0.0;
    RMat g_alpha = RMat::Zero(d, d);
    RVec g_beta = RVec::Zero(d);
    RVec q_sum = RVec::Zero(d);
    double g_l0 = 0.0;

    CVec g(d);
    CVec dg(d);
    CMat h(d, d);
    CMat a_mat(d, d);
    CMat f(d, d);
    CMat w(d, d);
    CMat iv(d, d);
    CMat s(d, d);
    CMat p(d, d);
    const std::size_t dd = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
    for (std::size_t k = 0; k < pg.frequency_count; ++k) {
        const double x = kTwoPi * pg.frequency(k);
        for (int i = 0; i < d; ++i) {
            g(i) = beta(i) / cplx(beta(i), x);
            dg(i) = (1.0 - g(i)) * g(i) / beta(i);
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                h(i, j) = g(i) * alpha(i, j);
            }
        }
        a_mat = (ident - h).inverse();
        CMat am = a_mat * m.template cast<cplx>().asDiagonal();
        CMat g_mat = am * a_mat.adjoint();
        f = g_mat;
        f.diagonal().array() += l0;
        const cplx det = f.determinant();
        if (!(det.real() > 0.0) || !(f(0, 0).real() > 0.0) || !std::isfinite(det.real())) {
            throw NumericalError("spectral matrix is not positive definite");
        }
        w = f.inverse();
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                iv(i, j) = pg.values[k * dd + static_cast<std::size_t>(i * d + j)];
            }
        }
        const CMat wi = w * iv;
        sum += std::log(det.real()) + wi.trace().real();
        if (gradient == nullptr) {
            continue;
        }
        s = w - wi * w;
        p = g_mat * s * a_mat;
        const CMat asa = a_mat.adjoint() * s * a_mat;
        for (int i = 0; i < d; ++i) {
            q_sum(i) += asa(i, i).real();
            cplx acc(0.0, 0.0);
            for (int j = 0; j < d; ++j) {
                g_alpha(i, j) += 2.0 * (g(i) * p(j, i)).real();
                acc += alpha(i, j) * p(j, i);
            }
            g_beta(i) += 2.0 * (dg(i) * acc).real();
        }
        g_l0 += s.trace().real();
    }
    const double scale = -pg.weight / pg.horizon;
    if (gradient != nullptr) {
        const RVec r = b_inv.transpose() * q_sum;
        gradient->setZero(2 * d + d * d + 1);
        Eigen::Index idx = 0;
        for (int i = 0; i < d; ++i) (*gradient)(idx++) = scale * r(i);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                (*gradient)(idx++) = scale * (g_alpha(i, j) + r(i) * m(j));
            }
        }
        for (int i = 0; i < d; ++i) (*gradient)(idx++) = scale * g_beta(i);
        (*gradient)(idx) = scale * g_l0;
    }
    return scale * sum;
}

template <int D>
Eigen::MatrixXd fisher_multi(const NoisyHawkesParams& theta, const Periodogram& pg, std::size_t stride) {
    using CMat = Eigen::Matrix<cplx, D, D>;
    using CVec = Eigen::Matrix<cplx, D, 1>;
    using RMat = Eigen::Matrix<double, D, D>;
    using RVec = Eigen::Matrix<double, D, 1>;
    const int d = theta.dim();
    const int n = 2 * d + d * d + 1;

    const RMat alpha = theta.alpha;
    const RVec beta = theta.beta;
    const RMat b_inv = (RMat::Identity(d, d) - alpha).inverse();
    const RVec m = b_inv * RVec(theta.mu);
    const CMat ident = CMat::Identity(d, d);

    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
    std::vector<CMat> x(static_cast<std::size_t>(n), CMat::Zero(d, d));
    CVec g(d);
    CVec dg(d);
    CMat h(d, d);
    for (std::size_t k = stride / 2; k < pg.frequency_count; k += stride) {
        const double w2pi = kTwoPi * pg.frequency(k);
        for (int i = 0; i < d; ++i) {
            g(i) = beta(i) / cplx(beta(i), w2pi);
            dg(i) = (1.0 - g(i)) * g(i) / beta(i);
            for (int j = 0; j < d; ++j) h(i, j) = g(i) * alpha(i, j);
        }
        const CMat a_mat = (ident - h).inverse();
        const CMat g_mat = a_mat * m.template cast<cplx>().asDiagonal() * a_mat.adjoint();
        CMat f = g_mat;
        f.diagonal().array() += theta.lambda0;
        const CMat w = f.inverse();
        std::size_t idx = 0;
        for (int i = 0; i < d; ++i) {
            const CVec v = b_inv.col(i).template cast<cplx>();
            x[idx++] = w * (a_mat * v.asDiagonal() * a_mat.adjoint());
        }
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                CMat df = g(i) * a_mat.col(i) * g_mat.row(j);
                df += df.adjoint().eval();
                const CVec v = (b_inv.col(i) * m(j)).template cast<cplx>();
                df += a_mat * v.asDiagonal() * a_mat.adjoint();
                x[idx++] = w * df;
            }
        }
        for (int i = 0; i < d; ++i) {
            Eigen::Matrix<cplx, 1, D> row = Eigen::Matrix<cplx, 1, D>::Zero(1, d);
            for (int j = 0; j < d; ++j) row += alpha(i, j) * g_mat.row(j);
            CMat df = dg(i) * a_mat.col(i) * row;
            df += df.adjoint().eval();
            x[idx++] = w * df;
        }
        x[idx] = w;
        for (int a = 0; a < n; ++a) {
            for (int b = a; b < n; ++b) {
                const double v = (x[static_cast<std::size_t>(a)].cwiseProduct(
                                      x[static_cast<std::size_t>(b)].transpose())).sum().real();
                info(a, b) += v;
            }
        }
    }
    info = info.selfadjointView<Eigen::Upper>();
    return info * (pg.weight * static_cast<double>(stride) / pg.horizon);
}

Eigen::MatrixXd fisher_uni(const NoisyHawkesParams& theta, const Periodogram& pg, std::size_t stride) {
    const double mu = theta.mu(0);
    const double a = theta.alpha(0, 0);
    const double b = theta.beta(0);
    const double om = 1.0 - a;
    const double c0 = mu / om + theta.lambda0;
    const double c1 = mu * b * b * a * (2.0 - a) / om;
    const double c2 = b * b * om * om;
    Eigen::Matrix<double, 4, 3> jac;
    jac << 1.0 / om, b * b * a * (2.0 - a) / om, 0.0,
        mu / (om * om), mu * b * b * (2.0 - 2.0 * a + a * a) / (om * om), -2.0 * b * b * om,
        0.0, 2.0 * mu * b * a * (2.0 - a) / om, 2.0 * b * om * om,
        1.0, 0.0, 0.0;
    Eigen::Matrix3d inner = Eigen::Matrix3d::Zero();
    for (std::size_t k = stride / 2; k < pg.frequency_count; k += stride) {
        const double nu = pg.frequency(k);
        const double den = c2 + kTwoPi * kTwoPi * nu * nu;
        const double f = c0 + c1 / den;
        const Eigen::Vector3d df(1.0, 1.0 / den, -c1 / (den * den));
        inner += df * df.transpose() / (f * f);
    }
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(5, 5);
    info.topLeftCorner(4, 4) = jac * inner * jac.transpose();
    return info * (pg.weight * static_cast<double>(stride) / pg.horizon);
}

} // namespace

double spectral_loglik(const NoisyHawkesParams& theta, const Periodogram& pg, Eigen::VectorXd* gradient) {
    check_inputs(theta, pg);
    if (pg.dim == 1) {
        return loglik_uni(theta, pg, gradient);
    }
    if (pg.dim == 2) {
        return loglik_multi<2>(theta, pg, gradient);
    }
    return loglik_multi<Eigen::Dynamic>(theta, pg, gradient);
}

double spectral_loglik(const ModelSpec& spec, const NoisyHawkesParams& theta, const Periodogram& pg) {
    if (!spec.respects_structure(theta)) {
        throw ConfigError("parameters do not honour the model's fixed and zero entries");
    }
    return spectral_loglik(theta, pg);
}

double spectral_loglik_matrix(const NoisyHawkesParams& theta, const Periodogram& pg) {
    check_inputs(theta, pg);
    double sum = 0.0;
    for (std::size_t k = 0; k < pg.frequency_count; ++k) {
        const SpectralMatrix f = spectral_density_exp(theta, pg.frequency(k));
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(f.values);
        for (Eigen::Index i = 0; i < ces.eigenvalues().size(); ++i) {
            if (!(ces.eigenvalues()(i).real() > 0.0)) {
                throw NumericalError("spectral matrix is not positive definite");
            }
        }
        const Eigen::MatrixXcd iv = pg.matrix(k);
        sum += std::log(f.values.determinant().real()) +
               f.values.partialPivLu().solve(iv).trace().real();
    }
    return -pg.weight / pg.horizon * sum;
}

double spectral_loglik_uni(const NoisyHawkesParams& theta, const Periodogram& pg) {
    check_inputs(theta, pg);
    if (pg.dim != 1) {
        throw ConfigError("univariate log-likelihood needs a univariate periodogram");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < pg.frequency_count; ++k) {
        const double f = spectral_density_uni(theta, pg.frequency(k));
        sum += std::log(f) + pg.values[k].real() / f;
    }
    return -pg.weight / pg.horizon * sum;
}

Eigen::VectorXd spectral_loglik_fd_gradient(const NoisyHawkesParams& theta, const Periodogram& pg,
                                            double rel_step) {
    const int d = theta.dim();
    const Eigen::VectorXd x = params_to_vector(theta);
    Eigen::VectorXd grad(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = rel_step * std::max(std::abs(x(k)), 1e-3);
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp(k) += h;
        xm(k) -= h;
        grad(k) = (spectral_loglik(params_from_vector(d, xp), pg) -
                   spectral_loglik(params_from_vector(d, xm), pg)) / (2.0 * h);
    }
    return grad;
}


Eigen::MatrixXd spectral_fisher(const NoisyHawkesParams& theta, const Periodogram& pg, std::size_t stride) {
    check_inputs(theta, pg);
    if (stride == 0) {
        stride = std::max<std::size_t>(1, pg.frequency_count / 2048);
    }
    if (pg.dim == 1) {
        return fisher_uni(theta, pg, stride);
    }
    if (pg.dim == 2) {
        return fisher_multi<2>(theta, pg, stride);
    }
    return fisher_multi<Eigen::Dynamic>(theta, pg, stride);
}

} // namespace nhawkes
