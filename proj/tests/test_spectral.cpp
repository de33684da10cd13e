#include "nhawkes/error.hpp"
#include "nhawkes/nufft.hpp"
#include "nhawkes/periodogram.hpp"
#include "nhawkes/rng.hpp"
#include "nhawkes/simulate.hpp"
#include "nhawkes/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

using namespace nhawkes;

namespace {

constexpr double kPi = std::numbers::pi;

NoisyHawkesParams scenario(int s) {
    Eigen::Matrix2d a;
    if (s == 1) {
        a << 0.5, 0.0, 0.4, 0.0;
    } else {
        a << 0.5, 0.0, 0.4, 0.4;
    }
    return NoisyHawkesParams::bivariate({1.0, 1.0}, a, {1.0, 1.3}, 0.5);
}

NoisyHawkesParams random_biv(Rng& rng) {
    Eigen::Matrix2d a;
    do {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) a(i, j) = rng.uniform(0.0, 0.8);
        }
    } while (spectral_radius(a) >= 0.95);
    return NoisyHawkesParams::bivariate({rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)}, a,
                                        {rng.uniform(0.2, 5.0), rng.uniform(0.2, 5.0)}, rng.uniform(0.0, 3.0));
}

double max_rel(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

} // namespace

TEST(ExpKernelFt, ValueAtZeroIsMass) {
    const cplx v = exp_kernel_ft(0.5, 1.0, 0.0);
    EXPECT_DOUBLE_EQ(v.real(), 0.5);
    EXPECT_DOUBLE_EQ(v.imag(), 0.0);
}

TEST(ExpKernelFt, DecaysAtHighFrequency) {
    EXPECT_LT(std::abs(exp_kernel_ft(0.5, 1.0, 1e9)), 1e-9);
}

TEST(ExpKernelFt, HandEvaluation) {
    const cplx v = exp_kernel_ft(1.0, 2.0, 1.0 / kPi);
    // 2 / (2 + 2i)
    EXPECT_NEAR(v.real(), 0.5, 1e-15);
    EXPECT_NEAR(v.imag(), -0.5, 1e-15);
}

TEST(SpectralDensityUni, HighFrequencyLimit) {
    const auto p = NoisyHawkesParams::univariate(1.0, 0.5, 1.0, 0.6);
    EXPECT_NEAR(spectral_density_uni(p, std::numeric_limits<double>::infinity()), 2.6, 1e-14);
    EXPECT_NEAR(spectral_density_uni(p, 1e7), 2.6, 1e-10);
}

TEST(SpectralDensityUni, ValueAtZero) {
    const auto p = NoisyHawkesParams::univariate(1.0, 0.5, 1.0, 0.6);
    EXPECT_NEAR(spectral_density_uni(p, 0.0), 8.6, 1e-13);
}

TEST(SpectralDensityUni, PoissonLimit) {
    const auto p = NoisyHawkesParams::univariate(1.3, 0.0, 2.0, 0.4);
    for (double nu : {0.0, 0.01, 0.3, 5.0}) EXPECT_NEAR(spectral_density_uni(p, nu), 1.7, 1e-14);
}

TEST(SpectralDensityUni, RejectsInadmissible) {
    EXPECT_THROW((void)spectral_density_uni(NoisyHawkesParams::univariate(1.0, 1.0, 1.0, 0.0), 0.1), ConfigError);
    EXPECT_THROW((void)spectral_density_uni(NoisyHawkesParams::univariate(1.0, 0.5, 0.0, 0.0), 0.1), ConfigError);
}

TEST(SpectralDensityUni, MatchesGeneralFormula) {
    Rng rng(1);
    for (int k = 0; k < 100; ++k) {
        const auto p = NoisyHawkesParams::univariate(rng.uniform(0.1, 3.0), rng.uniform(0.01, 0.95),
                                                     rng.uniform(0.1, 5.0), rng.uniform(0.0, 3.0));
        const double nu = std::exp(rng.uniform(std::log(1e-3), std::log(50.0)));
        const double ref = spectral_density_exp(p, nu).values(0, 0).real();
        EXPECT_NEAR(spectral_density_uni(p, nu), ref, 1e-12 * ref);
    }
}

TEST(SpectralDensityBiv, ZeroInteractionIsDiagonalConstant) {
    const auto p = NoisyHawkesParams::bivariate({1.0, 2.0}, Eigen::Matrix2d::Zero(), {1.0, 1.0}, 0.5);
    for (double nu : {0.0, 0.2, 3.0}) {
        const auto f = spectral_density_biv(p, nu).values;
        EXPECT_NEAR(f(0, 0).real(), 1.5, 1e-14);
        EXPECT_NEAR(f(1, 1).real(), 2.5, 1e-14);
        EXPECT_EQ(std::abs(f(0, 1)), 0.0);
    }
}

TEST(SpectralDensityBiv, ScenarioOneHighFrequencyLimit) {
    const auto f = spectral_density_biv(scenario(1), 1e7).values;
    EXPECT_NEAR(f(1, 1).real(), 2.3, 1e-9);
}

TEST(SpectralDensityBiv, HermitianAndMatchesGeneral) {
    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
        const double nu = rng.uniform(0.0, 5.0);
        const auto f = spectral_density_biv(scenario(2), nu).values;
        EXPECT_NEAR(std::abs(f(1, 0) - std::conj(f(0, 1))), 0.0, 1e-14);
        EXPECT_LT(max_rel(f, spectral_density_exp(scenario(2), nu).values), 1e-10);
    }
}

TEST(SpectralDensityBiv, MatchesGeneralAtRandomParameters) {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const auto p = random_biv(rng);
        const double nu = std::exp(rng.uniform(std::log(1e-3), std::log(50.0)));
        EXPECT_LT(max_rel(spectral_density_biv(p, nu).values, spectral_density_exp(p, nu).values), 1e-10);
    }
}

TEST(SpectralDensityBiv, SituationOneReformulation) {
    // f11 is the univariate density of the first component and
    // f22 = |h21|^2 f11^H + m2 + lambda0 with m2 = mu2 + alpha21 m1.
    const auto p = scenario(1);
    const auto first = NoisyHawkesParams::univariate(1.0, 0.5, 1.0, 0.0);
    Rng rng(4);
    for (int k = 0; k < 20; ++k) {
        const double nu = rng.uniform(0.0, 3.0);
        const auto f = spectral_density_biv(p, nu).values;
        const double f11h = spectral_density_uni(first, nu);
        EXPECT_NEAR(f(0, 0).real(), f11h + 0.5, 1e-12);
        const double f22 = std::norm(exp_kernel_ft(0.4, 1.3, nu)) * f11h + 1.8 + 0.5;
        EXPECT_NEAR(f(1, 1).real(), f22, 1e-12 * f22);
    }
}

TEST(SpectralDensityGeneral, NoiseShiftIsExact) {
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        auto p = random_biv(rng);
        const double nu = rng.uniform(0.0, 4.0);
        const auto with = spectral_density_exp(p, nu).values;
        const double l0 = p.lambda0;
        p.lambda0 = 0.0;
        const auto without = spectral_density_exp(p, nu).values;
        const Eigen::MatrixXcd diff = with - without;
        EXPECT_EQ(diff(0, 1), cplx(0.0, 0.0));
        EXPECT_EQ(diff(1, 0), cplx(0.0, 0.0));
        EXPECT_NEAR(diff(0, 0).real(), l0, 1e-15 * (1.0 + std::abs(with(0, 0))) * 4);
        EXPECT_NEAR(diff(1, 1).real(), l0, 1e-15 * (1.0 + std::abs(with(1, 1))) * 4);
    }
}

TEST(SpectralDensityGeneral, DiagonalIsEven) {
    Rng rng(6);
    for (int k = 0; k < 20; ++k) {
        const auto p = random_biv(rng);
        const double nu = rng.uniform(0.01, 4.0);
        const auto a = spectral_density_exp(p, nu).values;
        const auto b = spectral_density_exp(p, -nu).values;
        for (int i = 0; i < 2; ++i) EXPECT_NEAR(a(i, i).real(), b(i, i).real(), 1e-12 * a(i, i).real());
    }
}

TEST(SpectralDensityGeneral, RejectsUnstableKernel) {
    const KernelTransform k = [](double) { return Eigen::MatrixXcd::Constant(1, 1, cplx(1.5, 0.0)); };
    EXPECT_THROW((void)spectral_density_general(Eigen::VectorXd::Ones(1), k, 0.0, 0.1), ConfigError);
}

TEST(SpectralDensityRect, LimitsAndSymmetry) {
    const RectParams p{1.0, 0.5, 1.0, 0.4};
    EXPECT_NEAR(spectral_density_rect(p, 0.0), 8.4, 1e-13);
    EXPECT_NEAR(spectral_density_rect(p, std::numeric_limits<double>::infinity()), 2.4, 1e-14);
    Rng rng(7);
    for (int k = 0; k < 20; ++k) {
        const double nu = rng.uniform(0.0, 10.0);
        EXPECT_NEAR(spectral_density_rect(p, nu), spectral_density_rect(p, -nu), 1e-13);
    }
}

TEST(SpectralDensityRect, SeriesBranchIsContinuous) {
    const double phi = 2.0;
    const double edge = 1e-4 / (2.0 * kPi * phi);
    const cplx below = rect_kernel_ft(phi, edge * (1.0 - 1e-9));
    const cplx above = rect_kernel_ft(phi, edge * (1.0 + 1e-9));
    EXPECT_NEAR(std::abs(below - above), 0.0, 1e-12);
    EXPECT_EQ(rect_kernel_ft(phi, 0.0), cplx(1.0, 0.0));
}

TEST(SpectralDensityRect, RejectsInadmissible) {
    EXPECT_THROW((void)spectral_density_rect({1.0, 1.0, 1.0, 0.0}, 0.1), ConfigError);
    EXPECT_THROW((void)spectral_density_rect({1.0, 0.5, 0.0, 0.0}, 0.1), ConfigError);
}

TEST(RectTaylor, ConstantTermAndSign) {
    const RectTaylor t = rect_taylor({1.0, 0.5, 1.0, 0.0});
    EXPECT_NEAR(t.a, 8.0, 1e-13);
    Rng rng(8);
    for (int k = 0; k < 50; ++k) {
        const RectParams p{rng.uniform(0.1, 3.0), rng.uniform(0.01, 0.95), rng.uniform(0.1, 4.0), rng.uniform(0.0, 2.0)};
        EXPECT_LT(rect_taylor(p).c1, 0.0);
    }
}

TEST(RectTaylor, MatchesFiniteDifferences) {
    const RectParams p{1.2, 0.4, 0.7, 0.3};
    const RectTaylor t = rect_taylor(p);
    const double h = 1e-3;
    auto f = [&](double nu) { return spectral_density_rect(p, nu); };
    // even function: f(h) - f(0) = c1 h^2 + c2 h^4 + O(h^6)
    const double d2 = (f(h) - 2 * f(0) + f(-h)) / (h * h);
    EXPECT_NEAR(d2 / 2.0, t.c1, 1e-4 * std::abs(t.c1));
}

TEST(Periodogram, SingleEventIsFlat) {
    const EventSeries ev(0.0, 50.0, {{12.3}});
    for (auto method : {PeriodogramMethod::Direct, PeriodogramMethod::Fast}) {
        const Periodogram pg = periodogram(ev, 40, method);
        const double tol = method == PeriodogramMethod::Direct ? 1e-14 : 1e-9 / 50.0;
        for (std::size_t k = 0; k < 40; ++k) EXPECT_NEAR(pg.at(k, 0, 0).real(), 1.0 / 50.0, tol);
    }
}

TEST(Periodogram, EmptySeriesIsZero) {
    const Periodogram pg = periodogram(EventSeries(2, 0.0, 10.0), 16);
    for (const cplx& v : pg.values) EXPECT_EQ(v, cplx(0.0, 0.0));
}

TEST(Periodogram, GridStartsAtOneOverT) {
    const Periodogram pg = periodogram(EventSeries(0.0, 20.0, {{1.0}}), 5);
    EXPECT_DOUBLE_EQ(pg.frequency(0), 1.0 / 20.0);
    EXPECT_DOUBLE_EQ(pg.frequency(4), 5.0 / 20.0);
    EXPECT_EQ(pg.frequency_count, 5u);
}

TEST(Periodogram, MatchesDefinitionOnSmallSeries) {
    const EventSeries ev(0.0, 10.0, {{0.5, 2.25, 7.0}, {1.0, 9.5}});
    const Periodogram pg = periodogram(ev, 6, PeriodogramMethod::Direct);
    for (std::size_t k = 0; k < 6; ++k) {
        const double nu = pg.frequency(k);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                cplx s{0.0, 0.0};
                for (double a : ev.times(i)) {
                    for (double b : ev.times(j)) s += std::polar(1.0, -2.0 * kPi * nu * (a - b));
                }
                EXPECT_NEAR(std::abs(pg.at(k, i, j) - s / 10.0), 0.0, 1e-13);
            }
        }
    }
}

TEST(Periodogram, HermitianPsdWithRealDiagonal) {
    const EventSeries ev = simulate_noisy(scenario(2), {300.0, 50.0, 3});
    const Periodogram pg = periodogram(ev, 500);
    for (std::size_t k = 0; k < pg.frequency_count; ++k) {
        const Eigen::MatrixXcd m = pg.matrix(k);
        EXPECT_EQ(m(0, 0).imag(), 0.0);
        EXPECT_EQ(m(1, 1).imag(), 0.0);
        EXPECT_GE(m(0, 0).real(), 0.0);
        EXPECT_EQ(m(1, 0), std::conj(m(0, 1)));
        EXPECT_GE(m(0, 0).real() * m(1, 1).real() - std::norm(m(0, 1)), -1e-9 * m(0, 0).real() * m(1, 1).real());
    }
}

TEST(Periodogram, FastMatchesDirect) {
    const auto p = NoisyHawkesParams::univariate(1.0, 0.5, 1.0, 1.6);
    const EventSeries ev = simulate_noisy(p, {8000.0, 100.0, 4});
    const std::size_t m = ev.total_count();
    const auto z_fast = fourier_sums(ev.times(0), 0.0, 8000.0, m, PeriodogramMethod::Fast);
    const auto z_direct = fourier_sums(ev.times(0), 0.0, 8000.0, m, PeriodogramMethod::Direct);
    double worst = 0.0;
    const double scale = std::sqrt(static_cast<double>(ev.count(0)));
    for (std::size_t k = 0; k < m; ++k) worst = std::max(worst, std::abs(z_fast[k] - z_direct[k]) / scale);
    EXPECT_LT(worst, 1e-8);
}

TEST(Periodogram, AveragingWeightsAndValues) {
    const EventSeries a(0.0, 10.0, {{1.0}});
    const EventSeries b(0.0, 10.0, {{2.0, 3.0}});
    const std::vector<Periodogram> pgs{periodogram(a, 4), periodogram(b, 4)};
    const Periodogram avg = average_periodograms(pgs);
    EXPECT_EQ(avg.weight, 2.0);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(std::abs(avg.at(k, 0, 0) - 0.5 * (pgs[0].at(k, 0, 0) + pgs[1].at(k, 0, 0))), 0.0, 1e-15);
    }
    const std::vector<Periodogram> mismatch{periodogram(a, 4), periodogram(b, 5)};
    EXPECT_THROW((void)average_periodograms(mismatch), ConfigError);
}

TEST(Periodogram, CsvHeader) {
    std::stringstream ss;
    write_periodogram_csv(ss, periodogram(EventSeries(0.0, 10.0, {{1.0}, {2.0}}), 2));
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, "k,nu,re_00,im_00,re_01,im_01,re_10,im_10,re_11,im_11");
}

TEST(Nufft, MatchesDirectSum) {
    Rng rng(9);
    std::vector<double> x(300);
    std::vector<cplx> w(300);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(0.0, 2.0 * kPi);
        w[i] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    }
    const auto out = nufft_type1(x, w, 1, 200);
    for (std::size_t k = 0; k < 200; k += 17) {
        cplx s{0.0, 0.0};
        const double mode = static_cast<double>(k + 1);
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::polar(1.0, -mode * x[i]);
        EXPECT_NEAR(std::abs(out[k] - s), 0.0, 1e-8 * x.size());
    }
}
