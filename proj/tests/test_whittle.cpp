#include "nhawkes/error.hpp"
#include "nhawkes/fit.hpp"
#include "nhawkes/likelihood.hpp"
#include "nhawkes/model.hpp"
#include "nhawkes/optimizer.hpp"
#include "nhawkes/rng.hpp"
#include "nhawkes/simulate.hpp"
#include "nhawkes/support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace nhawkes;

namespace {

const NoisyHawkesParams kUniTruth = NoisyHawkesParams::univariate(1.0, 0.5, 1.0, 1.6);

NoisyHawkesParams scenario1() {
    Eigen::Matrix2d a;
    a << 0.5, 0.0, 0.4, 0.0;
    return NoisyHawkesParams::bivariate({1.0, 1.0}, a, {1.0, 1.3}, 0.5);
}

NoisyHawkesParams random_uni(Rng& rng) {
    return NoisyHawkesParams::univariate(rng.uniform(0.3, 2.0), rng.uniform(0.1, 0.8), rng.uniform(0.3, 3.0),
                                         rng.uniform(0.1, 2.0));
}

NoisyHawkesParams random_biv(Rng& rng) {
    Eigen::Matrix2d a;
    do {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) a(i, j) = rng.uniform(0.05, 0.6);
        }
    } while (spectral_radius(a) >= 0.9);
    return NoisyHawkesParams::bivariate({rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0)}, a,
                                        {rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0)}, rng.uniform(0.1, 2.0));
}

FitOptions quick_options(std::uint64_t seed) {
    FitOptions o;
    o.seed = seed;
    return o;
}

} // namespace

TEST(FrequencyCount, Policies) {
    EXPECT_EQ(frequency_count(MPolicy::n(), 100), 100u);
    EXPECT_EQ(frequency_count(MPolicy::n_log_n(), 100), 461u);
    EXPECT_EQ(frequency_count(MPolicy::explicit_count(2048), 7), 2048u);
    EXPECT_THROW((void)frequency_count(MPolicy::n(), 0), ConfigError);
    EXPECT_THROW((void)frequency_count(MPolicy::n_log_n(), EventSeries(1, 0.0, 1.0)), ConfigError);
}

TEST(FrequencyCount, PolicyParsing) {
    EXPECT_EQ(MPolicy::parse("n").kind, MPolicy::Kind::N);
    EXPECT_EQ(MPolicy::parse("nlogn").kind, MPolicy::Kind::NLogN);
    EXPECT_EQ(MPolicy::parse("300").value, 300u);
    EXPECT_EQ(MPolicy::parse("300").to_string(), "300");
    EXPECT_THROW((void)MPolicy::parse("0"), ConfigError);
    EXPECT_THROW((void)MPolicy::parse("many"), ConfigError);
    EXPECT_THROW((void)MPolicy::parse("12x"), ConfigError);
}

TEST(ModelSpec, UnivariateSubmodelsFixOneSlot) {
    for (UniModel m : {UniModel::QMu, UniModel::QAlpha, UniModel::QBeta, UniModel::QLambda0}) {
        const ModelSpec spec = ModelSpec::univariate(m, 0.5);
        EXPECT_EQ(spec.free_count(), 3u) << to_string(m);
    }
    const ModelSpec qb = ModelSpec::univariate(UniModel::QBeta, 1.0);
    EXPECT_EQ(qb.slot(qb.beta_slot(0)).kind, SlotKind::Fixed);
    EXPECT_EQ(qb.slot(qb.beta_slot(0)).value, 1.0);
    EXPECT_EQ(ModelSpec::univariate(UniModel::Full, 0.0).free_count(), 4u);
}

TEST(ModelSpec, DefaultBounds) {
    const ModelSpec uni = ModelSpec::full(1);
    EXPECT_EQ(uni.slot(uni.alpha_slot(0, 0)).lower, 1e-6);
    const ModelSpec biv = ModelSpec::full(2);
    EXPECT_EQ(biv.slot(biv.alpha_slot(0, 1)).lower, 0.0);
    EXPECT_EQ(biv.slot(biv.alpha_slot(0, 1)).upper, 1.0 - 1e-6);
    EXPECT_EQ(biv.slot(biv.mu_slot(0)).upper, 20.0);
    EXPECT_EQ(biv.slot(biv.beta_slot(1)).lower, 1e-4);
    EXPECT_EQ(biv.slot(biv.beta_slot(1)).upper, 50.0);
    EXPECT_EQ(biv.slot(biv.lambda0_slot()).lower, 1e-6);
}

TEST(ModelSpec, SupportPinsBetaOfEmptyRows) {
    BoolMatrix mask = BoolMatrix::Constant(2, 2, false);
    mask(1, 0) = true;
    const ModelSpec spec = ModelSpec::with_support(mask);
    EXPECT_EQ(spec.slot(spec.beta_slot(0)).kind, SlotKind::Fixed);
    EXPECT_EQ(spec.slot(spec.beta_slot(0)).value, 1.0);
    EXPECT_EQ(spec.slot(spec.beta_slot(1)).kind, SlotKind::Free);
    EXPECT_EQ(spec.slot(spec.alpha_slot(0, 1)).kind, SlotKind::Zero);
    EXPECT_EQ(spec.free_count(), 5u);
    EXPECT_EQ(spec.support(), mask);
}

TEST(ModelSpec, RejectsInvalidStructure) {
    ModelSpec spec(1);
    EXPECT_THROW(spec.set_zero(spec.beta_slot(0)), ConfigError);
    EXPECT_THROW(spec.set_free(spec.mu_slot(0), 2.0, 1.0), ConfigError);
    EXPECT_THROW((void)ModelSpec::univariate(UniModel::QAlpha, 1.5), ConfigError);
    ModelSpec none(1);
    for (std::size_t k = 0; k < none.slot_count(); ++k) none.set_fixed(k, 0.5);
    EXPECT_THROW(none.validate(), ConfigError);
}

TEST(ModelSpec, AssembleAndFreeValuesRoundTrip) {
    const ModelSpec spec = ModelSpec::with_support((Eigen::Matrix<bool, 2, 2>() << true, false, true, false).finished());
    const NoisyHawkesParams p = scenario1();
    ASSERT_TRUE(spec.respects_structure(p));
    EXPECT_EQ(spec.assemble(spec.free_values(p)), p);
    NoisyHawkesParams q = p;
    q.alpha(0, 1) = 0.1;
    EXPECT_FALSE(spec.respects_structure(q));
}

TEST(ModelSpec, JsonRoundTrip) {
    const nlohmann::json j = nlohmann::json::parse(R"({
        "d": 2,
        "mu": ["free", "free"],
        "alpha": [["free", "zero"], ["free", "zero"]],
        "beta": ["free", 1.3],
        "lambda0": "free",
        "bounds": {"mu": [0.01, 10]}
    })");
    const ModelSpec spec = model_from_json(j);
    EXPECT_EQ(spec.slot(spec.alpha_slot(1, 1)).kind, SlotKind::Zero);
    EXPECT_EQ(spec.slot(spec.beta_slot(1)).kind, SlotKind::Fixed);
    EXPECT_EQ(spec.slot(spec.mu_slot(0)).upper, 10.0);
    EXPECT_EQ(model_from_json(model_to_json(spec)), spec);
    EXPECT_THROW((void)model_from_json(nlohmann::json::parse(R"({"d": 1, "mu": ["maybe"]})")), ConfigError);
}

TEST(SpectralLoglik, ConstantSpectrumMaximisedAtMeanPeriodogram) {
    const EventSeries ev = simulate_poisson(2.0, 1, {500.0, 0.0, 3});
    const Periodogram pg = periodogram(ev, 400);
    double mean_i = 0.0;
    for (std::size_t k = 0; k < pg.frequency_count; ++k) mean_i += pg.at(k, 0, 0).real();
    mean_i /= static_cast<double>(pg.frequency_count);
    auto ell = [&](double c) {
        return spectral_loglik(NoisyHawkesParams::univariate(c, 0.0, 1.0, 0.0), pg);
    };
    double by_hand = 0.0;
    for (std::size_t k = 0; k < pg.frequency_count; ++k) by_hand += std::log(mean_i) + pg.at(k, 0, 0).real() / mean_i;
    EXPECT_NEAR(ell(mean_i), -by_hand / 500.0, 1e-12);
    EXPECT_GT(ell(mean_i), ell(mean_i * 1.01));
    EXPECT_GT(ell(mean_i), ell(mean_i * 0.99));
}

TEST(SpectralLoglik, UnivariatePathsAgree) {
    const EventSeries ev = simulate_noisy(kUniTruth, {1000.0, 100.0, 4});
    const Periodogram pg = periodogram(ev, 800);
    Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        const auto theta = random_uni(rng);
        const double fast = spectral_loglik(theta, pg);
        EXPECT_NEAR(fast, spectral_loglik_matrix(theta, pg), 1e-12 * std::max(1.0, std::abs(fast)));
        EXPECT_NEAR(fast, spectral_loglik_uni(theta, pg), 1e-12 * std::max(1.0, std::abs(fast)));
    }
}

TEST(SpectralLoglik, BivariateMatchesMatrixReference) {
    const EventSeries ev = simulate_noisy(scenario1(), {500.0, 100.0, 6});
    const Periodogram pg = periodogram(ev, 600);
    Rng rng(7);
    for (int k = 0; k < 10; ++k) {
        const auto theta = random_biv(rng);
        const double fast = spectral_loglik(theta, pg);
        EXPECT_NEAR(fast, spectral_loglik_matrix(theta, pg), 1e-10 * std::abs(fast));
    }
}

TEST(SpectralLoglik, AnalyticGradientMatchesFiniteDifferences) {
    const EventSeries ev1 = simulate_noisy(kUniTruth, {400.0, 100.0, 8});
    const EventSeries ev2 = simulate_noisy(scenario1(), {400.0, 100.0, 9});
    const Periodogram pg1 = periodogram(ev1, 300);
    const Periodogram pg2 = periodogram(ev2, 300);
    Rng rng(10);
    for (int k = 0; k < 20; ++k) {
        const bool biv = k % 2 == 1;
        const auto theta = biv ? random_biv(rng) : random_uni(rng);
        const Periodogram& pg = biv ? pg2 : pg1;
        Eigen::VectorXd g;
        (void)spectral_loglik(theta, pg, &g);
        const Eigen::VectorXd fd = spectral_loglik_fd_gradient(theta, pg);
        EXPECT_LT((g - fd).norm(), 1e-5 * std::max(1.0, fd.norm())) << "case " << k;
    }
}

TEST(SpectralLoglik, FisherIsSymmetricPositiveSemidefinite) {
    const EventSeries ev = simulate_noisy(scenario1(), {400.0, 100.0, 11});
    const Periodogram pg = periodogram(ev, 500);
    const Eigen::MatrixXd f = spectral_fisher(scenario1(), pg, 1);
    EXPECT_LT((f - f.transpose()).norm(), 1e-12 * f.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * f.norm());
}

TEST(SpectralLoglik, RejectsInadmissibleTheta) {
    const Periodogram pg = periodogram(EventSeries(0.0, 10.0, {{1.0, 2.0}}), 5);
    EXPECT_THROW((void)spectral_loglik(NoisyHawkesParams::univariate(1.0, 1.0, 1.0, 0.1), pg), NumericalError);
    const ModelSpec qb = ModelSpec::univariate(UniModel::QBeta, 1.0);
    EXPECT_THROW((void)spectral_loglik(qb, NoisyHawkesParams::univariate(1.0, 0.5, 2.0, 0.1), pg), ConfigError);
}

TEST(SpectralLoglik, TruthBeatsPerturbationOnAverage) {
    int wins = 0;
    const int trials = 50;
    Rng rng(12);
    for (int t = 0; t < trials; ++t) {
        const EventSeries ev = simulate_noisy(kUniTruth, {8000.0, 100.0, 1000 + static_cast<std::uint64_t>(t)});
        const Periodogram pg = periodogram(ev, ev.total_count());
        NoisyHawkesParams other = kUniTruth;
        other.mu(0) *= rng.uniform(0.8, 1.2);
        other.alpha(0, 0) *= rng.uniform(0.8, 1.2);
        other.lambda0 *= rng.uniform(0.8, 1.2);
        wins += spectral_loglik(kUniTruth, pg) >= spectral_loglik(other, pg) ? 1 : 0;
    }
    EXPECT_GE(wins, 40);
}

TEST(Optimizer, QuadraticInteriorMinimum) {
    const Eigen::Vector2d target(0.3, -0.7);
    const BoxObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = 2.0 * (x - target);
        g(1) *= 10.0;
        return (x - target).squaredNorm() + 9.0 * std::pow(x(1) - target(1), 2);
    };
    const auto r = minimize_box(f, Eigen::Vector2d(2.0, 2.0), Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5));
    EXPECT_TRUE(r.converged());
    EXPECT_NEAR(r.x(0), 0.3, 1e-6);
    EXPECT_NEAR(r.x(1), -0.7, 1e-6);
}

TEST(Optimizer, ActiveBound) {
    const BoxObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = 2.0 * (x - Eigen::Vector2d(-3.0, 1.0));
        return (x - Eigen::Vector2d(-3.0, 1.0)).squaredNorm();
    };
    const auto r = minimize_box(f, Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2));
    EXPECT_TRUE(r.converged());
    EXPECT_NEAR(r.x(0), 0.0, 1e-12);
    EXPECT_NEAR(r.x(1), 1.0, 1e-6);
    Eigen::VectorXd g;
    (void)f(r.x, g);
    EXPECT_LT(projected_gradient_norm(r.x, g, Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2)), 1e-6);
}

TEST(Optimizer, Rosenbrock) {
    const BoxObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = -2.0 * a - 400.0 * x(0) * b;
        g(1) = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    const auto r = minimize_box(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2));
    EXPECT_TRUE(r.converged());
    EXPECT_NEAR(r.x(0), 1.0, 1e-4);
    EXPECT_NEAR(r.x(1), 1.0, 1e-4);
}

TEST(Optimizer, NonFiniteStartReported) {
    const BoxObjective f = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
        g = Eigen::VectorXd::Zero(1);
        return std::numeric_limits<double>::infinity();
    };
    const auto r = minimize_box(f, Eigen::VectorXd::Zero(1), -Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    EXPECT_EQ(r.status, OptimizerStatus::NonFiniteStart);
    EXPECT_FALSE(r.converged());
}

TEST(Fit, QBetaRecoversTruthAtLongHorizon) {
    const ModelSpec spec = ModelSpec::univariate(UniModel::QBeta, 1.0);
    const EventSeries ev = simulate_noisy(kUniTruth, {8000.0, 100.0, 21});
    const FitResult r = fit(spec, ev, quick_options(1));
    const Eigen::VectorXd est = spec.free_values(r.theta_hat);
    const Eigen::VectorXd truth = spec.free_values(kUniTruth);
    EXPECT_LE((est - truth).norm() / truth.norm(), 0.3);
    EXPECT_EQ(r.m_used, ev.total_count());
}

TEST(Fit, StructureIsPreservedBitForBit) {
    const ModelSpec spec = ModelSpec::univariate(UniModel::QAlpha, 0.5);
    const EventSeries ev = simulate_noisy(kUniTruth, {2000.0, 100.0, 22});
    const FitResult r = fit(spec, ev, quick_options(2));
    EXPECT_EQ(r.theta_hat.alpha(0, 0), 0.5);
    EXPECT_TRUE(spec.respects_structure(r.theta_hat));

    BoolMatrix mask = BoolMatrix::Constant(2, 2, false);
    mask(0, 0) = mask(1, 0) = true;
    const ModelSpec reduced = ModelSpec::with_support(mask);
    const FitResult rb = fit(reduced, simulate_noisy(scenario1(), {1500.0, 100.0, 23}), quick_options(3));
    EXPECT_EQ(rb.theta_hat.alpha(0, 1), 0.0);
    EXPECT_EQ(rb.theta_hat.alpha(1, 1), 0.0);
    EXPECT_TRUE(reduced.respects_structure(rb.theta_hat));
}

TEST(Fit, ChosenRestartHasBestLoglik) {
    const ModelSpec spec = ModelSpec::univariate(UniModel::QMu, 1.0);
    const FitResult r = fit(spec, simulate_noisy(kUniTruth, {1000.0, 100.0, 24}), quick_options(4));
    ASSERT_EQ(r.restarts.size(), 5u);
    for (const auto& t : r.restarts) {
        if (t.converged) {
            EXPECT_GE(r.loglik, t.loglik);
        }
    }
    EXPECT_EQ(r.loglik, r.restarts[static_cast<std::size_t>(r.chosen_start)].loglik);
}

TEST(Fit, DeterministicUnderSeed) {
    const ModelSpec spec = ModelSpec::univariate(UniModel::QLambda0, 1.6);
    const EventSeries ev = simulate_noisy(kUniTruth, {1000.0, 100.0, 25});
    const FitResult a = fit(spec, ev, quick_options(5));
    const FitResult b = fit(spec, ev, quick_options(5));
    EXPECT_EQ(a.theta_hat, b.theta_hat);
    EXPECT_EQ(a.loglik, b.loglik);
}

TEST(Fit, AllRestartsFailingIsExplicit) {
    FitOptions o = quick_options(6);
    o.optimizer.max_iterations = 1;
    o.optimizer.projected_gradient_tol = 0.0;
    o.optimizer.relative_change_tol = 0.0;
    const ModelSpec spec = ModelSpec::univariate(UniModel::QBeta, 1.0);
    try {
        (void)fit(spec, simulate_noisy(kUniTruth, {1000.0, 100.0, 26}), o);
        FAIL() << "expected FitFailure";
    } catch (const FitFailure& e) {
        EXPECT_EQ(e.traces().size(), 5u);
    }
}

TEST(Fit, MisspecifiedPoissonDataStillAdmissible) {
    const EventSeries ev = simulate_poisson(2.0, 1, {2000.0, 0.0, 27});
    const ModelSpec spec = ModelSpec::univariate(UniModel::QAlpha, 0.5);
    const FitResult r = fit(spec, ev, quick_options(7));
    EXPECT_NO_THROW(r.theta_hat.validate_stationary());
    EXPECT_GE(r.theta_hat.mu(0), spec.slot(spec.mu_slot(0)).lower);
}

TEST(Fit, RejectsEmptyOrMismatchedData) {
    EXPECT_THROW((void)fit(ModelSpec::full(1), EventSeries(1, 0.0, 10.0), quick_options(0)), ConfigError);
    EXPECT_THROW((void)fit(ModelSpec::full(2), EventSeries(0.0, 10.0, {{1.0}}), quick_options(0)), ConfigError);
}

TEST(Fit, TimeRescalingScalesRates) {
    const double c = 2.5;
    const EventSeries ev = simulate_noisy(kUniTruth, {3000.0, 100.0, 28});
    std::vector<double> scaled = ev.times(0);
    for (double& t : scaled) t *= c;
    const EventSeries ev_c(0.0, 3000.0 * c, {scaled});
    const ModelSpec spec = ModelSpec::univariate(UniModel::QAlpha, 0.5);
    FitOptions o = quick_options(8);
    o.m_policy = MPolicy::explicit_count(ev.total_count());
    const FitResult a = fit(spec, ev, o);
    const FitResult b = fit(spec, ev_c, o);
    EXPECT_NEAR(b.theta_hat.mu(0) * c, a.theta_hat.mu(0), 1e-4 * a.theta_hat.mu(0));
    EXPECT_NEAR(b.theta_hat.beta(0) * c, a.theta_hat.beta(0), 1e-4 * a.theta_hat.beta(0));
    EXPECT_NEAR(b.theta_hat.lambda0 * c, a.theta_hat.lambda0, 1e-4 * a.theta_hat.lambda0);
}

TEST(Fit, CompensationIdentityForQBeta) {
    const auto truth = NoisyHawkesParams::univariate(1.0, 0.5, 1.0, 1.2);
    const double m = mean_intensity(truth)(0);
    const ModelSpec spec = ModelSpec::univariate(UniModel::QBeta, 1.0);
    double rel = 0.0;
    const int trials = 10;
    for (int t = 0; t < trials; ++t) {
        const FitResult r = fit(spec, simulate_noisy(truth, {8000.0, 100.0, 300 + static_cast<std::uint64_t>(t)}),
                                quick_options(t));
        const double m_hat = r.theta_hat.lambda0 + r.theta_hat.mu(0) / (1.0 - r.theta_hat.alpha(0, 0));
        rel += std::abs(m_hat - m) / m;
    }
    EXPECT_LE(rel / trials, 0.05);
}

TEST(Fit, ReducedScenarioOneRecoversAlpha21) {
    BoolMatrix mask = BoolMatrix::Constant(2, 2, false);
    mask(0, 0) = mask(1, 0) = true;
    const ModelSpec spec = ModelSpec::with_support(mask);
    int close = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const FitResult r = fit(spec, simulate_noisy(scenario1(), {3000.0, 100.0, 500 + static_cast<std::uint64_t>(t)}),
                                quick_options(t));
        close += std::abs(r.theta_hat.alpha(1, 0) - 0.4) <= 0.1 ? 1 : 0;
    }
    EXPECT_GE(close, 16);
}

TEST(Fit, NullEstimateRule) {
    const ModelSpec spec = ModelSpec::full(2);
    NoisyHawkesParams p = scenario1();
    EXPECT_TRUE(is_null_estimate(spec, p, 0, 1));
    p.alpha(0, 1) = 5e-5;
    EXPECT_TRUE(is_null_estimate(spec, p, 0, 1));
    p.alpha(0, 1) = 2e-4;
    EXPECT_FALSE(is_null_estimate(spec, p, 0, 1));
    EXPECT_FALSE(is_null_estimate(spec, p, 1, 0));
}

TEST(Fit, JsonOutputHidesTraceUnlessVerbose) {
    const ModelSpec spec = ModelSpec::univariate(UniModel::QBeta, 1.0);
    const FitResult r = fit(spec, simulate_noisy(kUniTruth, {500.0, 100.0, 29}), quick_options(9));
    const auto brief = fit_to_json(r, false);
    const auto full = fit_to_json(r, true);
    EXPECT_TRUE(brief.contains("theta_hat"));
    EXPECT_TRUE(brief.contains("M_used"));
    EXPECT_TRUE(full["restarts"][0].contains("init"));
    EXPECT_FALSE(brief["restarts"][0].contains("init"));
}
