#include <cmath>
#include <optional>

#include <gtest/gtest.h>

#include "setclf/estimators.hpp"
#include "setclf/random.hpp"
#include "setclf/simulate.hpp"
#include "test_support.hpp"

using namespace setclf;

namespace {

LabeledSet singleton(std::initializer_list<double> x, int label) {
    return LabeledSet{SetSample{{Vector(x)}}, label};
}

// clime with the feasibility contract asserted on every call:
// ||Sigma Omega - I||_inf <= lambda1 + 1e-8.
Matrix checked_clime(const Matrix& sigma, double lambda1) {
    const Matrix omega = clime(sigma, lambda1);
    const std::size_t p = sigma.rows();
    Matrix residual = mat_mul(sigma, omega);
    for (std::size_t i = 0; i < p; ++i) residual(i, i) -= 1.0;
    EXPECT_LE(max_abs(residual), lambda1 + 1e-8);
    return omega;
}

std::vector<LabeledSet> two_class_training(const GaussianClassModel& m1,
                                           const GaussianClassModel& m2, std::size_t n_per_class,
                                           std::size_t set_size, Rng& rng) {
    return generate_training(m1, m2, n_per_class, SetSizeDistribution::fixed(set_size), rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// pooled moments
// ---------------------------------------------------------------------------

TEST(PooledMoments, SingletonPerClass) {
    const auto m = pooled_moments({singleton({1.0, 2.0}, 1), singleton({-1.0, 0.5}, 2)});
    EXPECT_EQ(m.per_class[0].set_count, 1u);
    EXPECT_EQ(m.per_class[0].observation_count, 1u);
    EXPECT_DOUBLE_EQ(m.per_class[0].prior_estimate, 0.5);
    EXPECT_DOUBLE_EQ(m.per_class[0].mean_estimate[0], 1.0);
    EXPECT_DOUBLE_EQ(m.per_class[1].mean_estimate[1], 0.5);
    for (int k = 0; k < 2; ++k) {
        for (double v : m.per_class[k].covariance_estimate.data()) EXPECT_EQ(v, 0.0);
    }
}

TEST(PooledMoments, TwoSingletonSets) {
    const auto m = pooled_moments(
        {singleton({0.0, 0.0}, 1), singleton({2.0, 2.0}, 1), singleton({5.0, 5.0}, 2)});
    EXPECT_EQ(m.per_class[0].set_count, 2u);
    EXPECT_EQ(m.per_class[0].observation_count, 2u);
    EXPECT_DOUBLE_EQ(m.per_class[0].mean_estimate[0], 1.0);
    EXPECT_DOUBLE_EQ(m.per_class[0].mean_estimate[1], 1.0);
    for (double v : m.per_class[0].covariance_estimate.data()) EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_NEAR(m.per_class[0].prior_estimate, 2.0 / 3.0, 1e-15);
}

TEST(PooledMoments, MissingClassThrows) {
    EXPECT_THROW(pooled_moments({singleton({1.0}, 1), singleton({2.0}, 1)}), MissingClassError);
    EXPECT_THROW(pooled_moments({}), MissingClassError);
}

// Estimation error shrinks roughly as 1 / sqrt(N m0): a 16x larger sample
// should cut the sup-norm error about fourfold.
TEST(PooledMoments, ConvergesWithSampleSize) {
    Rng rng(41);
    const Matrix cov(2, 2, {2.0, 0.6, 0.6, 1.0});
    const GaussianClassModel m1(0.5, {1.0, -1.0}, cov);
    const GaussianClassModel m2(0.5, {0.0, 0.0}, Matrix::identity(2));
    double err_small = 0.0, err_large = 0.0;
    for (int rep = 0; rep < 6; ++rep) {
        const auto small_m = pooled_moments(two_class_training(m1, m2, 20, 5, rng));
        const auto large_m = pooled_moments(two_class_training(m1, m2, 320, 5, rng));
        auto sup_err = [&](const PooledMoments& m) {
            double e = 0.0;
            for (std::size_t j = 0; j < 2; ++j) {
                e = std::max(e, std::abs(m.per_class[0].mean_estimate[j] - m1.mean()[j]));
            }
            for (std::size_t i = 0; i < 4; ++i) {
                e = std::max(e, std::abs(m.per_class[0].covariance_estimate.data()[i] -
                                         cov.data()[i]));
            }
            return e;
        };
        err_small += sup_err(small_m);
        err_large += sup_err(large_m);
    }
    EXPECT_LT(err_large, 0.55 * err_small);
}

// ---------------------------------------------------------------------------
// plug-in classifiers
// ---------------------------------------------------------------------------

namespace {

PooledMoments manual_moments(Vector mu1, Matrix s1, Vector mu2, Matrix s2, double pi1 = 0.5) {
    PooledMoments m;
    m.per_class[0] = {10, 100, pi1, std::move(mu1), std::move(s1)};
    m.per_class[1] = {10, 100, 1.0 - pi1, std::move(mu2), std::move(s2)};
    return m;
}

}  // namespace

TEST(Plugin, IdenticalMomentsGiveZeroCoefficients) {
    const auto m =
        manual_moments({1.0, 2.0}, Matrix::identity(2), {1.0, 2.0}, Matrix::identity(2));
    const auto fit = plugin_classifier(m, PluginVariant::Full);
    EXPECT_EQ(fit.method_tag, MethodTag::PluginFull);
    EXPECT_EQ(fit.coefficients.constant, 0.0);
    for (double v : fit.coefficients.linear) EXPECT_EQ(v, 0.0);
    for (double v : fit.coefficients.quadratic.data()) EXPECT_EQ(v, 0.0);
}

TEST(Plugin, DiagonalEqualsFullOnStrippedMoments) {
    Rng rng(21);
    const Matrix s1 = testsup::random_pd(3, rng);
    const Matrix s2 = testsup::random_pd(3, rng);
    auto strip = [](const Matrix& s) {
        Matrix d(s.rows(), s.cols(), 0.0);
        for (std::size_t i = 0; i < s.rows(); ++i) d(i, i) = s(i, i);
        return d;
    };
    const Vector mu1 = testsup::random_vector(3, rng);
    const Vector mu2 = testsup::random_vector(3, rng);
    const auto diag_fit =
        plugin_classifier(manual_moments(mu1, s1, mu2, s2), PluginVariant::Diagonal);
    const auto full_fit =
        plugin_classifier(manual_moments(mu1, strip(s1), mu2, strip(s2)), PluginVariant::Full);
    EXPECT_EQ(diag_fit.coefficients.constant, full_fit.coefficients.constant);
    EXPECT_EQ(diag_fit.coefficients.linear, full_fit.coefficients.linear);
    EXPECT_EQ(diag_fit.coefficients.quadratic.data(), full_fit.coefficients.quadratic.data());
}

// Enriched variant on degenerate zero covariances: Sigma + I = I, so the
// coefficients reduce to the identity-covariance formulas.
TEST(Plugin, EnrichedHandlesZeroCovariance) {
    const auto m = manual_moments({1.0, 0.0}, Matrix(2, 2, 0.0), {0.0, 0.0}, Matrix(2, 2, 0.0));
    const auto fit = plugin_classifier(m, PluginVariant::Enriched, 1.0);
    // beta0 = (0 - mu1'mu1 + mu2'mu2)/2 = -1/2; beta = mu1 - mu2 = (1, 0).
    EXPECT_NEAR(fit.coefficients.constant, -0.5, 1e-12);
    EXPECT_NEAR(fit.coefficients.linear[0], 1.0, 1e-12);
    EXPECT_NEAR(fit.coefficients.linear[1], 0.0, 1e-12);
    for (double v : fit.coefficients.quadratic.data()) EXPECT_NEAR(v, 0.0, 1e-12);
    EXPECT_EQ(fit.enrich_delta, 1.0);
}

TEST(Plugin, FullVariantRejectsRankDeficiency) {
    // p = 3 with 2 observations per class: the pooled covariance has rank <= 2.
    Rng rng(22);
    std::vector<LabeledSet> sets;
    for (int label = 1; label <= 2; ++label) {
        for (int i = 0; i < 2; ++i) {
            sets.push_back(LabeledSet{testsup::random_set(1, 3, rng), label});
        }
    }
    const auto m = pooled_moments(sets);
    EXPECT_THROW(plugin_classifier(m, PluginVariant::Full), NotPositiveDefiniteError);
    EXPECT_NO_THROW(plugin_classifier(m, PluginVariant::Enriched, 1.0));
}

TEST(Plugin, DiagonalRequiresPositiveVariances) {
    const auto m = manual_moments({0.0}, Matrix(1, 1, 0.0), {0.0}, Matrix(1, 1, {1.0}));
    EXPECT_THROW(plugin_classifier(m, PluginVariant::Diagonal), NotPositiveDefiniteError);
}

// ---------------------------------------------------------------------------
// CLIME
// ---------------------------------------------------------------------------

TEST(Clime, IdentityShrinksByLambda) {
    const Matrix omega = checked_clime(Matrix::identity(5), 0.1);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            EXPECT_NEAR(omega(i, j), i == j ? 0.9 : 0.0, 1e-8);
        }
    }
}

TEST(Clime, LargeLambdaGivesZero) {
    const Matrix omega = checked_clime(Matrix::identity(4), 1.5);
    for (double v : omega.data()) EXPECT_NEAR(v, 0.0, 1e-10);
    const Matrix omega_at_one = checked_clime(Matrix::identity(4), 1.0);
    for (double v : omega_at_one.data()) EXPECT_NEAR(v, 0.0, 1e-10);
}

TEST(Clime, DiagonalClosedForm) {
    Matrix sigma(2, 2, 0.0);
    sigma(0, 0) = 2.0;
    sigma(1, 1) = 4.0;
    const Matrix omega = checked_clime(sigma, 0.1);
    EXPECT_NEAR(omega(0, 0), 0.45, 1e-8);
    EXPECT_NEAR(omega(1, 1), 0.225, 1e-8);
    EXPECT_NEAR(omega(0, 1), 0.0, 1e-10);
    EXPECT_NEAR(omega(1, 0), 0.0, 1e-10);
}

// l1-minimality on coordinate-separable inputs: each diagonal entry is
// (1 - lambda)+ / sigma_jj.
TEST(Clime, DiagonalMinimalityProperty) {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t p = 1 + rng.below(6);
        Matrix sigma(p, p, 0.0);
        for (std::size_t i = 0; i < p; ++i) sigma(i, i) = 0.2 + 3.0 * rng.uniform01();
        const double lambda = 0.05 + rng.uniform01();
        const Matrix omega = checked_clime(sigma, lambda);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                const double want = i == j ? std::max(1.0 - lambda, 0.0) / sigma(i, i) : 0.0;
                EXPECT_NEAR(omega(i, j), want, 1e-8);
            }
        }
    }
}

TEST(Clime, InfeasibleColumnCarriesIndex) {
    // Rank-one covariance: e_j is unreachable within a small sup-norm ball.
    Matrix sigma(3, 3, 1.0);  // x x' with x = (1, 1, 1)
    try {
        clime(sigma, 0.2);
        FAIL() << "expected InfeasibleColumnError";
    } catch (const InfeasibleColumnError& e) {
        EXPECT_EQ(e.column(), 0u);
    }
}

TEST(Clime, TracksTruePrecisionAtSmallLambda) {
    const Matrix sigma(2, 2, {2.0, 0.5, 0.5, 1.0});
    const Matrix omega = checked_clime(sigma, 0.01);
    const Matrix truth = cholesky(sigma).inverse();
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(omega.data()[i], truth.data()[i], 0.05);
    }
}

// ---------------------------------------------------------------------------
// thresholded symmetrized difference
// ---------------------------------------------------------------------------

TEST(ThresholdDifference, EqualInputsGiveZero) {
    Rng rng(25);
    const Matrix omega = testsup::random_matrix(4, 4, rng);
    const Matrix nabla = threshold_difference(omega, omega, 0.1);
    for (double v : nabla.data()) EXPECT_EQ(v, 0.0);
}

TEST(ThresholdDifference, SmallerMagnitudeWins) {
    Matrix omega1(2, 2, 0.0);
    Matrix omega2(2, 2, 0.0);
    omega2(0, 1) = 0.3;  // difference 0.3, above threshold
    omega2(1, 0) = 0.5;  // transposed partner 0.5
    const Matrix nabla = threshold_difference(omega1, omega2, 0.1);
    EXPECT_DOUBLE_EQ(nabla(0, 1), 0.3);
    EXPECT_DOUBLE_EQ(nabla(1, 0), 0.3);
}

TEST(ThresholdDifference, ThresholdedEntryZeroesItsPartner) {
    Matrix omega1(2, 2, 0.0);
    Matrix omega2(2, 2, 0.0);
    omega2(0, 1) = 0.05;  // below threshold -> 0
    omega2(1, 0) = 0.5;   // partner survives but loses the magnitude vote
    const Matrix nabla = threshold_difference(omega1, omega2, 0.1);
    EXPECT_EQ(nabla(0, 1), 0.0);
    EXPECT_EQ(nabla(1, 0), 0.0);
}

// Output entries are exactly zero or exceed the threshold in magnitude, the
// matrix is exactly symmetric, and enlarging the threshold never grows the
// support.
TEST(ThresholdDifference, SupportProperties) {
    Rng rng(26);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t p = 2 + rng.below(5);
        const Matrix omega1 = testsup::random_matrix(p, p, rng);
        const Matrix omega2 = testsup::random_matrix(p, p, rng);
        const double lam = 0.2 + rng.uniform01();
        const Matrix small = threshold_difference(omega1, omega2, lam);
        const Matrix large = threshold_difference(omega1, omega2, lam * 1.7);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                EXPECT_EQ(small(i, j), small(j, i));
                if (small(i, j) != 0.0) EXPECT_GT(std::abs(small(i, j)), lam);
                if (large(i, j) != 0.0) EXPECT_NE(small(i, j), 0.0);  // support shrinks
            }
        }
    }
}

// ---------------------------------------------------------------------------
// direct beta
// ---------------------------------------------------------------------------

TEST(DirectBeta, EqualMeansGiveZero) {
    Rng rng(27);
    const Matrix sigma = testsup::random_pd(3, rng);
    const Vector mu = testsup::random_vector(3, rng);
    const Vector beta = direct_beta(manual_moments(mu, sigma, mu, sigma), 0.3);
    for (double v : beta) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(DirectBeta, IntervalGapClosedForm) {
    const auto m =
        manual_moments({1.0, 0.0}, Matrix::identity(2), {0.0, 0.0}, Matrix::identity(2));
    const auto fit = direct_beta_fit(m, 0.2);
    EXPECT_NEAR(fit.beta[0], 0.6, 1e-8);
    EXPECT_NEAR(fit.beta[1], 0.0, 1e-9);
    // Feasibility contract for both theta_k.
    for (int k = 0; k < 2; ++k) {
        const Vector& theta = k == 0 ? fit.theta1 : fit.theta2;
        const Vector resid = mat_vec(m.per_class[k].covariance_estimate, theta);
        for (std::size_t i = 0; i < 2; ++i) {
            EXPECT_LE(std::abs(resid[i] - m.per_class[k].mean_estimate[i]), 0.2 + 1e-8);
        }
    }
}

TEST(DirectBeta, OverlappingIntervalsGiveZero) {
    const auto m =
        manual_moments({0.3, 0.0}, Matrix::identity(2), {0.0, 0.0}, Matrix::identity(2));
    const Vector beta = direct_beta(m, 0.2);  // epsilon = 0.3 < 2 * lambda
    for (double v : beta) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(DirectBeta, L1CapDoesNotChangeTheSolution) {
    const auto m =
        manual_moments({1.0, 0.0}, Matrix::identity(2), {0.0, 0.0}, Matrix::identity(2));
    const Vector uncapped = direct_beta(m, 0.2);
    const Vector capped = direct_beta(m, 0.2, 100.0);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(uncapped[j], capped[j], 1e-9);
}

TEST(DirectBeta, InfeasibleWhenLambdaTooSmall) {
    // Zero covariances force Sigma theta = 0, so feasibility needs
    // lambda >= ||mu||_inf.
    const auto m = manual_moments({5.0}, Matrix(1, 1, 0.0), {0.0}, Matrix(1, 1, 0.0));
    EXPECT_THROW(direct_beta(m, 0.5), InfeasibleError);
}

// ---------------------------------------------------------------------------
// the scalar logistic fit
// ---------------------------------------------------------------------------

TEST(FitBeta0, BalancedNullDesignGivesZero) {
    std::vector<LabeledSet> batch;
    Rng rng(28);
    for (int i = 0; i < 8; ++i) {
        batch.push_back(LabeledSet{testsup::random_set(1, 2, rng), i % 2 == 0 ? 1 : 2});
    }
    const double beta0 = fit_beta0(batch, Vector(2, 0.0), Matrix(2, 2, 0.0), {0.5, 0.5});
    EXPECT_NEAR(beta0, 0.0, 1e-8);
}

TEST(FitBeta0, AntisymmetricOffsetsGiveZero) {
    // Class-1 offsets -c, class-2 offsets +c via 1-D singletons and beta = 1.
    std::vector<LabeledSet> batch{singleton({-1.3}, 1), singleton({1.3}, 2),
                                  singleton({-0.4}, 1), singleton({0.4}, 2)};
    const double beta0 = fit_beta0(batch, {1.0}, Matrix(1, 1, 0.0), {0.5, 0.5});
    EXPECT_NEAR(beta0, 0.0, 1e-8);
}

// Central finite difference of the objective matches the analytic gradient,
// and the returned minimizer is a stationary point.
TEST(FitBeta0, FiniteDifferenceOracle) {
    Rng rng(29);
    std::vector<LabeledSet> batch;
    for (int i = 0; i < 12; ++i) {
        batch.push_back(
            LabeledSet{testsup::random_set(1 + rng.below(4), 2, rng), i % 2 == 0 ? 1 : 2});
    }
    const Vector beta = testsup::random_vector(2, rng, 0.5);
    const Matrix nabla = testsup::random_symmetric(2, rng, 0.3);
    const auto problem = make_beta0_problem(batch, beta, nabla, {0.5, 0.5});
    const double beta0 = fit_beta0(batch, beta, nabla, {0.5, 0.5});
    EXPECT_LE(std::abs(problem.derivative(beta0)), 1e-10);
    const double h = 1e-5;
    for (double theta : {beta0, -0.7, 0.0, 1.2}) {
        const double fd = (problem.value(theta + h) - problem.value(theta - h)) / (2.0 * h);
        EXPECT_NEAR(problem.derivative(theta), fd, 1e-6);
    }
}

TEST(FitBeta0, ObjectiveIsConvex) {
    Rng rng(30);
    std::vector<LabeledSet> batch;
    for (int i = 0; i < 10; ++i) {
        batch.push_back(
            LabeledSet{testsup::random_set(1 + rng.below(5), 3, rng), i % 2 == 0 ? 1 : 2});
    }
    const auto problem = make_beta0_problem(batch, testsup::random_vector(3, rng),
                                            testsup::random_symmetric(3, rng, 0.4), {0.5, 0.5});
    for (int i = 0; i < 100; ++i) {
        EXPECT_GE(problem.second_derivative(rng.uniform(-20.0, 20.0)), 0.0);
    }
}

TEST(FitBeta0, FarRootRaisesNoConvergence) {
    // Offsets -200 and 0 put the stationary point near +100, past the
    // bracket limit of 50.
    std::vector<LabeledSet> batch{singleton({-200.0}, 1), singleton({0.0}, 2)};
    EXPECT_THROW(fit_beta0(batch, {1.0}, Matrix(1, 1, 0.0), {0.5, 0.5}), NoConvergenceError);
}

TEST(FitBeta0, RequiresBothClasses) {
    std::vector<LabeledSet> batch{singleton({1.0}, 1), singleton({2.0}, 1)};
    EXPECT_THROW(fit_beta0(batch, {0.0}, Matrix(1, 1, 0.0), {0.5, 0.5}), MissingClassError);
}

TEST(FitBeta0, RecoversKnownIntercept) {
    // Intercept-only fit with class imbalance 3:1 and zero offsets: the MLE
    // satisfies sigma(theta) = 3/4, i.e. theta = log 3.
    std::vector<LabeledSet> batch{singleton({0.0}, 1), singleton({0.0}, 1),
                                  singleton({0.0}, 1), singleton({0.0}, 2)};
    const double beta0 = fit_beta0(batch, {0.0}, Matrix(1, 1, 0.0), {0.5, 0.5});
    EXPECT_NEAR(beta0, std::log(3.0), 1e-8);
}

// ---------------------------------------------------------------------------
// fit_clips and tune
// ---------------------------------------------------------------------------

namespace {

ClipsHyperparameters hyper(double l1, double lt, double l2, std::uint64_t seed = 7) {
    ClipsHyperparameters h;
    h.clime_lambda = l1;
    h.threshold_lambda = lt;
    h.beta_lambda = l2;
    h.split_seed = seed;
    return h;
}

}  // namespace

TEST(FitClips, DeterministicGivenSeed) {
    Rng rng(31);
    const GaussianClassModel m1(0.5, {0.5, 0.0, 0.0}, testsup::random_pd(3, rng));
    const GaussianClassModel m2(0.5, {0.0, 0.0, 0.0}, testsup::random_pd(3, rng));
    const auto training = two_class_training(m1, m2, 6, 4, rng);
    const auto fit1 = fit_clips(training, hyper(0.3, 0.2, 0.3));
    const auto fit2 = fit_clips(training, hyper(0.3, 0.2, 0.3));
    EXPECT_EQ(fit1.coefficients.constant, fit2.coefficients.constant);
    EXPECT_EQ(fit1.coefficients.linear, fit2.coefficients.linear);
    EXPECT_EQ(fit1.coefficients.quadratic.data(), fit2.coefficients.quadratic.data());
    EXPECT_EQ(fit1.method_tag, MethodTag::Clips);
}

TEST(FitClips, IdenticalClassesWithLargeLambdasGiveZero) {
    Rng rng(32);
    const Matrix cov = testsup::random_pd(3, rng);
    const GaussianClassModel m(0.5, {0.0, 0.0, 0.0}, cov);
    const auto training = two_class_training(m, m, 8, 5, rng);
    const auto fit = fit_clips(training, hyper(2.0, 1.0, 2.0));
    for (double v : fit.coefficients.linear) EXPECT_EQ(v, 0.0);
    for (double v : fit.coefficients.quadratic.data()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(fit.coefficients.prior_log_ratio, 0.0);
}

TEST(FitClips, RunsOnSingletonSets) {
    Rng rng(33);
    const GaussianClassModel m1(0.5, {1.0, 0.0}, Matrix::identity(2));
    const GaussianClassModel m2(0.5, {-1.0, 0.0}, Matrix::identity(2));
    const auto training = two_class_training(m1, m2, 10, 1, rng);
    const auto fit = fit_clips(training, hyper(1.2, 0.5, 0.4));
    EXPECT_TRUE(std::isfinite(fit.coefficients.constant));
    (void)fit.classify(SetSample{{{1.5, 0.0}}});
}

TEST(FitClips, NeedsTwoSetsPerClass) {
    Rng rng(34);
    std::vector<LabeledSet> training{LabeledSet{testsup::random_set(3, 2, rng), 1},
                                     LabeledSet{testsup::random_set(3, 2, rng), 2}};
    EXPECT_THROW(fit_clips(training, hyper(0.5, 0.5, 0.5)), MissingClassError);
}

TEST(Tune, SinglePointGridReturnsIt) {
    Rng rng(35);
    const GaussianClassModel m1(0.5, {0.8, 0.0}, Matrix::identity(2));
    const GaussianClassModel m2(0.5, {-0.8, 0.0}, Matrix::identity(2));
    const auto training = two_class_training(m1, m2, 6, 4, rng);
    const auto validation = two_class_training(m1, m2, 6, 4, rng);
    const LambdaGrid grid{{0.4}, {0.3}, {0.25}};
    const auto result = tune(training, validation, grid, 7);
    EXPECT_EQ(result.hyperparameters.clime_lambda, 0.4);
    EXPECT_EQ(result.hyperparameters.threshold_lambda, 0.3);
    EXPECT_EQ(result.hyperparameters.beta_lambda, 0.25);
    EXPECT_EQ(result.hyperparameters.split_seed, 7u);
    // The reported validation error matches refitting at the chosen cell.
    const auto refit = fit_clips(training, result.hyperparameters);
    EXPECT_EQ(result.validation_error, misclassification_rate(refit, validation));
}

TEST(Tune, MatchesPerCellFitClips) {
    Rng rng(36);
    const GaussianClassModel m1(0.5, {0.7, 0.0, 0.0}, Matrix::identity(3));
    const GaussianClassModel m2(0.5, {0.0, 0.0, 0.0}, Matrix::identity(3));
    const auto training = two_class_training(m1, m2, 8, 3, rng);
    const auto validation = two_class_training(m1, m2, 8, 3, rng);
    const LambdaGrid grid{{0.3, 0.9}, {0.2, 0.6}, {0.3, 0.8}};
    const auto result = tune(training, validation, grid, 11);
    double best = 2.0;
    for (double l1 : grid.clime_lambdas) {
        for (double lt : grid.threshold_lambdas) {
            for (double l2 : grid.beta_lambdas) {
                const auto fit = fit_clips(training, hyper(l1, lt, l2, 11));
                best = std::min(best, misclassification_rate(fit, validation));
            }
        }
    }
    EXPECT_EQ(result.validation_error, best);
}

TEST(Tune, TiesBreakTowardLargerLambdas) {
    Rng rng(37);
    const Matrix cov = testsup::random_pd(2, rng);
    const GaussianClassModel m(0.5, {0.0, 0.0}, cov);
    const auto training = two_class_training(m, m, 6, 4, rng);
    const auto validation = two_class_training(m, m, 6, 4, rng);
    // Identical classes: large lambdas give the all-zero classifier, and any
    // cell with all-zero coefficients ties with it.
    const LambdaGrid grid{{2.0, 4.0}, {1.0, 3.0}, {2.0, 5.0}};
    const auto result = tune(training, validation, grid, 13);
    EXPECT_EQ(result.hyperparameters.clime_lambda, 4.0);
    EXPECT_EQ(result.hyperparameters.threshold_lambda, 3.0);
    EXPECT_EQ(result.hyperparameters.beta_lambda, 5.0);
}

TEST(Tune, InfeasibleCellsScoreOneWithoutAborting) {
    // Singleton batches give zero covariances: CLIME is infeasible below
    // lambda = 1 and the beta program below ||mu||_inf.
    std::vector<LabeledSet> training{singleton({4.0, 0.0}, 1), singleton({4.1, 0.0}, 1),
                                     singleton({-4.0, 0.0}, 2), singleton({-4.2, 0.0}, 2)};
    std::vector<LabeledSet> validation{singleton({4.0, 0.0}, 1), singleton({-4.0, 0.0}, 2)};
    const LambdaGrid grid{{0.5, 1.5}, {0.5}, {0.2, 6.0}};
    const auto result = tune(training, validation, grid, 3);
    // The only fully feasible cells have clime_lambda = 1.5, beta_lambda = 6.
    EXPECT_EQ(result.hyperparameters.clime_lambda, 1.5);
    EXPECT_EQ(result.hyperparameters.beta_lambda, 6.0);
    EXPECT_LT(result.validation_error, 1.0);
}

TEST(Tune, ValidationMustContainBothClasses) {
    Rng rng(38);
    const GaussianClassModel m(0.5, {0.0}, Matrix::identity(1));
    const auto training = two_class_training(m, m, 4, 2, rng);
    std::vector<LabeledSet> validation{singleton({0.1}, 1)};
    EXPECT_THROW(tune(training, validation, LambdaGrid{{1.0}, {1.0}, {1.0}}, 1),
                 MissingClassError);
}

TEST(DefaultGrid, CentersOnTheoryRate) {
    const auto grid = default_lambda_grid(100, 14, 10.0);
    ASSERT_EQ(grid.clime_lambdas.size(), 7u);
    const double center = std::sqrt(std::log(100.0) / 140.0);
    EXPECT_NEAR(grid.clime_lambdas[3], center, 1e-12);
    EXPECT_NEAR(grid.clime_lambdas.front(), 0.1 * center, 1e-12);
    EXPECT_NEAR(grid.clime_lambdas.back(), 10.0 * center, 1e-12);
}
