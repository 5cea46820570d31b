#include "test_util.hpp"

#include "wmc/solver.hpp"
#include "wmc/theory.hpp"

#include <Eigen/SVD>

#include <cmath>

using namespace wmc;
using wmc::test::random_rank;
using wmc::test::random_weights;

TEST(ErrorBound, ExactRankHasNoApproximationTerm) {
    Rng rng(1);
    const auto w = random_weights(8, 8, rng);
    const Matrix theta = random_rank(8, 8, 3, rng);
    const Matrix delta = rng.gaussian(8, 8);
    const auto b = theorem2_bound(delta, theta, w, 0.2, 3, 2.0, 50.0);
    EXPECT_EQ(b.kind, RateKind::theorem2);
    EXPECT_NEAR(b.components.at("approximation"), 0.0, 1e-9 * b.value);
    EXPECT_NEAR(b.components.at("estimation"), 50.0 * 2.0 * 0.2 * std::sqrt(3.0) * to_gamma(delta, w).norm(), 1e-10);
    EXPECT_DOUBLE_EQ(b.value, b.components.at("estimation") + b.components.at("approximation"));
}

TEST(ErrorBound, ZeroErrorLeavesApproximation) {
    Rng rng(2);
    const auto w = WeightPair::uniform(6, 6);
    const Matrix theta = rng.gaussian(6, 6);
    const auto b = theorem2_bound(Matrix::Zero(6, 6), theta, w, 0.1, 2, 1.0, 1.0);
    EXPECT_EQ(b.components.at("estimation"), 0.0);
    EXPECT_DOUBLE_EQ(b.value, b.components.at("approximation"));
    EXPECT_GT(b.value, 0.0);
}

TEST(ErrorBound, TailSumMatchesIndependentSvd) {
    Rng rng(3);
    const auto w = random_weights(7, 6, rng);
    const Matrix theta = random_rank(7, 6, 4, rng);
    Eigen::JacobiSVD<Matrix> svd(to_gamma(theta, w));
    const Vector s = svd.singularValues();
    const double tail = s(2) + s(3);
    const auto b = theorem2_bound(Matrix::Zero(7, 6), theta, w, 1.0, 2, 1.0, 1.0);
    EXPECT_NEAR(b.components.at("approximation"), tail, 1e-10);
}

TEST(ErrorBound, RankOutOfRange) {
    const auto w = WeightPair::uniform(4, 4);
    EXPECT_THROW(theorem2_bound(Matrix::Zero(4, 4), Matrix::Ones(4, 4), w, 1, 0, 1, 1), std::invalid_argument);
    EXPECT_THROW(theorem2_bound(Matrix::Zero(4, 4), Matrix::Ones(4, 4), w, 1, 5, 1, 1), std::invalid_argument);
}

TEST(PlugInRate, ExactPlugIn) {
    const long long n = std::llround(100.0 * 5.0 * std::log(100.0));
    const auto r = corollary_rate(CorollaryKind::exact, 1.0, 1.0, 5.0, 0.0, 100.0, n, 1.0);
    EXPECT_NEAR(r.value, 1.0, 1e-3);
    const double exact_n = 100.0 * 5.0 * std::log(100.0);
    EXPECT_NEAR(r.value, exact_n / double(n), 1e-12);
}

TEST(PlugInRate, LqAtZeroMatchesExact) {
    const auto a = corollary_rate(CorollaryKind::exact, 0.7, 3.0, 4.0, 0.0, 60.0, 5000, 2.0);
    const auto b = corollary_rate(CorollaryKind::lq, 0.7, 3.0, 4.0, 0.0, 60.0, 5000, 2.0);
    EXPECT_NEAR(a.value, b.value, 1e-12 * a.value);
}

TEST(PlugInRate, DoublingNHalvesExactRate) {
    const auto a = corollary_rate(CorollaryKind::exact, 2.0, 3.0, 4.0, 0.0, 60.0, 5000, 2.0);
    const auto b = corollary_rate(CorollaryKind::exact, 2.0, 3.0, 4.0, 0.0, 60.0, 10000, 2.0);
    EXPECT_NEAR(a.value, 2.0 * b.value, 1e-12 * a.value);
    // max(nu^2, 1) uses the noise level once it exceeds one.
    const auto c = corollary_rate(CorollaryKind::exact, 0.5, 3.0, 4.0, 0.0, 60.0, 5000, 2.0);
    EXPECT_NEAR(a.value, 4.0 * c.value, 1e-12 * a.value);
}

TEST(PlugInRate, InvalidQ) {
    EXPECT_THROW(corollary_rate(CorollaryKind::lq, 1, 1, 1, 1.5, 10, 10, 1), std::invalid_argument);
    EXPECT_THROW(corollary_rate(CorollaryKind::lq, 1, 1, 1, -0.5, 10, 10, 1), std::invalid_argument);
}

TEST(MinimaxFloor, PlugIn) {
    const auto m = minimax_floor(5.0, 0.0, 1.0, 100.0, 10000);
    EXPECT_NEAR(m.rate.value, 0.05, 1e-15);
    EXPECT_EQ(m.active_branch, 1);
    EXPECT_TRUE(m.key_bound_holds);
}

TEST(MinimaxFloor, HugeRadiusSaturates) {
    const auto m = minimax_floor(1e9, 0.5, 1.0, 100.0, 10000);
    EXPECT_EQ(m.active_branch, 2);
    EXPECT_NEAR(m.rate.value, 100.0 * 100.0 / 10000.0, 1e-12);
    EXPECT_FALSE(m.key_bound_holds);
}

TEST(MinimaxFloor, KeyBoundAtQZeroIsRankAtMostD) {
    EXPECT_TRUE(minimax_floor(100.0, 0.0, 0.3, 100.0, 777).key_bound_holds);
    EXPECT_FALSE(minimax_floor(100.5, 0.0, 0.3, 100.0, 777).key_bound_holds);
}

TEST(Decomposition, InsideSubspacesHasNoOrthogonalPart) {
    Rng rng(4);
    const Matrix gamma = random_rank(8, 8, 2, rng);
    const Svd s = thin_svd(gamma);
    const Matrix u = s.U.leftCols(2), v = s.V.leftCols(2);
    const Matrix inside = u * rng.gaussian(2, 8) + rng.gaussian(8, 2) * v.transpose();
    const auto dec = lemma1_decompose(inside, gamma, 2);
    EXPECT_LE(dec.delta_double_prime.norm(), 1e-12);
}

TEST(Decomposition, PureOrthogonalPartHasNoPrimePart) {
    Rng rng(5);
    const Matrix gamma = random_rank(8, 8, 2, rng);
    const Svd s = thin_svd(gamma);
    const Matrix pu = s.U.leftCols(2) * s.U.leftCols(2).transpose();
    const Matrix pv = s.V.leftCols(2) * s.V.leftCols(2).transpose();
    const Matrix eye = Matrix::Identity(8, 8);
    const Matrix delta = (eye - pu) * rng.gaussian(8, 8) * (eye - pv);
    const auto dec = lemma1_decompose(delta, gamma, 2);
    EXPECT_LE(dec.delta_prime.norm(), 1e-12);
}

TEST(DecompositionProperty, RankBoundAndExactSum) {
    Rng rng(6);
    for (int k = 0; k < 50; ++k) {
        const Index r = 1 + k % 3;
        const Matrix gamma = rng.gaussian(8, 8);
        const Matrix delta = rng.gaussian(8, 8);
        const auto dec = lemma1_decompose(delta, gamma, r);
        EXPECT_LE(numerical_rank(dec.delta_prime, 1e-9), 2 * r);
        EXPECT_LE((dec.delta_prime + dec.delta_double_prime - delta).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_FALSE(dec.degenerate);
    }
}

TEST(Decomposition, DegenerateSpectrumIsFlagged) {
    const auto dec = lemma1_decompose(Matrix::Ones(4, 4), Matrix::Identity(4, 4), 2);
    EXPECT_TRUE(dec.degenerate);
    EXPECT_LE(numerical_rank(dec.delta_prime), 4);
    EXPECT_THROW(lemma1_decompose(Matrix::Ones(4, 4), Matrix::Identity(4, 4), 5), std::invalid_argument);
    EXPECT_THROW(lemma1_decompose(Matrix::Ones(4, 3), Matrix::Identity(4, 4), 1), DimensionMismatch);
}

TEST(Rsc, VacuousRegimeIsNonNegative) {
    Rng rng(7);
    const auto w = WeightPair::uniform(10, 10);
    const auto idx = sample_indices(w, 50, rng);
    const Matrix delta = rng.gaussian(10, 10);
    const auto t = rsc_terms(idx, delta, w, 50);
    EXPECT_LE(t.rhs, 0.0); // 128 * spikiness / sqrt(50) > 1
    EXPECT_GE(rsc_margin(idx, delta, w, 50), 0.0);
}

TEST(Rsc, UnsampledSpikeHasZeroLhs) {
    Matrix e = Matrix::Zero(5, 5);
    e(0, 0) = 1.0;
    const std::vector<SampleIndex> idx{{1, 1, 1}, {2, 3, -1}};
    const auto w = WeightPair::uniform(5, 5);
    const auto t = rsc_terms(idx, e, w, 2);
    EXPECT_EQ(t.lhs, 0.0);
    EXPECT_NEAR(t.rhs, (1.0 / 8.0) * (1.0 - 128.0 * 5.0 / std::sqrt(2.0)), 1e-12);
    EXPECT_NEAR(rsc_margin(idx, e, w, 2), -t.rhs, 1e-15);
}

TEST(Rsc, HandComputedTerms) {
    const auto w = WeightPair::uniform(2, 2);
    const std::vector<SampleIndex> idx{{0, 0, 1}, {1, 1, -1}, {0, 1, 1}, {1, 0, 1}};
    const Matrix ones = Matrix::Ones(2, 2);
    const auto t = rsc_terms(idx, ones, w, 4);
    EXPECT_NEAR(t.lhs, std::sqrt(4 * 4.0) / 2.0, 1e-14);
    EXPECT_NEAR(t.rhs, 2.0 / 8.0 * (1.0 - 128.0 / 2.0), 1e-14);
}

TEST(Rsc, Errors) {
    const auto w = WeightPair::uniform(3, 3);
    const std::vector<SampleIndex> idx{{0, 0, 1}};
    EXPECT_THROW(rsc_margin(idx, Matrix::Zero(3, 3), w, 1), std::domain_error);
    EXPECT_THROW(rsc_margin(idx, Matrix::Ones(3, 3), w, 2), DimensionMismatch);
    EXPECT_THROW(rsc_margin(idx, Matrix::Ones(3, 3), w, 0), std::invalid_argument);
}

TEST(NoiseOpnorm, ZeroNoise) {
    Rng rng(8);
    const auto w = WeightPair::uniform(4, 4);
    const auto idx = sample_indices(w, 30, rng);
    EXPECT_EQ(noise_opnorm(idx, Vector::Zero(30), w, 30), 0.0);
}

TEST(NoiseOpnorm, SingleObservation) {
    const auto w = WeightPair::uniform(2, 2);
    EXPECT_NEAR(noise_opnorm({{1, 0, -1}}, Vector::Ones(1), w, 1), 2.0, 1e-15);
    EXPECT_THROW(noise_opnorm({{1, 0, -1}}, Vector::Ones(2), w, 1), DimensionMismatch);
}

TEST(NoiseOpnorm, WeightedEntryScaling) {
    Vector r(2);
    r << 1.5, 0.5;
    const WeightPair w(r, Vector::Ones(2));
    // sqrt(4) / (sqrt(0.5) * 1) with xi = 3, n = 1.
    EXPECT_NEAR(noise_opnorm({{1, 1, 1}}, Vector::Constant(1, 3.0), w, 1), 3.0 * 2.0 / std::sqrt(0.5), 1e-12);
}

TEST(RscMonteCarlo, DeterministicAndCounted) {
    RscExperiment cfg;
    cfg.rows = cfg.cols = 20;
    cfg.n = 600;
    cfg.draws = 12;
    cfg.seed = 99;
    const auto w = WeightPair::uniform(20, 20);
    const auto a = rsc_monte_carlo(cfg, w);
    cfg.jobs = 3;
    const auto b = rsc_monte_carlo(cfg, w);
    EXPECT_EQ(a.margins, b.margins);
    EXPECT_EQ(a.n_samples_tested, 12);
    int neg = 0;
    for (double m : a.margins)
        neg += m < 0;
    EXPECT_EQ(a.violations, neg);
    EXPECT_GE(a.candidates_drawn, 12);
}

TEST(RscMonteCarlo, DirectionsAreUnitAndLowRank) {
    Rng rng(10);
    const auto w = WeightPair::uniform(15, 15);
    for (int k = 0; k < 10; ++k) {
        const Matrix d = random_rsc_direction(w, 2, rng);
        EXPECT_NEAR(to_gamma(d, w).norm(), 1.0, 1e-12);
        EXPECT_LE(numerical_rank(d), 2);
    }
}

TEST(NoiseNormMonteCarlo, ReferenceAndDeterminism) {
    NoiseNormExperiment cfg;
    cfg.rows = cfg.cols = 20;
    cfg.n = 500;
    cfg.repetitions = 8;
    cfg.seed = 5;
    const auto w = WeightPair::uniform(20, 20);
    const auto a = noise_norm_monte_carlo(cfg, w);
    cfg.jobs = 2;
    const auto b = noise_norm_monte_carlo(cfg, w);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NEAR(a.reference, 0.5 * std::sqrt(20.0 * std::log(20.0) / 500.0), 1e-15);
    EXPECT_GT(a.mean, 0.0);
}
