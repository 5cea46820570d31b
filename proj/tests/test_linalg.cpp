#include "test_util.hpp"

#include "wmc/linalg.hpp"

#include <atomic>
#include <set>

using namespace wmc;
using wmc::test::random_rank;

TEST(Rng, SameSeedSameStream) {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.bits(), b.bits());
        EXPECT_EQ(a.normal(), b.normal());
        EXPECT_EQ(a.laplace(), b.laplace());
    }
}

TEST(Rng, UniformRange) {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, MomentsOfNormalAndLaplace) {
    Rng rng(2);
    const int n = 200000;
    double sn = 0, sn2 = 0, sl = 0, sl2 = 0, sl4 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal(), l = rng.laplace();
        sn += z;
        sn2 += z * z;
        sl += l;
        sl2 += l * l;
        sl4 += l * l * l * l;
    }
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.015);
    EXPECT_NEAR(sl / n, 0.0, 0.01);
    EXPECT_NEAR(sl2 / n, 1.0, 0.02);
    // Laplace with unit variance has fourth moment 6.
    EXPECT_NEAR(sl4 / n, 6.0, 0.4);
}

TEST(Rng, DerivedSeedsAreDistinct) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t d : {40, 60, 80})
        for (std::uint64_t n = 100; n < 140; ++n)
            for (std::uint64_t t = 0; t < 25; ++t)
                ASSERT_TRUE(seen.insert(derive_seed(7, {d, n, t})).second);
    EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
    EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
    EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(8, {1, 2}));
}

TEST(Svd, Reconstructs) {
    Rng rng(3);
    const Matrix m = rng.gaussian(7, 4);
    const Svd s = thin_svd(m);
    EXPECT_LE((s.U * s.s.asDiagonal() * s.V.transpose() - m).norm(), 1e-12);
    for (Index i = 1; i < s.s.size(); ++i)
        EXPECT_GE(s.s(i - 1), s.s(i));
    EXPECT_NEAR(nuclear_norm(m), s.s.sum(), 1e-12);
    EXPECT_NEAR(operator_norm(m), s.s(0), 1e-12);
}

TEST(Svd, NonFiniteIsAnError) {
    Matrix m = Matrix::Ones(3, 3);
    m(0, 2) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(thin_svd(m), NumericalError);
}

TEST(NumericalRank, RelativeTolerance) {
    Rng rng(4);
    for (Index r = 1; r <= 5; ++r)
        EXPECT_EQ(numerical_rank(random_rank(9, 8, r, rng)), r);
    Vector s(3);
    s << 1.0, 2e-10, 0.5e-10;
    EXPECT_EQ(numerical_rank(s), 2);
    EXPECT_EQ(numerical_rank(Matrix(Matrix::Zero(3, 3))), 0);
}

TEST(Haar, OrthogonalWithPositiveConvention) {
    Rng rng(5);
    const Matrix q = haar_orthogonal(12, rng);
    EXPECT_LE((q.transpose() * q - Matrix::Identity(12, 12)).norm(), 1e-12);
}

TEST(Haar, FirstColumnIsUniformOnSphere) {
    // For a Haar orthogonal matrix each entry has mean 0 and variance 1/d.
    Rng rng(6);
    const int reps = 4000;
    const Index d = 5;
    double s = 0, s2 = 0;
    for (int k = 0; k < reps; ++k) {
        const Matrix q = haar_orthogonal(d, rng);
        s += q(0, 0);
        s2 += q(0, 0) * q(0, 0);
    }
    EXPECT_NEAR(s / reps, 0.0, 0.03);
    EXPECT_NEAR(s2 / reps, 1.0 / double(d), 0.015);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
    for (unsigned jobs : {1u, 2u, 4u}) {
        std::vector<std::atomic<int>> hits(257);
        parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
        for (auto &h : hits)
            EXPECT_EQ(h.load(), 1);
    }
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 7)
                                      throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
