#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "wasgd/error.hpp"
#include "wasgd/linalg.hpp"
#include "wasgd/parallel.hpp"
#include "wasgd/rng.hpp"
#include "wasgd/stats.hpp"

using namespace wasgd;

namespace {

DenseMatrix random_spd(RngStream& rng, Eigen::Index n) {
    DenseMatrix g(n, n);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    return g * g.transpose() + 0.5 * DenseMatrix::Identity(n, n);
}

}  // namespace

TEST(Rng, GaussianMeanAndVariance) {
    RngStream rng(7, 0);
    Moments m;
    for (int i = 0; i < 1'000'000; ++i) m.push(gaussian_vector(rng, 1)(0));
    EXPECT_NEAR(m.mean, 0.0, 0.005);
    EXPECT_NEAR(m.variance(), 1.0, 0.01);
}

TEST(Rng, SameSeedAndStreamRepeat) {
    RngStream a(42, 3), b(42, 3);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, DistinctStreamsAreUncorrelated) {
    RngStream a(42, 0), b(42, 1), c(43, 0);
    double ab = 0.0, ac = 0.0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const double x = a.normal();
        ab += x * b.normal();
        ac += x * c.normal();
    }
    // Sample correlation of independent normals has sd 1/sqrt(n).
    EXPECT_LT(std::abs(ab / n), 5.0 / std::sqrt(double(n)));
    EXPECT_LT(std::abs(ac / n), 5.0 / std::sqrt(double(n)));
}

TEST(Rng, StreamDoesNotDependOnOtherStreamsDraws) {
    RngStream fresh(9, 5);
    const double first = fresh.normal();
    RngStream other(9, 4);
    for (int i = 0; i < 100; ++i) other.normal();
    RngStream again(9, 5);
    EXPECT_EQ(first, again.normal());
}

TEST(Linalg, IdentityInverse) {
    const DenseMatrix inv = invert_spd(DenseMatrix::Identity(3, 3), 0.0);
    EXPECT_TRUE(inv.isApprox(DenseMatrix::Identity(3, 3), 1e-15));
}

TEST(Linalg, DiagonalInverse) {
    DenseMatrix m = DenseMatrix::Zero(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = 4.0;
    const DenseMatrix inv = invert_spd(m, 0.0);
    EXPECT_DOUBLE_EQ(inv(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(inv(1, 1), 0.25);
    EXPECT_DOUBLE_EQ(inv(0, 1), 0.0);
}

TEST(Linalg, MultiplyBackOnRandomSpd) {
    RngStream rng(11, 0);
    for (Eigen::Index n : {1, 2, 5, 10, 20}) {
        const DenseMatrix m = random_spd(rng, n);
        const DenseMatrix inv = invert_spd(m, 0.0);
        EXPECT_LT((m * inv - DenseMatrix::Identity(n, n)).norm(), 1e-10) << "n=" << n;
    }
}

TEST(Linalg, DoubleInverseIsIdentity) {
    RngStream rng(12, 0);
    for (Eigen::Index n = 1; n <= 50; n += 7) {
        const DenseMatrix m = random_spd(rng, n);
        const DenseMatrix back = invert_spd(invert_spd(m, 0.0), 0.0);
        EXPECT_LT((back - m).norm() / m.norm(), 1e-9) << "n=" << n;
    }
}

TEST(Linalg, InverseStaysSymmetric) {
    RngStream rng(13, 0);
    const DenseMatrix inv = invert_spd(random_spd(rng, 8), 0.0);
    EXPECT_LT((inv - inv.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Linalg, RidgeRescuesSingularMatrix) {
    DenseMatrix m = DenseMatrix::Zero(2, 2);
    m(0, 0) = 1.0;
    EXPECT_THROW(invert_spd(m, 0.0), NotSpd);
    const DenseMatrix inv = invert_spd(m, 1e-8);
    EXPECT_NEAR(inv(0, 0), 1.0 / (1.0 + 1e-8), 1e-12);
    EXPECT_NEAR(inv(1, 1), 1e8, 1.0);
}

TEST(Linalg, RidgeUnusedForWellConditioned) {
    DenseMatrix m = DenseMatrix::Identity(2, 2) * 3.0;
    EXPECT_DOUBLE_EQ(invert_spd(m, 1e-8)(0, 0), 1.0 / 3.0);
}

TEST(Linalg, IndefiniteThrows) {
    DenseMatrix m = DenseMatrix::Identity(2, 2);
    m(1, 1) = -1.0;
    EXPECT_THROW(invert_spd(m, 1e-8), NotSpd);
    EXPECT_THROW(invert_spd(DenseMatrix(2, 3), 0.0), NotSpd);
}

TEST(Linalg, SolveMatchesInverse) {
    RngStream rng(14, 0);
    const DenseMatrix m = random_spd(rng, 6);
    const Vector rhs = gaussian_vector(rng, 6);
    EXPECT_LT((solve_spd(m, rhs, 0.0) - invert_spd(m, 0.0) * rhs).norm(), 1e-10);
}

TEST(Stats, KsOfNormalQuantiles) {
    std::vector<double> sample;
    for (int i = 1; i <= 100; ++i) sample.push_back(normal_quantile((i - 0.5) / 100.0));
    EXPECT_LT(ks_distance(sample), 0.01);
}

TEST(Stats, KsOfConstantSample) {
    const std::vector<double> zeros = {0.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(ks_distance(zeros), 0.5);
    const std::vector<double> one = {0.0};
    EXPECT_DOUBLE_EQ(ks_distance(one), 0.5);
}

TEST(Stats, NormalCdfAndQuantile) {
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-10);
    EXPECT_THROW(normal_quantile(1.0), ConfigError);
}

TEST(Stats, EmpiricalQuantileInterpolates) {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(empirical_quantile(xs, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(empirical_quantile(xs, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(empirical_quantile(xs, 0.5), 2.5);
}

TEST(Stats, MomentsMatchTwoPass) {
    const std::vector<double> xs = {1.0, 4.0, 9.0, 16.0, 25.0};
    const Moments m = moments_of(xs);
    EXPECT_DOUBLE_EQ(m.mean, 11.0);
    double ss = 0.0;
    for (double x : xs) ss += (x - 11.0) * (x - 11.0);
    EXPECT_NEAR(m.variance(), ss / 4.0, 1e-12);
    EXPECT_NEAR(m.variance(), 93.5, 1e-12);
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
    auto run = [](std::size_t workers) {
        std::vector<double> seen;
        double sum = 0.0;
        ordered_map_reduce(
            300, workers, [](std::size_t i) { return RngStream(5, i).normal(); },
            [&](std::size_t i, double v) {
                EXPECT_EQ(i, seen.size());
                seen.push_back(v);
                sum += v;
            });
        return std::make_pair(seen, sum);
    };
    const auto serial = run(1);
    const auto parallel = run(4);
    EXPECT_EQ(serial.first, parallel.first);
    EXPECT_EQ(serial.second, parallel.second);
}

TEST(Parallel, LowestFailingIndexIsRethrown) {
    EXPECT_THROW(ordered_map_reduce(
                     10, 3,
                     [](std::size_t i) -> int {
                         if (i == 4) throw ConfigError("four");
                         if (i == 7) throw NumericalError("seven");
                         return 0;
                     },
                     [](std::size_t, int) {}),
                 ConfigError);
}
