#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wasgd/averaging.hpp"
#include "wasgd/error.hpp"
#include "wasgd/optimal_weights.hpp"
#include "wasgd/stats.hpp"

using namespace wasgd;

namespace {

std::vector<double> step_sizes(const StepSchedule& s, std::size_t n) {
    std::vector<double> eta(n);
    for (std::size_t i = 0; i < n; ++i) eta[i] = s.step(i + 1);
    return eta;
}

}  // namespace

TEST(Blue, IdentityAndDiagonal) {
    const WeightSolution id = blue_weights(DenseMatrix::Identity(3, 3));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(id.c(i), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(id.predicted_mse, 1.0 / 3.0, 1e-12);

    DenseMatrix d = DenseMatrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 2.0;
    const WeightSolution w = blue_weights(d);
    EXPECT_NEAR(w.c(0), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(w.c(1), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(w.predicted_mse, 2.0 / 3.0, 1e-12);
}

TEST(Blue, ScaleInvariantAndSumsToOne) {
    RngStream rng(3, 0);
    DenseMatrix g(6, 6);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    const DenseMatrix sigma = g * g.transpose() + DenseMatrix::Identity(6, 6);
    const WeightSolution a = blue_weights(sigma);
    EXPECT_NEAR(a.c.sum(), 1.0, 1e-10);
    for (double k : {1e-6, 0.5, 7.0, 1e6}) {
        const WeightSolution b = blue_weights(DenseMatrix(k * sigma));
        EXPECT_LT((a.c - b.c).cwiseAbs().maxCoeff(), 1e-12) << k;
    }
}

TEST(Blue, NotSpd) {
    DenseMatrix m = DenseMatrix::Identity(2, 2);
    m(1, 1) = -1.0;
    EXPECT_THROW(blue_weights(m), NotSpd);
}

TEST(ClosedForm, MeanModelEqualsAdaptiveWeights) {
    for (double alpha : {0.505, 0.8}) {
        const StepSchedule s{1.0, alpha, std::nullopt};
        for (std::size_t n : {1, 2, 20, 400}) {
            const std::vector<double> ones(n, 1.0);
            const WeightSolution w = closed_form_weights(ones, s);
            const auto adaptive = oracle::adaptive_weights(alpha, n);
            for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(w.c(Eigen::Index(i)), adaptive[i], 1e-13);
            EXPECT_NEAR(w.predicted_mse, 1.0 / double(n), 1e-15);
            EXPECT_NEAR(w.c.sum(), 1.0, 1e-10);
        }
    }
}

TEST(ClosedForm, HandExample) {
    const StepSchedule s{1.0, 0.5, 0.25};
    const std::vector<double> a_sq = {4.0, 1.0, 1.0};
    const WeightSolution w = closed_form_weights(a_sq, s);
    const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
    EXPECT_NEAR(w.c(0), (1.0 + 4.0 - r2) / 6.0, 1e-14);
    EXPECT_NEAR(w.c(1), (r2 + 1.0 - r3) / 6.0, 1e-14);
    EXPECT_NEAR(w.c(2), r3 / 6.0, 1e-14);
    EXPECT_NEAR(w.c.sum(), 1.0, 1e-12);
    EXPECT_NEAR(w.predicted_mse, 1.0 / 6.0, 1e-15);
}

TEST(ClosedForm, Preconditions) {
    const StepSchedule s{1.0, 0.5, std::nullopt};
    const std::vector<double> zero = {1.0, 0.0};
    EXPECT_THROW(closed_form_weights(zero, s), ZeroRegressor);
    const std::vector<double> mismatch = {4.0, 1.0};
    EXPECT_THROW(closed_form_weights(mismatch, s), ConfigError);
}

TEST(ClosedForm, MatchesBlueOnExactCovariance) {
    RngStream rng(5, 0);
    const std::size_t n = 30;
    std::vector<double> a_sq(n);
    for (double& v : a_sq) v = std::pow(rng.normal(), 2) + 0.1;
    const StepSchedule s{0.5, 0.6, 1.0 / a_sq[0]};
    const DenseMatrix sigma = oracle::exact_scalar_sigma(a_sq, step_sizes(s, n), 1.3, 2.0);
    const WeightSolution exact = blue_weights(sigma, 0.0);
    const WeightSolution closed = closed_form_weights(a_sq, s, 1.3);
    EXPECT_LT((exact.c - closed.c).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(exact.predicted_mse, closed.predicted_mse, 1e-10);
}

TEST(WithInit, HandExampleAndSum) {
    const StepSchedule s{1.0, 0.5, std::nullopt};
    const std::vector<double> ones = {1.0, 1.0};
    const WeightSolution w = closed_form_weights_with_init(ones, s, 1.0, 1.0);
    ASSERT_EQ(w.c.size(), 3);
    EXPECT_TRUE(w.includes_initial);
    EXPECT_NEAR(w.c(0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(w.c(1), (1.0 + 1.0 - std::sqrt(2.0)) / 3.0, 1e-15);
    EXPECT_NEAR(w.c(2), std::sqrt(2.0) / 3.0, 1e-15);
    EXPECT_NEAR(w.c.sum(), 1.0, 1e-12);
    EXPECT_THROW(closed_form_weights_with_init(ones, s, 1.0, 0.0), ZeroInitError);
}

TEST(WithInit, ReducesWhenEtaOneMatches) {
    const StepSchedule s{1.0, 0.7, 0.5};
    const std::vector<double> a_sq = {2.0, 0.5, 1.5, 3.0};
    const double sigma = 0.8, e = 0.4;
    const WeightSolution with = closed_form_weights_with_init(a_sq, s, sigma, e);
    const WeightSolution without = closed_form_weights(a_sq, s, sigma);
    const double ratio2 = (sigma / e) * (sigma / e);
    const double s_n = ratio2 + 7.0;
    EXPECT_NEAR(with.c(0), ratio2 / s_n, 1e-14);
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(with.c(i + 1), without.c(i) * 7.0 / s_n, 1e-14);
}

TEST(WithInit, LargeInitErrorRecoversReducedProblem) {
    const StepSchedule s{1.0, 0.6, std::nullopt};
    const std::vector<double> a_sq = {2.0, 0.5, 1.5};
    const WeightSolution w = closed_form_weights_with_init(a_sq, s, 1.0, 1e9);
    EXPECT_NEAR(w.c(0), (2.0 - 1.0) / 4.0, 1e-12);
}

TEST(WithInit, MatchesBlueWithInitialPoint) {
    // With x_0 included, the BLUE over (x_0, ..., x_n) uses E[e_i e_j] where
    // e_0 is the fixed initial error.
    const std::size_t n = 12;
    const std::vector<double> a_sq(n, 1.0);
    const StepSchedule s{0.7, 0.6, std::nullopt};
    const double sigma = 1.0, e0 = 1.5;
    std::vector<double> eta = step_sizes(s, n);
    // Prepend a pseudo-step with eta = 0 so that index 0 carries e_0.
    std::vector<double> a_ext = {1.0};
    a_ext.insert(a_ext.end(), a_sq.begin(), a_sq.end());
    eta.insert(eta.begin(), 0.0);
    const DenseMatrix sigma_ext = oracle::exact_scalar_sigma(a_ext, eta, sigma, e0);
    const WeightSolution exact = blue_weights(sigma_ext, 0.0);
    const WeightSolution closed = closed_form_weights_with_init(a_sq, s, sigma, e0);
    EXPECT_LT((exact.c - closed.c).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(TwoStep, UsesFirstTenthForPlugIns) {
    const StepSchedule s{1.0, 0.6, std::nullopt};
    std::vector<Observation> obs;
    std::vector<double> iterates;
    for (int i = 0; i < 20; ++i) {
        obs.push_back({Vector::Ones(1), i % 2 == 0 ? 1.0 : 3.0});
        iterates.push_back(i < 2 ? 2.0 : 50.0);
    }
    const TwoStepWeights w = two_step_init_weights(obs, iterates, 0.0, s);
    EXPECT_EQ(w.split, 2u);
    EXPECT_DOUBLE_EQ(w.x_star_hat, 2.0);
    EXPECT_DOUBLE_EQ(w.sigma_hat, 1.0);
    const WeightSolution direct = closed_form_weights_with_init(std::vector<double>(20, 1.0), s, 1.0, -2.0);
    EXPECT_LT((w.weights.c - direct.c).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(two_step_init_weights(std::span(obs).first(5), std::span(iterates).first(5), 0.0, s), ConfigError);
}

TEST(EstimateSigma, MeanModelDiagonalMatchesExactRecursion) {
    const StepSchedule s{1.0, 0.8, std::nullopt};
    const std::size_t n = 20, reps = 20'000;
    const CovarianceEstimate est = estimate_sigma(ModelSpec::mean(0.0), s, n, reps, 17);
    const DenseMatrix exact = oracle::exact_scalar_sigma(std::vector<double>(n, 1.0), step_sizes(s, n), 1.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = exact(Eigen::Index(i), Eigen::Index(i));
        // Var of a squared normal is 2 v^2.
        const double se = std::sqrt(2.0 * v * v / double(reps));
        EXPECT_NEAR(est.sigma_hat(Eigen::Index(i), Eigen::Index(i)), v, 3.0 * se) << "i=" << i + 1;
    }
    EXPECT_TRUE((est.sigma_hat.array() > 0.0).all());
    EXPECT_EQ(est.a_sq.size(), Eigen::Index(n));
    EXPECT_LT((est.sigma_hat - est.sigma_hat.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EstimateSigma, StandardErrorHalvesWithDoubleReps) {
    const StepSchedule s{1.0, 0.8, std::nullopt};
    const std::size_t n = 10;
    const ModelSpec model = ModelSpec::mean(0.0);
    const DenseMatrix exact = oracle::exact_scalar_sigma(std::vector<double>(n, 1.0), step_sizes(s, n), 1.0, 0.0);
    // Root-mean-square error over 40 independent estimates, at R and 2R reps.
    auto rms = [&](std::size_t reps) {
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            sum += (estimate_sigma(model, s, n, reps, 1000 + seed + reps).sigma_hat - exact).squaredNorm();
        }
        return std::sqrt(sum / 40.0);
    };
    const double ratio = rms(4000) / rms(2000);
    EXPECT_GE(ratio, 0.6);
    EXPECT_LE(ratio, 0.85);
}

TEST(EstimateSigma, IndependentOfWorkers) {
    const StepSchedule s{1.0, 0.6, std::nullopt};
    const ModelSpec model = ModelSpec::linear(Vector::Ones(2));
    const auto a = estimate_sigma(model, s, 15, 1000, 4, 1);
    const auto b = estimate_sigma(model, s, 15, 1000, 4, 3);
    EXPECT_EQ(a.sigma_hat, b.sigma_hat);
}

TEST(EstimateSigma, BlueMatchesClosedFormOnMeanModel) {
    const StepSchedule s{1.0, 0.8, std::nullopt};
    const std::size_t n = 20;
    const WeightSolution mc = blue_weights(estimate_sigma(ModelSpec::mean(0.0), s, n, 100'000, 23));
    const WeightSolution closed = closed_form_weights(std::vector<double>(n, 1.0), s);
    EXPECT_LT((mc.c - closed.c).cwiseAbs().maxCoeff(), 0.02);
}

TEST(ThetaDiag, ExactSigmaIsDiagonalized) {
    const StepSchedule s{1.0, 0.505, std::nullopt};
    const std::size_t n = 10;
    const std::vector<double> ones(n, 1.0);
    CovarianceEstimate exact{n, oracle::exact_scalar_sigma(ones, step_sizes(s, n), 1.0, 0.0), 0, {}};
    EXPECT_LT(theta_diag_check(ones, s, exact, 1.0), 1e-10);

    // General regressors and eta_1 != a_1^-2 with a non-zero start.
    RngStream rng(8, 0);
    std::vector<double> a_sq(n);
    for (double& v : a_sq) v = std::pow(rng.normal(), 2) + 0.2;
    const StepSchedule g{0.4, 0.7, std::nullopt};
    CovarianceEstimate general{n, oracle::exact_scalar_sigma(a_sq, step_sizes(g, n), 0.7, 1.5), 0, {}};
    EXPECT_LT(theta_diag_check(a_sq, g, general, 0.7), 1e-10);
}

TEST(ThetaDiag, MonteCarloAndTrivialCase) {
    const StepSchedule s{1.0, 0.505, std::nullopt};
    const std::size_t n = 20;
    const CovarianceEstimate est = estimate_sigma(ModelSpec::mean(0.0), s, n, 100'000, 31);
    // Each off-diagonal entry carries Monte-Carlo noise of about
    // eta_i eta_j / (eta_n^2 sqrt(reps)), roughly 0.045 for (1, 2).
    EXPECT_LT(theta_diag_check(std::vector<double>(n, 1.0), s, est, 1.0), 0.15);
    CovarianceEstimate one{1, DenseMatrix::Constant(1, 1, 2.0), 0, {}};
    EXPECT_EQ(theta_diag_check(std::vector<double>{1.0}, s, one, 1.0), 0.0);
}

TEST(Oracle, ExpectileLastWeightLargest) {
    const StepSchedule s{1.0, 0.505, std::nullopt};
    for (double rho : {0.8, 0.5}) {
        const WeightSolution w = oracle_weights_expectile(rho, s, 50, 50'000, 1);
        Eigen::Index argmax = 0;
        w.c.maxCoeff(&argmax);
        EXPECT_EQ(argmax, 49) << "rho=" << rho;
        EXPECT_NEAR(w.c.sum(), 1.0, 1e-10);
    }
    EXPECT_THROW(oracle_weights_expectile(0.8, s, 201, 1000, 1), ConfigError);
}

TEST(Oracle, RepeatRunsAgree) {
    const StepSchedule s{1.0, 0.505, std::nullopt};
    const WeightSolution a = oracle_weights_expectile(0.8, s, 50, 50'000, 1);
    const WeightSolution b = oracle_weights_expectile(0.8, s, 50, 50'000, 2);
    EXPECT_LT((a.c - b.c).cwiseAbs().maxCoeff(), 0.15 * a.c.cwiseAbs().maxCoeff());
}

TEST(ClosedFormAverager, MeanModelEqualsSampleMean) {
    const ModelSpec model = ModelSpec::mean(2.0);
    const StepSchedule s{1.0, 0.505, std::nullopt};
    class Means final : public StreamSink {
      public:
        void push(const StepRecord& r) override { sum += r.observation.b; }
        double sum = 0.0;
    } means;
    ClosedFormAverager optimal(s);
    Averager adaptive(AdaptiveScheme{0.505}, 1);
    StreamSink* sinks[] = {&optimal, &adaptive, &means};
    RngStream rng(3, 0);
    run_trajectory(s, model, 1000, rng, sinks, Vector::Constant(1, -5.0));
    EXPECT_NEAR(optimal.estimate()(0), means.sum / 1000.0, 1e-10);
    EXPECT_NEAR(adaptive.estimate()(0), means.sum / 1000.0, 1e-10);
}

TEST(ClosedFormAverager, MatchesMaterializedWeights) {
    RngStream rng(4, 0);
    const std::size_t n = 50;
    std::vector<double> a_sq;
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < n; ++i) {
        obs.push_back({Vector::Constant(1, 0.5 + rng.uniform()), rng.normal()});
        a_sq.push_back(obs.back().a(0) * obs.back().a(0));
    }
    const StepSchedule s{0.8, 0.6, 1.0 / a_sq[0]};
    ClosedFormAverager avg(s);
    Vector x = Vector::Zero(1);
    double expected = 0.0;
    const WeightSolution w = closed_form_weights(a_sq, s);
    for (std::size_t i = 1; i <= n; ++i) {
        const Vector prev = x;
        x = Vector::Constant(1, rng.normal());
        avg.push({i, prev, x, obs[i - 1]});
        expected += w.c(Eigen::Index(i) - 1) * x(0);
    }
    EXPECT_NEAR(avg.estimate()(0), expected, 1e-12);
}

TEST(Optimality, ClosedFormBeatsBuiltinSchemesOnMeanModel) {
    const StepSchedule s{1.0, 0.8, std::nullopt};
    const ModelSpec model = ModelSpec::mean(0.0);
    const std::size_t n = 20, reps = 10'000;
    const double predicted = closed_form_weights(std::vector<double>(n, 1.0), s).predicted_mse;
    const std::vector<SchemeConfig> schemes = {UniformScheme{}, PolyDecayScheme{3.0}, SuffixScheme{0.5},
                                               AdaptiveScheme{0.6}};
    std::vector<Moments> errors(schemes.size());
    for (std::size_t r = 0; r < reps; ++r) {
        std::vector<std::unique_ptr<Averager>> avgs;
        std::vector<StreamSink*> sinks;
        for (const auto& sc : schemes) {
            avgs.push_back(std::make_unique<Averager>(sc, 1, n));
            sinks.push_back(avgs.back().get());
        }
        RngStream rng(77, r);
        run_trajectory(s, model, n, rng, sinks);
        for (std::size_t k = 0; k < schemes.size(); ++k) errors[k].push(avgs[k]->estimate().squaredNorm());
    }
    for (std::size_t k = 0; k < schemes.size(); ++k) {
        const double se = std::sqrt(errors[k].variance() / double(reps));
        EXPECT_LE(predicted, errors[k].mean - 2.0 * se) << scheme_name(schemes[k]);
    }
}
