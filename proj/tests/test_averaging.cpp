#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wasgd/averaging.hpp"
#include "wasgd/error.hpp"

using namespace wasgd;

namespace {

const StepSchedule kSchedule{1.0, 0.505, std::nullopt};

std::vector<SchemeConfig> builtin_schemes() {
    return {UniformScheme{},   PolyDecayScheme{3.0},    PolyDecayScheme{1.0}, SuffixScheme{0.5},
            SuffixScheme{0.3}, OnlineSuffixScheme{},    AdaptiveScheme{0.505}, AdaptiveScheme{0.8},
            LastIterateScheme{}};
}

DenseMatrix random_iterates(std::uint64_t seed, Eigen::Index d, std::size_t n) {
    RngStream rng(seed, 0);
    DenseMatrix xs(d, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] = 3.0 + rng.normal();
    return xs;
}

Vector weighted(const DenseMatrix& xs, const std::vector<double>& w) {
    Vector out = Vector::Zero(xs.rows());
    for (std::size_t i = 0; i < w.size(); ++i) out += w[i] * xs.col(static_cast<Eigen::Index>(i));
    return out;
}

double relative_error(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

void expect_weights(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "i=" << i + 1;
}

}  // namespace

TEST(ParseScheme, AllForms) {
    EXPECT_TRUE(std::holds_alternative<UniformScheme>(parse_scheme("uniform", 0.505)));
    EXPECT_DOUBLE_EQ(std::get<PolyDecayScheme>(parse_scheme("poly:gamma=3", 0.505)).gamma, 3.0);
    EXPECT_DOUBLE_EQ(std::get<SuffixScheme>(parse_scheme("suffix:kappa=0.25", 0.505)).kappa, 0.25);
    EXPECT_TRUE(std::holds_alternative<OnlineSuffixScheme>(parse_scheme("online-suffix", 0.505)));
    EXPECT_DOUBLE_EQ(std::get<AdaptiveScheme>(parse_scheme("adaptive", 0.6)).alpha, 0.6);
    EXPECT_DOUBLE_EQ(std::get<AdaptiveScheme>(parse_scheme("adaptive:alpha=0.8", 0.6)).alpha, 0.8);
    EXPECT_TRUE(std::holds_alternative<LastIterateScheme>(parse_scheme("last", 0.505)));
    EXPECT_EQ(scheme_name(parse_scheme("poly:gamma=3", 0.505)), "poly:gamma=3");
    EXPECT_EQ(scheme_name(parse_scheme("suffix:kappa=0.5", 0.505)), "suffix:kappa=0.5");
    EXPECT_EQ(scheme_name(parse_scheme("adaptive", 0.505)), "adaptive:alpha=0.505");
}

TEST(ParseScheme, Rejects) {
    for (const char* bad : {"", "median", "poly:gamma=0.5", "poly:kappa=3", "suffix:kappa=1", "suffix:kappa=0",
                            "adaptive:alpha=1.2", "uniform:x=1", "poly:gamma=abc", "explicit:weights.csv"}) {
        EXPECT_THROW(parse_scheme(bad, 0.505), ConfigError) << bad;
    }
    EXPECT_THROW(parse_scheme("explicit:@/nonexistent/w.csv", 0.505), ConfigError);
}

TEST(ParseScheme, ExplicitFromFile) {
    const std::string path = ::testing::TempDir() + "/weights.csv";
    {
        std::ofstream out(path);
        out << "# weights\n0.25\n\n0.25\n0.5\n";
    }
    const SchemeConfig s = parse_scheme("explicit:@" + path, 0.505);
    const auto& ex = std::get<ExplicitScheme>(s);
    EXPECT_EQ(ex.weights, (std::vector<double>{0.25, 0.25, 0.5}));
    EXPECT_EQ(materialize_weights(s, 3).w, ex.weights);
    EXPECT_THROW(materialize_weights(s, 4), ConfigError);
}

TEST(Weights, SpecExamples) {
    expect_weights(materialize_weights(UniformScheme{}, 4).w, {0.25, 0.25, 0.25, 0.25}, 1e-15);
    expect_weights(materialize_weights(PolyDecayScheme{3.0}, 2).w, {0.2, 0.8}, 1e-15);
    const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
    expect_weights(materialize_weights(AdaptiveScheme{0.5}, 3).w, {(2 - r2) / 3, (1 + r2 - r3) / 3, r3 / 3}, 1e-14);
    expect_weights(materialize_weights(AdaptiveScheme{0.5}, 3).w, {0.19526, 0.22739, 0.57735}, 1e-5);
}

TEST(Weights, MatchIndependentFormulas) {
    for (std::size_t n : {1, 2, 3, 7, 64, 333}) {
        expect_weights(materialize_weights(PolyDecayScheme{3.0}, n).w, oracle::poly_weights(3.0, n), 1e-13);
        expect_weights(materialize_weights(PolyDecayScheme{2.5}, n).w, oracle::poly_weights_by_recursion(2.5, n), 1e-13);
        expect_weights(materialize_weights(AdaptiveScheme{0.7}, n).w, oracle::adaptive_weights(0.7, n), 1e-13);
        expect_weights(materialize_weights(SuffixScheme{0.3}, n).w, oracle::suffix_weights(0.3, n), 0.0);
        expect_weights(materialize_weights(OnlineSuffixScheme{}, n).w, oracle::online_suffix_weights(n), 1e-15);
    }
}

TEST(Weights, SumToOneAndBounded) {
    for (const auto& scheme : builtin_schemes()) {
        for (std::size_t n : {1, 2, 5, 17, 100, 1000, 4096, 100'000}) {
            const WeightVector w = materialize_weights(scheme, n);
            EXPECT_NEAR(w.sum(), 1.0, 1e-12) << scheme_name(scheme) << " n=" << n;
            double bound = 1.0;
            if (const auto* p = std::get_if<PolyDecayScheme>(&scheme)) bound = p->gamma + 1.0;
            if (const auto* s = std::get_if<SuffixScheme>(&scheme)) bound = 1.0 / s->kappa + 1.0;
            if (std::holds_alternative<OnlineSuffixScheme>(scheme)) bound = 2.0 + 1.0;
            if (std::holds_alternative<LastIterateScheme>(scheme)) continue;
            const std::size_t checked = std::holds_alternative<AdaptiveScheme>(scheme) ? n - 1 : n;
            for (std::size_t i = 0; i < checked; ++i) {
                ASSERT_LE(std::abs(w.w[i]), bound / double(n) * (1 + 1e-12)) << scheme_name(scheme) << " n=" << n;
            }
        }
    }
}

TEST(Weights, AdaptiveTelescopes) {
    for (double alpha : {0.505, 0.6, 0.8, 0.99}) {
        for (std::size_t n : {2, 10, 1000, 100'000}) {
            EXPECT_NEAR(materialize_weights(AdaptiveScheme{alpha}, n).sum(), 1.0, 1e-12);
        }
    }
}

TEST(Weights, SuffixLengthRounding) {
    EXPECT_EQ(suffix_length(0.5, 4), 2u);
    EXPECT_EQ(suffix_length(0.3, 10), 3u);  // 0.3 * 10 is 3.0000000000000004
    EXPECT_EQ(suffix_length(0.5, 5), 3u);
    EXPECT_EQ(suffix_length(0.01, 5), 1u);
    EXPECT_EQ(suffix_length(0.7, 10), 7u);
}

TEST(OnlineSuffix, OffsetsAndWindowFraction) {
    EXPECT_EQ(online_suffix_offset(1), 0u);
    EXPECT_EQ(online_suffix_offset(2), 0u);
    EXPECT_EQ(online_suffix_offset(3), 1u);
    EXPECT_EQ(online_suffix_offset(4), 1u);
    EXPECT_EQ(online_suffix_offset(5), 2u);
    EXPECT_EQ(online_suffix_offset(8), 2u);
    EXPECT_EQ(online_suffix_offset(9), 4u);
    for (std::size_t t = 3; t <= 100'000; ++t) {
        const double fraction = double(t - online_suffix_offset(t)) / double(t);
        ASSERT_GT(fraction, 0.5) << t;
        ASSERT_LE(fraction, 0.75) << t;
    }
}

TEST(OnlineSuffix, HandExamples) {
    Averager avg(OnlineSuffixScheme{}, 1);
    std::vector<double> xs = {1, 10, 100, 1000, 10000};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        avg.update(i + 1, Vector::Constant(1, xs[i]));
        if (i + 1 == 3) EXPECT_DOUBLE_EQ(avg.estimate()(0), (10.0 + 100.0) / 2.0);
    }
    EXPECT_DOUBLE_EQ(avg.estimate()(0), (100.0 + 1000.0 + 10000.0) / 3.0);
}

TEST(Adaptive, TwoStepRecursionByHand) {
    Averager avg(AdaptiveScheme{0.5}, 1);
    avg.update(1, Vector::Constant(1, 1.0));
    avg.update(2, Vector::Constant(1, 0.0));
    EXPECT_NEAR(avg.estimate()(0), (2.0 - std::sqrt(2.0)) / 2.0, 1e-15);
    Averager avg2(AdaptiveScheme{0.5}, 1);
    avg2.update(1, Vector::Constant(1, 0.0));
    avg2.update(2, Vector::Constant(1, 1.0));
    EXPECT_NEAR(avg2.estimate()(0), std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(Averager, RecursionMatchesDefinition) {
    std::vector<std::size_t> horizons(64);
    std::iota(horizons.begin(), horizons.end(), 1);
    horizons.push_back(1000);
    horizons.push_back(2000);
    for (const auto& scheme : builtin_schemes()) {
        for (std::size_t n : horizons) {
            const DenseMatrix xs = random_iterates(n, 3, n);
            Averager avg(scheme, 3, n);
            for (std::size_t i = 1; i <= n; ++i) avg.update(i, xs.col(static_cast<Eigen::Index>(i) - 1));
            const Vector expected = weighted(xs, materialize_weights(scheme, n).w);
            ASSERT_LT(relative_error(avg.estimate(), expected), 1e-10) << scheme_name(scheme) << " n=" << n;
        }
    }
}

TEST(Averager, StreamingEstimateAtEveryPrefix) {
    const std::size_t n = 300;
    const DenseMatrix xs = random_iterates(99, 2, n);
    for (const auto& scheme : builtin_schemes()) {
        Averager avg(scheme, 2, n);
        for (std::size_t t = 1; t <= n; ++t) {
            avg.update(t, xs.col(static_cast<Eigen::Index>(t) - 1));
            const Vector expected = weighted(xs.leftCols(static_cast<Eigen::Index>(t)), materialize_weights(scheme, t).w);
            ASSERT_LT(relative_error(avg.estimate(), expected), 1e-10) << scheme_name(scheme) << " t=" << t;
        }
    }
}

TEST(Averager, ExplicitWeights) {
    const ExplicitScheme ex{{0.1, 0.2, 0.7}, "inline"};
    Averager avg(ex, 1);
    for (std::size_t i = 1; i <= 3; ++i) avg.update(i, Vector::Constant(1, double(i)));
    EXPECT_NEAR(avg.estimate()(0), 0.1 + 0.4 + 2.1, 1e-15);
    EXPECT_THROW(avg.update(4, Vector::Zero(1)), InsufficientBuffer);
}

TEST(Averager, Errors) {
    Averager avg(UniformScheme{}, 2);
    EXPECT_THROW(avg.estimate(), ConfigError);
    EXPECT_THROW(avg.update(2, Vector::Zero(2)), OutOfOrder);
    avg.update(1, Vector::Zero(2));
    EXPECT_THROW(avg.update(1, Vector::Zero(2)), OutOfOrder);
    EXPECT_THROW(avg.update(2, Vector::Zero(3)), ConfigError);
    EXPECT_THROW(Averager(SuffixScheme{0.5}, 2), ConfigError);
}

TEST(FinalizeSuffix, Examples) {
    IterateBuffer buffer(1, 10);
    for (int i = 1; i <= 10; ++i) buffer.push(Vector::Constant(1, double(i)));
    EXPECT_DOUBLE_EQ(finalize_suffix(buffer, 10, 0.3)(0), (8.0 + 9.0 + 10.0) / 3.0);
    EXPECT_DOUBLE_EQ(finalize_suffix(buffer, 10, 1.0)(0), 5.5);

    IterateBuffer four(1, 2);
    for (int i = 1; i <= 4; ++i) four.push(Vector::Constant(1, double(i)));
    EXPECT_DOUBLE_EQ(finalize_suffix(four, 4, 0.5)(0), 3.5);
    EXPECT_THROW(finalize_suffix(four, 4, 0.75), InsufficientBuffer);
}

TEST(Prefactor, ClosedForms) {
    EXPECT_DOUBLE_EQ(prefactor(PolyDecayScheme{3.0}), 16.0 / 7.0);
    EXPECT_DOUBLE_EQ(prefactor(SuffixScheme{0.5}), 2.0);
    EXPECT_DOUBLE_EQ(prefactor(UniformScheme{}), 1.0);
    EXPECT_DOUBLE_EQ(prefactor(AdaptiveScheme{0.505}), 1.0);
    EXPECT_THROW(prefactor(ExplicitScheme{{1.0}, "x"}), Unsupported);
    EXPECT_THROW(prefactor(OnlineSuffixScheme{}), Unsupported);
}

TEST(Prefactor, NumericConvergesMonotonically) {
    for (const SchemeConfig& scheme : std::vector<SchemeConfig>{PolyDecayScheme{3.0}, SuffixScheme{0.5},
                                                                 UniformScheme{}, AdaptiveScheme{0.505}}) {
        double previous = std::numeric_limits<double>::infinity();
        for (std::size_t n : {100, 1000, 10'000, 100'000}) {
            const double gap = std::abs(prefactor_numeric(scheme, n) - prefactor(scheme));
            EXPECT_LE(gap, previous + 1e-12) << scheme_name(scheme) << " n=" << n;
            previous = gap;
        }
        EXPECT_LT(previous, 0.01) << scheme_name(scheme);
    }
}

TEST(Conditions, UniformSmoothnessIsZero) {
    for (std::size_t n : {2, 10, 1000}) {
        const ConditionReport r = check_conditions(UniformScheme{}, n, 0.5, kSchedule);
        EXPECT_EQ(r.smoothness_sum, 0.0);
        EXPECT_TRUE(r.adjacent_diff_condition);
        EXPECT_TRUE(condition_warnings(r).empty());
    }
}

TEST(Conditions, SmoothnessMatchesDirectDoubleSum) {
    for (const SchemeConfig& scheme : std::vector<SchemeConfig>{PolyDecayScheme{3.0}, SuffixScheme{0.5},
                                                                 AdaptiveScheme{0.505}}) {
        const std::size_t n = 400;
        const auto w = materialize_weights(scheme, n).w;
        double direct = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            double exponent = 0.0;
            for (std::size_t k = i + 1; k <= n; ++k) {
                exponent += kSchedule.step(k);
                direct += std::abs(w[k - 1] - w[i - 1]) * kSchedule.step(i) * std::exp(-0.5 * exponent);
            }
        }
        EXPECT_NEAR(smoothness_sum(w, 0.5, kSchedule), direct, 1e-12 * direct) << scheme_name(scheme);
    }
}

TEST(Conditions, SmoothnessDecreasesForSuffixAndAdaptive) {
    for (const SchemeConfig& scheme : std::vector<SchemeConfig>{SuffixScheme{0.5}, AdaptiveScheme{0.505}}) {
        const double at3 = check_conditions(scheme, 1000, 0.5, kSchedule).smoothness_sum;
        const double at4 = check_conditions(scheme, 10'000, 0.5, kSchedule).smoothness_sum;
        EXPECT_GT(at3, at4) << scheme_name(scheme);
        EXPECT_GT(at4, 0.0);
    }
}

TEST(Conditions, ReportFields) {
    const ConditionReport poly = check_conditions(PolyDecayScheme{3.0}, 1000, 0.5, kSchedule, 20.0);
    EXPECT_LT(poly.sum_error, 1e-12);
    EXPECT_LE(poly.max_scaled_weight, 4.0);
    EXPECT_NEAR(poly.weight_energy, 16.0 / 7.0, 0.01);
    EXPECT_TRUE(poly.adjacent_diff_condition);  // |diff| ~ (g+1) g / n^2 = 12 / n^2

    const ConditionReport adaptive = check_conditions(AdaptiveScheme{0.505}, 1000, 0.5, kSchedule);
    EXPECT_TRUE(adaptive.last_weight_exempt);
    EXPECT_NEAR(adaptive.last_scaled_weight, std::pow(1000.0, 0.505), 1e-9);
    EXPECT_LE(adaptive.max_scaled_weight, 1.0);
    for (const auto& w : condition_warnings(adaptive)) EXPECT_EQ(w.find("last weight"), std::string::npos) << w;

    const ConditionReport last = check_conditions(LastIterateScheme{}, 1000, 0.5, kSchedule);
    EXPECT_FALSE(last.last_weight_exempt);
    EXPECT_FALSE(condition_warnings(last).empty());

    EXPECT_THROW(check_conditions(UniformScheme{}, 1, 0.5, kSchedule), ConfigError);
    EXPECT_THROW(check_conditions(UniformScheme{}, 10, 0.0, kSchedule), ConfigError);
}

TEST(Conditions, ExplicitWeightsWarnInsteadOfFailing) {
    std::vector<double> bad(100, 0.0);
    bad[0] = 1.0;
    const ConditionReport r = check_weights(bad, 0.5, kSchedule);
    EXPECT_FALSE(condition_warnings(r).empty());
    std::vector<double> off(100, 0.011);
    EXPECT_FALSE(condition_warnings(check_weights(off, 0.5, kSchedule)).empty());
}
