#include <semigroup/errors.hpp>
#include <semigroup/montecarlo.hpp>
#include <semigroup/rate_process.hpp>
#include <semigroup/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace semigroup;

TEST(RateProcess, LinearHasUnitEndpointsAndEnergy) {
    const RateProcess h = RateProcess::linear(2.0);
    EXPECT_DOUBLE_EQ(h(0.0), 0.0);
    EXPECT_DOUBLE_EQ(h(1.0), 0.5);
    EXPECT_DOUBLE_EQ(h(2.0), 1.0);
    EXPECT_DOUBLE_EQ(h.slope(0.3), 0.5);
    EXPECT_DOUBLE_EQ(h.energy(), 0.5);
    EXPECT_NO_THROW(h.require_unit_endpoints(2.0, "test"));
}

TEST(RateProcess, PowerInterpolatesKnots) {
    const RateProcess h = RateProcess::power(1.0, 2.0, 4);
    EXPECT_DOUBLE_EQ(h(0.5), 0.25);
    EXPECT_DOUBLE_EQ(h(0.625), 0.5 * (0.25 + 0.5625));
    EXPECT_DOUBLE_EQ(h.slope(0.9), (1.0 - 0.5625) / 0.25);
}

TEST(RateProcess, EndpointViolationsNameTheConstraint) {
    const RateProcess bad({0.0, 1.0}, {0.0, 0.5});
    try {
        bad.require_unit_endpoints(1.0, "divergence formula");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("h constraint"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("h(T)"), std::string::npos);
    }
    EXPECT_THROW(RateProcess::linear(1.0).require_unit_endpoints(2.0, "x"), ConfigError);
    EXPECT_THROW(RateProcess({0.0, 0.0}, {0.0, 1.0}), ConfigError);
    EXPECT_THROW(RateProcess({0.0, 1.0}, {0.0}), ConfigError);
}

TEST(Rng, StreamsAreKeyedBySeedPathAndTag) {
    PathRng a(5, 7), b(5, 7), c(5, 8), d(6, 7), e(5, 7, StreamTag::Auxiliary);
    const double va = a.normal();
    EXPECT_EQ(va, b.normal());
    EXPECT_NE(va, c.normal());
    EXPECT_NE(va, d.normal());
    EXPECT_NE(va, e.normal());
}

TEST(Rng, IncrementsHaveSpeedTwoVariance) {
    PathRng rng(1, 0);
    const double dt = 0.01;
    double s2 = 0.0;
    const int n = 200000;
    Vec db;
    for (int i = 0; i < n; ++i) {
        rng.increment(db, 1, dt);
        s2 += db(0) * db(0);
    }
    // Var(dB) = 2 dt; sample-variance relative SE is sqrt(2 / n).
    EXPECT_NEAR(s2 / n / (2.0 * dt), 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(PairwiseSum, MatchesLongDoubleReference) {
    std::vector<double> v(10007);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + static_cast<double>(i));
    long double ref = 0.0L;
    for (double x : v) ref += x;
    EXPECT_NEAR(pairwise_sum(v.data(), v.size()), static_cast<double>(ref), 1e-13);
}

TEST(CollectSamples, IndependentOfWorkerCount) {
    auto fn = [](std::size_t path, double* out) {
        PathRng rng(9, path);
        out[0] = rng.normal();
        out[1] = rng.normal() * rng.normal();
        return true;
    };
    const MCEstimate one = summarize(collect_samples(1000, 2, 1, fn), 9);
    const MCEstimate four = summarize(collect_samples(1000, 2, 4, fn), 9);
    EXPECT_EQ(one.mean, four.mean);
    EXPECT_EQ(one.std_error, four.std_error);
}

TEST(CollectSamples, RethrowsSmallestFailingIndex) {
    auto fn = [](std::size_t path, double*) -> bool {
        if (path == 700 || path == 300) throw NumericalError("path " + std::to_string(path));
        return true;
    };
    try {
        collect_samples(1000, 1, 3, fn);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_STREQ(e.what(), "path 300");
    }
}

TEST(CollectSamples, ExplodedPathsAbortTheEstimate) {
    auto fn = [](std::size_t path, double* out) {
        out[0] = 1.0;
        return path % 100 != 0;
    };
    try {
        collect_samples(1000, 1, 2, fn);
        FAIL() << "expected ExplosionError";
    } catch (const ExplosionError& e) {
        EXPECT_EQ(e.aborted_paths(), 10u);
    }
}

TEST(Summarize, MeanAndStandardErrorOfKnownData) {
    const MCEstimate e = summarize_values({1.0, 2.0, 3.0, 4.0}, 0);
    EXPECT_DOUBLE_EQ(e.value(), 2.5);
    // Sample variance 5/3, SE = sqrt(5/3 / 4).
    EXPECT_DOUBLE_EQ(e.se(), std::sqrt(5.0 / 12.0));
    const auto ci = e.ci95();
    EXPECT_DOUBLE_EQ(ci.second - ci.first, 2.0 * 1.96 * e.se());
}
