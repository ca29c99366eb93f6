#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "otr/random.hpp"
#include "otr/stats.hpp"

using namespace otr;

TEST(Stats, Expit) {
    EXPECT_DOUBLE_EQ(stats::expit(0.0), 0.5);
    EXPECT_NEAR(stats::expit(std::log(3.0)), 0.75, 1e-15);
    EXPECT_NEAR(stats::expit(0.457), 0.61230, 1e-5);
    EXPECT_NEAR(stats::expit(-800.0), 0.0, 1e-300);
    EXPECT_DOUBLE_EQ(stats::expit(800.0), 1.0);
    EXPECT_NEAR(stats::logit(stats::expit(1.7)), 1.7, 1e-14);
    EXPECT_NEAR(stats::log1pexp(50.0), 50.0, 1e-12);
    EXPECT_NEAR(stats::log1pexp(0.0), std::log(2.0), 1e-15);
}

TEST(Stats, NormalQuantileInvertsCdf) {
    EXPECT_NEAR(stats::normal_quantile(0.975), 1.959963984540054, 1e-9);
    EXPECT_NEAR(stats::normal_quantile(0.5), 0.0, 1e-15);
    for (double p : {1e-10, 1e-5, 0.01, 0.2, 0.5, 0.7, 0.99, 1 - 1e-9}) {
        EXPECT_NEAR(stats::normal_cdf(stats::normal_quantile(p)), p, 1e-9 * std::max(p, 1e-3));
    }
    EXPECT_THROW(stats::normal_quantile(0.0), Error);
    EXPECT_THROW(stats::normal_quantile(1.0), Error);
}

TEST(Stats, CompensatedSumIsExact) {
    stats::CompensatedSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    EXPECT_DOUBLE_EQ(s.value(), 1.0);
    std::vector<double> tenths(10, 0.1);
    EXPECT_DOUBLE_EQ(stats::sum(tenths), 1.0);
    EXPECT_THROW(stats::mean(std::vector<double>{}), Error);
}

TEST(Stats, Type7Quantiles) {
    std::vector<double> seq(1000);
    for (int i = 0; i < 1000; ++i) seq[static_cast<std::size_t>(i)] = 1000 - i;  // unsorted on purpose
    EXPECT_NEAR(stats::quantile(seq, 0.025), 25.975, 1e-12);
    EXPECT_NEAR(stats::quantile(seq, 0.975), 975.025, 1e-12);
    EXPECT_DOUBLE_EQ(stats::quantile(seq, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(stats::quantile(seq, 1.0), 1000.0);
    EXPECT_DOUBLE_EQ(stats::quantile(std::vector<double>{3.0, 1.0}, 0.5), 2.0);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
    auto a = rng::stream(42, {1, 2});
    auto b = rng::stream(42, {1, 2});
    auto c = rng::stream(42, {2, 1});
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
}

TEST(Random, UniformAndNormalMoments) {
    auto eng = rng::stream(9);
    const int n = 200000;
    double su = 0.0;
    double sz = 0.0;
    double sz2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng::uniform01(eng);
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng::normal(eng);
        sz += z;
        sz2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(sz / n, 0.0, 4 / std::sqrt(n));
    EXPECT_NEAR(sz2 / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(Random, TruncatedNormalRespectsBoundAndMean) {
    auto eng = rng::stream(10);
    for (double lower : {-2.0, 0.0, 0.2, 1.0, 3.0, 6.0}) {
        const int n = 50000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z = rng::truncated_normal_above(eng, lower);
            ASSERT_GT(z, lower);
            s += z;
        }
        // E[Z | Z > a] = phi(a) / (1 - Phi(a)).
        const double expected = stats::normal_pdf(lower) / stats::normal_cdf(-lower);
        EXPECT_NEAR(s / n, expected, 0.02) << lower;
    }
    for (int i = 0; i < 1000; ++i) {
        EXPECT_GT(rng::truncated_normal_sign(eng, -1.5, true), 0.0);
        EXPECT_LE(rng::truncated_normal_sign(eng, 1.5, false), 0.0);
    }
}
