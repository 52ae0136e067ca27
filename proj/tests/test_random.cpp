#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "amip/random.hpp"

using namespace amip;

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        EXPECT_EQ(x, b());
        differs = differs || x != c();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, StreamsAreDistinct) {
    EXPECT_NE(stream_seed(0, 0), stream_seed(0, 1));
    EXPECT_NE(stream_seed(0, 1), stream_seed(1, 0));
    EXPECT_EQ(stream_seed(7, 3), stream_seed(7, 3));
}

TEST(Rng, UniformInUnitInterval) {
    Rng r(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(Rng, BelowCoversRangeEvenly) {
    Rng r(2);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto k = r.below(7);
        ASSERT_LT(k, 7u);
        ++counts[k];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 400);
    EXPECT_EQ(r.below(1), 0u);
}

TEST(Rng, NormalMoments) {
    Rng r(3);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal(2.0, 3.0);
        s += x;
        s2 += x * x;
    }
    const double m = s / n;
    EXPECT_NEAR(m, 2.0, 4.0 * 3.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n - m * m, 9.0, 0.15);
}

TEST(Rng, GammaMoments) {
    for (double shape : {0.5, 1.0, 3.5, 12.0}) {
        Rng r(4);
        const double rate = 2.0;
        const int n = 200000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = r.gamma(shape, rate);
            ASSERT_GT(x, 0.0);
            s += x;
            s2 += x * x;
        }
        const double m = s / n;
        const double var = shape / (rate * rate);
        EXPECT_NEAR(m, shape / rate, 5.0 * std::sqrt(var / n)) << "shape " << shape;
        EXPECT_NEAR((s2 / n - m * m) / var, 1.0, 0.05) << "shape " << shape;
    }
}
