#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "amip/amip.hpp"

using namespace amip;

TEST(Sosie, WorkedExample) {
    const InfluenceVector psi{{-0.75, -0.5, -0.25, 1.5}};
    const auto r = sosie(psi, 0.5);
    EXPECT_EQ(r.budget, 2u);
    EXPECT_DOUBLE_EQ(r.delta_hat, 1.25);
    EXPECT_EQ(r.dropped, IndexSet({0, 1}));
    const auto bf = brute_force_mip(psi, 0.5);
    EXPECT_DOUBLE_EQ(bf.delta_hat, 1.25);
    EXPECT_EQ(bf.dropped, IndexSet({0, 1}));
}

TEST(Sosie, AllNonNegativeDropsNothing) {
    const auto r = sosie(InfluenceVector{{0.0, 0.3, 2.0}}, 0.9);
    EXPECT_EQ(r.delta_hat, 0.0);
    EXPECT_TRUE(r.dropped.empty());
}

TEST(Sosie, ZeroBudgetDropsNothing) {
    const auto r = sosie(InfluenceVector{{-1.0, -2.0, 3.0}}, 0.2);
    EXPECT_EQ(r.budget, 0u);
    EXPECT_EQ(r.delta_hat, 0.0);
    EXPECT_TRUE(r.dropped.empty());
}

TEST(Sosie, RejectsAlphaOutsideUnitInterval) {
    const InfluenceVector psi{{-1.0, 1.0}};
    EXPECT_THROW(sosie(psi, 0.0), InvalidInput);
    EXPECT_THROW(sosie(psi, 1.0), InvalidInput);
    EXPECT_THROW(brute_force_mip(psi, -0.1), InvalidInput);
}

TEST(BruteForce, SingleObservation) {
    const InfluenceVector psi{{-2.0}};
    const auto r = brute_force_mip(psi, 1.0);
    EXPECT_DOUBLE_EQ(r.delta_hat, 2.0);
    EXPECT_EQ(r.dropped, IndexSet({0}));
}

TEST(BruteForce, TieGoesToSmallerIndex) {
    const InfluenceVector psi{{-1.0, -1.0, 3.0}};
    const auto bf = brute_force_mip(psi, 0.34);
    EXPECT_EQ(bf.budget, 1u);
    EXPECT_DOUBLE_EQ(bf.delta_hat, 1.0);
    EXPECT_EQ(bf.dropped, IndexSet({0}));
    EXPECT_EQ(sosie(psi, 0.34).dropped, IndexSet({0}));
}

TEST(BruteForce, CapAtTwenty) {
    EXPECT_THROW(brute_force_mip(InfluenceVector{std::vector<double>(21, -1.0)}, 0.1), InvalidInput);
}

TEST(Sosie, MatchesBruteForceOnRandomVectors) {
    std::mt19937_64 gen(21);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t N = 1 + rep % 12;
        InfluenceVector psi{std::vector<double>(N)};
        for (auto& v : psi.psi) {
            v = nd(gen);
            if (rep % 4 == 1) v = std::round(v * 2.0) / 2.0; // ties
            if (rep % 4 == 2) v = std::abs(v);              // all nonnegative
        }
        for (std::size_t k = 1; k < N; ++k) {
            const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(N);
            const auto a = sosie(psi, alpha);
            const auto b = brute_force_mip(psi, alpha);
            EXPECT_NEAR(a.delta_hat, b.delta_hat, 1e-12);
        }
    }
}

TEST(Sosie, NonNegativeMonotoneAndNested) {
    std::mt19937_64 gen(22);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 50; ++rep) {
        InfluenceVector psi{std::vector<double>(40)};
        for (auto& v : psi.psi) v = nd(gen);
        AmipResult prev = sosie(psi, 0.01);
        EXPECT_GE(prev.delta_hat, 0.0);
        for (double alpha = 0.02; alpha < 0.99; alpha += 0.01) {
            const auto cur = sosie(psi, alpha);
            EXPECT_GE(cur.delta_hat, prev.delta_hat);
            EXPECT_TRUE(std::includes(cur.dropped.begin(), cur.dropped.end(), prev.dropped.begin(), prev.dropped.end()));
            prev = cur;
        }
    }
}

TEST(Sosie, PositiveShiftShrinksDroppedSet) {
    std::mt19937_64 gen(23);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 50; ++rep) {
        InfluenceVector psi{std::vector<double>(30)};
        for (auto& v : psi.psi) v = nd(gen);
        InfluenceVector shifted = psi;
        for (auto& v : shifted.psi) v += 0.4;
        const auto a = sosie(psi, 0.5);
        const auto b = sosie(shifted, 0.5);
        EXPECT_TRUE(std::includes(a.dropped.begin(), a.dropped.end(), b.dropped.begin(), b.dropped.end()));
    }
}

TEST(Sosie, NeverDropsZeros) {
    const auto r = sosie(InfluenceVector{{0.0, -1.0, 0.0, 0.0}}, 0.75);
    EXPECT_EQ(r.dropped, IndexSet({1}));
}

TEST(TaylorPredict, IdentityWeights) {
    const InfluenceVector psi{{0.3, -0.2}};
    EXPECT_EQ(taylor_predict(-1.5, psi, WeightVector::ones(2)), -1.5);
}

TEST(TaylorPredict, DroppingAddsNegatedInfluences) {
    const InfluenceVector psi{{-0.75, -0.5, -0.25, 1.5}};
    const auto r = sosie(psi, 0.5);
    EXPECT_DOUBLE_EQ(taylor_predict(-1.0, psi, index_set_to_weight(r.dropped, 4)), -1.0 + r.delta_hat);
}
