#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "amip/resample.hpp"

using namespace amip;

namespace {
DrawBundle noisy_bundle(std::uint64_t seed, std::size_t S, std::size_t N) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::vector<double> g(S), ll(S * N);
    for (std::size_t s = 0; s < S; ++s) {
        g[s] = nd(gen);
        for (std::size_t n = 0; n < N; ++n) ll[s * N + n] = (0.5 - 0.1 * n) * g[s] + nd(gen);
    }
    return DrawBundle(std::move(g), std::move(ll), N);
}

DrawBundle identical_rows(std::size_t S) {
    std::vector<double> g(S, 1.5), ll;
    for (std::size_t s = 0; s < S; ++s) ll.insert(ll.end(), {-1.0, 2.0, 0.5});
    return DrawBundle(std::move(g), std::move(ll), 3);
}
} // namespace

TEST(Quantile, InterpolatesOrderStatistics) {
    EXPECT_DOUBLE_EQ(quantile({4, 2, 3, 1}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({4, 2, 3, 1}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile({4, 2, 3, 1}, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile({7.5}, 0.3), 7.5);
    EXPECT_THROW(quantile({}, 0.5), InvalidInput);
    EXPECT_THROW(quantile({1.0}, 1.5), InvalidInput);
}

TEST(BlockResample, WholeChainBlockReturnsOriginal) {
    const auto b = noisy_bundle(1, 30, 2);
    Rng rng(3);
    for (int i = 0; i < 5; ++i) {
        const auto r = block_resample(b, 30, rng);
        for (std::size_t s = 0; s < 30; ++s) EXPECT_EQ(r.g_values()[s], b.g_values()[s]);
    }
}

TEST(BlockResample, UsesFloorSOverLBlocksAndKeepsAdjacency) {
    Rng rng(4);
    const auto rows = block_resample_rows(53, 10, rng);
    ASSERT_EQ(rows.size(), 50u);
    for (std::size_t i = 0; i < rows.size(); i += 10) {
        EXPECT_EQ(rows[i] % 10, 0u);
        EXPECT_LT(rows[i] + 9, 50u);
        for (std::size_t r = 1; r < 10; ++r) EXPECT_EQ(rows[i + r], rows[i] + r);
    }
}

TEST(BlockResample, UnitBlocksMatchVanillaDistribution) {
    Rng a(5), b(6);
    std::vector<double> ca(20, 0.0), cb(20, 0.0);
    for (int i = 0; i < 5000; ++i) {
        for (auto r : block_resample_rows(20, 1, a)) ca[r] += 1;
        for (auto r : iid_resample_rows(20, b)) cb[r] += 1;
    }
    for (std::size_t k = 0; k < 20; ++k) {
        EXPECT_NEAR(ca[k] / 5000.0, 1.0, 0.06);
        EXPECT_NEAR(cb[k] / 5000.0, 1.0, 0.06);
    }
}

TEST(BootstrapConfig, Validation) {
    BootstrapConfig c;
    EXPECT_NO_THROW(c.validate(20));
    c.block_length = 21;
    EXPECT_THROW(c.validate(20), InvalidInput);
    c.block_length = 0;
    EXPECT_THROW(c.validate(20), InvalidInput);
    c = {};
    c.eta = 1.0;
    EXPECT_THROW(c.validate(20), InvalidInput);
    c = {};
    c.replicates = 0;
    EXPECT_THROW(c.validate(20), InvalidInput);
}

TEST(CiForAmip, IdenticalRowsGiveZeroWidthAtZero) {
    const auto b = identical_rows(40);
    BootstrapConfig cfg;
    cfg.replicates = 30;
    const auto iv = ci_for_amip(b, QoiSpec::custom(1.0, 0.0), 0.4, cfg);
    EXPECT_EQ(iv.lb, 0.0);
    EXPECT_EQ(iv.ub, 0.0);
    const auto soi = ci_for_sum_of_influence(b, QoiSpec::custom(1.0, 0.0), IndexSet({0, 2}), cfg);
    EXPECT_EQ(soi.ub - soi.lb, 0.0);
}

TEST(CiForAmip, SingleReplicateCollapses) {
    const auto b = noisy_bundle(7, 100, 5);
    BootstrapConfig cfg;
    cfg.replicates = 1;
    const auto iv = ci_for_amip(b, QoiSpec::custom(1.0, 0.0), 0.4, cfg);
    EXPECT_EQ(iv.lb, iv.ub);
    EXPECT_EQ(iv.lb, iv.replicate_values.front());
    const auto soi = ci_for_sum_of_influence(b, QoiSpec::custom(1.0, 0.0), IndexSet({1}), cfg);
    EXPECT_EQ(soi.lb, soi.ub);
}

TEST(CiForAmip, WholeChainBlockCollapsesToPointEstimate) {
    const auto b = noisy_bundle(8, 100, 6);
    BootstrapConfig cfg;
    cfg.replicates = 20;
    cfg.block_length = 100;
    const auto q = QoiSpec::custom(1.0, 0.5);
    const auto iv = ci_for_amip(b, q, 0.34, cfg);
    const double point = sosie(influence_estimates(b, q), 0.34).delta_hat;
    EXPECT_DOUBLE_EQ(iv.lb, point);
    EXPECT_DOUBLE_EQ(iv.ub, point);
}

TEST(CiForAmip, GridMatchesSingleAlphaCalls) {
    const auto b = noisy_bundle(9, 200, 8);
    BootstrapConfig cfg;
    cfg.replicates = 50;
    cfg.seed = 99;
    const auto q = QoiSpec::custom(-1.0, 0.0);
    const std::vector<double> alphas{0.13, 0.26, 0.51};
    const auto grid = ci_for_amip_grid(b, q, alphas, cfg);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const auto one = ci_for_amip(b, q, alphas[i], cfg);
        EXPECT_EQ(grid[i].lb, one.lb);
        EXPECT_EQ(grid[i].ub, one.ub);
    }
}

TEST(CiForAmip, IndependentOfThreadCount) {
    const auto b = noisy_bundle(10, 300, 10);
    BootstrapConfig cfg;
    cfg.replicates = 64;
    cfg.seed = 5;
    const auto q = QoiSpec::custom(1.0, 1.0);
    const auto one = ci_for_amip(b, q, 0.2, cfg);
    cfg.threads = 4;
    const auto four = ci_for_amip(b, q, 0.2, cfg);
    EXPECT_EQ(one.replicate_values, four.replicate_values);
    EXPECT_EQ(one.lb, four.lb);
    EXPECT_EQ(one.ub, four.ub);
}

TEST(CiForAmip, WiderLevelNestsNarrower) {
    const auto b = noisy_bundle(11, 300, 10);
    BootstrapConfig cfg;
    cfg.replicates = 100;
    const auto q = QoiSpec::custom(1.0, 0.0);
    double prev_lb = 1e300, prev_ub = -1e300;
    for (double eta : {0.5, 0.8, 0.95, 0.99}) {
        cfg.eta = eta;
        const auto iv = ci_for_amip(b, q, 0.2, cfg);
        EXPECT_LE(iv.lb, iv.ub);
        EXPECT_LE(iv.lb, prev_lb);
        EXPECT_GE(iv.ub, prev_ub);
        prev_lb = iv.lb;
        prev_ub = iv.ub;
    }
}

TEST(CiForSumOfInfluence, MatchesFullRecomputation) {
    const auto b = noisy_bundle(12, 120, 7);
    BootstrapConfig cfg;
    cfg.replicates = 25;
    cfg.seed = 3;
    const auto q = QoiSpec::custom(1.0, -0.7);
    const IndexSet set({1, 4, 6});
    const auto fast = ci_for_sum_of_influence(b, q, set, cfg);
    const auto slow = ci_for_statistic(b, cfg, [&](std::span<const std::size_t> rows) {
        return influence_estimates(b, q, rows).sum_over(set);
    });
    ASSERT_EQ(fast.replicate_values.size(), slow.replicate_values.size());
    for (std::size_t i = 0; i < fast.replicate_values.size(); ++i)
        EXPECT_NEAR(fast.replicate_values[i], slow.replicate_values[i], 1e-13);
    EXPECT_THROW(ci_for_sum_of_influence(b, q, IndexSet{}, cfg), InvalidInput);
    EXPECT_THROW(ci_for_sum_of_influence(b, q, IndexSet({7}), cfg), InvalidInput);
}

TEST(ClopperPearson, ZeroSuccesses) {
    const auto ci = clopper_pearson(0, 10, 0.95);
    EXPECT_EQ(ci.lb, 0.0);
    EXPECT_NEAR(ci.ub, 1.0 - std::pow(0.025, 0.1), 1e-10);
    EXPECT_NEAR(ci.ub, 0.3085, 5e-5);
}

TEST(ClopperPearson, AllSuccesses) {
    for (std::size_t J : {1u, 7u, 200u}) {
        const auto ci = clopper_pearson(J, J, 0.95);
        EXPECT_EQ(ci.ub, 1.0);
        EXPECT_NEAR(ci.lb, std::pow(0.025, 1.0 / static_cast<double>(J)), 1e-10);
    }
}

TEST(ClopperPearson, ContainsPointEstimate) {
    for (std::size_t k = 0; k <= 50; ++k) {
        const auto ci = clopper_pearson(k, 50);
        EXPECT_LE(ci.lb, k / 50.0);
        EXPECT_GE(ci.ub, k / 50.0);
    }
    EXPECT_THROW(clopper_pearson(3, 2), InvalidInput);
    EXPECT_THROW(clopper_pearson(0, 0), InvalidInput);
}
