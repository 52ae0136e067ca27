#include <gtest/gtest.h>

#include <random>

#include "amip/core.hpp"

using namespace amip;

namespace {
DrawBundle bundle_with_g(std::vector<double> g) {
    std::vector<double> ll(g.size(), 0.0);
    return DrawBundle(std::move(g), std::move(ll), 1);
}
} // namespace

TEST(DrawBundle, RejectsNonFiniteEntries) {
    EXPECT_THROW(DrawBundle({0.0, NAN}, {0.0, 0.0}, 1), InvalidInput);
    EXPECT_THROW(DrawBundle({0.0, 1.0}, {0.0, INFINITY}, 1), InvalidInput);
}

TEST(DrawBundle, RejectsShapeMismatchAndTooFewDraws) {
    EXPECT_THROW(DrawBundle({0.0, 1.0}, {0.0, 0.0, 0.0}, 1), InvalidInput);
    EXPECT_THROW(DrawBundle({0.0}, {0.0}, 1), InvalidInput);
    EXPECT_THROW(DrawBundle({0.0, 1.0}, {}, 0), InvalidInput);
}

TEST(DrawBundle, RowAccessAndSelection) {
    DrawBundle b({1.0, 2.0, 3.0}, {1, 2, 3, 4, 5, 6}, 2);
    EXPECT_EQ(b.loglik_at(1, 1), 4.0);
    const std::size_t rows[] = {2, 2, 0};
    const auto sel = b.select_rows(rows);
    EXPECT_EQ(sel.draws(), 3u);
    EXPECT_EQ(sel.g_values()[0], 3.0);
    EXPECT_EQ(sel.loglik_at(2, 1), 2.0);
}

TEST(IndexSetWeights, EmptySetGivesOnes) {
    const auto w = index_set_to_weight(IndexSet{}, 3);
    EXPECT_EQ(std::vector<double>(w.values().begin(), w.values().end()), (std::vector<double>{1, 1, 1}));
}

TEST(IndexSetWeights, ZerosAtDroppedIndices) {
    const auto w = index_set_to_weight(IndexSet({0, 2}), 4);
    EXPECT_EQ(std::vector<double>(w.values().begin(), w.values().end()), (std::vector<double>{0, 1, 0, 1}));
    EXPECT_EQ(weight_to_index_set(w), IndexSet({0, 2}));
}

TEST(IndexSetWeights, OnesGiveEmptySet) { EXPECT_TRUE(weight_to_index_set(WeightVector::ones(3)).empty()); }

TEST(IndexSetWeights, AllZeroRejected) {
    EXPECT_THROW(WeightVector(std::vector<double>{0, 0, 0}), InvalidInput);
}

TEST(IndexSetWeights, NonBinaryAndOutOfRangeRejected) {
    EXPECT_THROW(weight_to_index_set(WeightVector({1.0, 0.5})), InvalidInput);
    EXPECT_THROW(WeightVector({1.0, 1.5}), InvalidInput);
    EXPECT_THROW(index_set_to_weight(IndexSet({3}), 3), InvalidInput);
    EXPECT_THROW(IndexSet({1, 1}), InvalidInput);
}

TEST(IndexSetWeights, RandomRoundTrip) {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + gen() % 30;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (gen() % 3 == 0) idx.push_back(i);
        if (idx.size() == n) idx.pop_back();
        const IndexSet set(idx);
        EXPECT_EQ(weight_to_index_set(index_set_to_weight(set, n)), set);
        const auto w = index_set_to_weight(set, n);
        const auto back = index_set_to_weight(weight_to_index_set(w), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(back[i], w[i]);
    }
}

TEST(QoiSpec, ValidatesCoefficients) {
    EXPECT_THROW(QoiSpec::custom(0.0, 0.0), InvalidInput);
    EXPECT_THROW(QoiSpec::custom(1.0, 0.0, 0.0), InvalidInput);
    EXPECT_DOUBLE_EQ(QoiSpec::custom(2.0, 3.0).evaluate(1.0, 2.0), 8.0);
    EXPECT_EQ(parse_preset("both"), QoiPreset::both);
    EXPECT_THROW(parse_preset("nope"), InvalidInput);
}

TEST(ResolvePreset, SignPositiveMean) {
    const auto q = resolve_qoi_preset(QoiPreset::sign, bundle_with_g({3.0, 5.0}));
    EXPECT_EQ(q.c1, -1.0);
    EXPECT_EQ(q.c2, 0.0);
}

TEST(ResolvePreset, SignNegativeMean) {
    const auto q = resolve_qoi_preset(QoiPreset::sign, bundle_with_g({-3.0, -5.0}));
    EXPECT_EQ(q.c1, 1.0);
    EXPECT_EQ(q.c2, 0.0);
}

TEST(ResolvePreset, BothPositiveMean) {
    const auto q = resolve_qoi_preset(QoiPreset::both, bundle_with_g({3.0, 5.0}), 1.96);
    EXPECT_EQ(q.c1, -1.0);
    EXPECT_EQ(q.c2, -1.96);
}

TEST(ResolvePreset, BothNegativeMean) {
    const auto q = resolve_qoi_preset(QoiPreset::both, bundle_with_g({-0.5, 0.1}), 1.96);
    EXPECT_EQ(q.c1, 1.0);
    EXPECT_EQ(q.c2, -1.96);
}

TEST(ResolvePreset, SigUsesPositiveMultiplierForEitherSign) {
    const auto pos = resolve_qoi_preset(QoiPreset::sig, bundle_with_g({3.9, 4.1}));
    EXPECT_EQ(pos.c1, -1.0);
    EXPECT_EQ(pos.c2, kDefaultZ);
    const auto neg = resolve_qoi_preset(QoiPreset::sig, bundle_with_g({-3.9, -4.1}));
    EXPECT_EQ(neg.c1, 1.0);
    EXPECT_EQ(neg.c2, kDefaultZ);
}

TEST(ResolvePreset, SigRejectsIntervalContainingZero) {
    EXPECT_THROW(resolve_qoi_preset(QoiPreset::sig, bundle_with_g({-1.0, 3.0})), InvalidInput);
}

TEST(ResolvePreset, ZeroMeanRejected) {
    EXPECT_THROW(resolve_qoi_preset(QoiPreset::sign, bundle_with_g({-1.0, 1.0})), InvalidInput);
}

TEST(ResolvePreset, CustomPassesThrough) {
    const auto q = resolve_qoi_preset(QoiPreset::custom, bundle_with_g({1.0, 2.0}), kDefaultZ, 0.5, -2.0);
    EXPECT_EQ(q.c1, 0.5);
    EXPECT_EQ(q.c2, -2.0);
}

TEST(ResolvePreset, PhiFullNegativeWhenResolved) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    int checked = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const double loc = 4.0 * nd(gen);
        const double scale = std::exp(nd(gen));
        std::vector<double> g(20);
        for (auto& v : g) v = loc + scale * nd(gen);
        const auto b = bundle_with_g(g);
        for (auto p : {QoiPreset::sign, QoiPreset::sig, QoiPreset::both}) {
            try {
                const auto q = resolve_qoi_preset(p, b);
                EXPECT_LT(phi_full(b, q), 0.0);
                ++checked;
            } catch (const InvalidInput&) {
            }
        }
    }
    EXPECT_GT(checked, 600);
}

TEST(DropBudget, FloorWithRoundingGuard) {
    EXPECT_EQ(drop_budget(100, 0.03), 3u);
    EXPECT_EQ(drop_budget(4, 0.5), 2u);
    EXPECT_EQ(drop_budget(999, 0.001), 0u);
    EXPECT_EQ(drop_budget(1000, 0.001), 1u);
}
