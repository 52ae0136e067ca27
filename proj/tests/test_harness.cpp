#include <gtest/gtest.h>

#include <cmath>

#include "amip/harness.hpp"
#include "amip/samplers.hpp"

using namespace amip;

TEST(Verdict, ThreeCases) {
    EXPECT_EQ(verdict(-4.0, 5.0, 7.0).outcome, Outcome::non_robust);
    EXPECT_EQ(verdict(-4.0, 1.0, 3.0).outcome, Outcome::robust);
    EXPECT_EQ(verdict(-4.0, 3.0, 5.0).outcome, Outcome::abstain);
    const auto v = verdict(-4.0, 3.0, 5.0);
    EXPECT_EQ(v.lb_shifted, -1.0);
    EXPECT_EQ(v.ub_shifted, 1.0);
}

TEST(Verdict, RequiresNegativeFullDataValue) {
    EXPECT_THROW(verdict(0.0, 1.0, 2.0), InvalidInput);
    EXPECT_THROW(verdict(2.0, 1.0, 2.0), InvalidInput);
}

TEST(Verdict, InvariantToPositiveScaling) {
    for (double lb : {-1.0, 0.5, 2.0, 4.5})
        for (double ub : {lb, lb + 1.0, lb + 5.0})
            for (double c : {0.01, 3.0, 1e6}) EXPECT_EQ(verdict(-2.0, lb, ub).outcome, verdict(-2.0 * c, lb * c, ub * c).outcome);
}

TEST(Grids, DefaultAlphaGrid) {
    const auto g = default_alpha_grid(2000);
    ASSERT_EQ(g.size(), 11u);
    EXPECT_NEAR(g[0], 0.001, 1e-15);
    EXPECT_NEAR(g[1], std::pow(10.0, -3.0 + 1.0 / 9.0), 1e-15);
    EXPECT_NEAR(g[9], 0.01, 1e-15);
    EXPECT_DOUBLE_EQ(g[10], 1.0 / 2000.0);
    EXPECT_EQ(default_alpha_grid(1000).size(), 10u); // 1/N already on the grid
}

TEST(Grids, ZetaGrid) {
    const auto& z = default_zeta_grid();
    ASSERT_EQ(z.size(), 16u);
    EXPECT_EQ(z.front(), 0.0);
    EXPECT_EQ(z.back(), 1.0);
    EXPECT_TRUE(std::is_sorted(z.begin(), z.end()));
}

namespace {
ChainSource normal_source(const NormalModel& m, std::size_t S) {
    return [m, S](std::uint64_t seed) {
        SamplerConfig c;
        c.kind = SamplerKind::normal_exact;
        c.draws = S;
        c.seed = seed;
        return sample_normal_exact(m, c);
    };
}

NormalModel spread_model(std::size_t N) {
    NormalModel m;
    m.sigma = 1.0;
    for (std::size_t n = 0; n < N; ++n) m.x.push_back(std::sin(1.7 * static_cast<double>(n)) * 2.0 + 0.5);
    return m;
}
} // namespace

TEST(Coverage, RejectsSingleChain) {
    ExperimentConfig cfg;
    cfg.chains = 1;
    const std::vector<double> alphas{0.1};
    EXPECT_THROW(coverage_experiment(normal_source(spread_model(20), 100), QoiSpec::custom(1.0, 0.0), alphas, cfg),
                 InvalidInput);
}

TEST(Coverage, ReportShapeAndReuseOfSolver) {
    const auto m = spread_model(40);
    ExperimentConfig cfg;
    cfg.chains = 20;
    cfg.seed = 3;
    cfg.bootstrap.replicates = 50;
    const std::vector<double> alphas{0.05, 0.1};
    const auto q = QoiSpec::custom(1.0, 0.0);
    const auto rep = coverage_experiment(normal_source(m, 400), q, alphas, cfg);
    ASSERT_EQ(rep.records.size(), 2u);
    ASSERT_EQ(rep.averaged_influences.size(), 40u);
    for (std::size_t a = 0; a < 2; ++a) {
        const auto& r = rep.records[a];
        EXPECT_EQ(r.ground_truth, sosie(InfluenceVector{rep.averaged_influences}, alphas[a]).delta_hat);
        EXPECT_GE(r.coverage_point, 0.0);
        EXPECT_LE(r.coverage_point, 1.0);
        EXPECT_LE(r.coverage_interval.lb, r.coverage_point);
        EXPECT_GE(r.coverage_interval.ub, r.coverage_point);
        EXPECT_EQ(r.chains, 20u);
    }
}

TEST(Coverage, MonotoneInLevel) {
    const auto m = spread_model(40);
    ExperimentConfig cfg;
    cfg.chains = 40;
    cfg.seed = 4;
    cfg.bootstrap.replicates = 60;
    const std::vector<double> alphas{0.1};
    const auto q = QoiSpec::custom(1.0, 0.0);
    cfg.bootstrap.eta = 0.5;
    const auto low = coverage_experiment(normal_source(m, 400), q, alphas, cfg);
    cfg.bootstrap.eta = 0.95;
    const auto high = coverage_experiment(normal_source(m, 400), q, alphas, cfg);
    EXPECT_LE(low.records[0].covered, high.records[0].covered);
    EXPECT_LT(low.records[0].coverage_point, 0.8);
}

TEST(Coverage, AveragedInfluencesApproachBiasAdjustedTruth) {
    const auto m = spread_model(30);
    const std::size_t S = 500;
    ExperimentConfig cfg;
    cfg.chains = 100;
    cfg.seed = 5;
    cfg.bootstrap.replicates = 1;
    const std::vector<double> alphas{0.1};
    const auto rep = coverage_experiment(normal_source(m, S), QoiSpec::custom(1.0, 0.0), alphas, cfg);
    const auto truth = normal_influences(m);
    const double adj = (static_cast<double>(S) - 1.0) / static_cast<double>(S);
    const double xbar = detail::mean_of(m.x);
    for (std::size_t n = 0; n < m.size(); ++n) {
        // Var of (mu - xbar)(l_n - E l_n) is about 3 (x_n - xbar)^2 / N^2 + 1 / N^3; 100 chains averaged.
        const double c = m.x[n] - xbar;
        const double se = std::sqrt((3.0 * c * c / 900.0 + 1.0 / 27000.0) / S) / 10.0;
        EXPECT_NEAR(rep.averaged_influences[n], adj * truth[n], 5.0 * se) << "observation " << n;
    }
}

TEST(SoiCoverage, ZeroInfluenceSingletonCovered) {
    // x = (-1, 0, 1, ..., ): observation 1 equals the data mean, so its influence is 0.
    NormalModel m;
    m.sigma = 1.0;
    m.x = {-1.0, 0.0, 1.0, -2.0, 2.0, -0.5, 0.5, 0.0, -3.0, 3.0};
    ExperimentConfig cfg;
    cfg.chains = 100;
    cfg.seed = 6;
    cfg.bootstrap.replicates = 100;
    const auto rec = soi_coverage(normal_source(m, 1000), QoiSpec::custom(1.0, 0.0), IndexSet({1}), 0.0, cfg);
    EXPECT_NEAR(rec.coverage_point, 0.95, 0.1);
}

TEST(SoiCoverage, SkipsWhenNoNegativeAveragedInfluence) {
    const auto m = spread_model(20);
    ExperimentConfig cfg;
    cfg.chains = 2;
    const std::vector<double> alphas{0.2};
    std::vector<double> positive(20, 0.1);
    const auto rep = soi_coverage_experiment(normal_source(m, 100), QoiSpec::custom(1.0, 0.0), alphas, cfg, positive);
    ASSERT_EQ(rep.records.size(), 1u);
    EXPECT_TRUE(rep.records[0].skipped);
    EXPECT_FALSE(rep.records[0].note.empty());
}

TEST(Interpolation, EndpointsAndFirstOrderError) {
    NormalModel m;
    m.sigma = 1.3;
    for (int n = 0; n < 60; ++n) m.x.push_back(std::cos(0.9 * n) * 3.0 + (n % 7 == 0 ? 6.0 : 0.0));
    const auto q = QoiSpec::custom(-1.0, 0.0);
    const auto rep = interpolation_experiment(m, q, 0.05);
    ASSERT_EQ(rep.refit.size(), 16u);
    const double full = normal_qoi(m, q, WeightVector::ones(m.size()));
    EXPECT_EQ(rep.refit.front(), full);
    EXPECT_EQ(rep.linear.front(), full);
    EXPECT_EQ(rep.dropped.size(), 3u);
    // refit - linear at zeta = 1 is the first-order error of dropping U, negated for c1 = -1.
    const double err = normal_drop_errors(m, rep.dropped).err_first;
    EXPECT_NEAR(rep.refit.back() - rep.linear.back(), -err, 1e-12);
    double prev = 0.0;
    for (std::size_t i = 0; i < rep.refit.size(); ++i) {
        const double gap = std::abs(rep.refit[i] - rep.linear[i]);
        EXPECT_GE(gap, prev - 1e-15);
        prev = gap;
    }
}

TEST(Interpolation, NormalMeansEndpoints) {
    const NormalMeansModel m{{0.0, 2.0, 4.0, 1.0, 5.0, -1.0, 3.0, 2.5, 0.5, 1.5}, {0, 0, 0, 1, 1, 1, 2, 2, 2, 2}, 1.0, 1.0};
    const auto rep = interpolation_experiment(m, 0.1);
    EXPECT_EQ(rep.refit.front(), rep.linear.front());
    EXPECT_EQ(rep.dropped.size(), 1u);
    const auto drop = normal_means_drop_errors(m, rep.dropped);
    EXPECT_NEAR(rep.refit.back() - rep.linear.back(), drop.direct.err_first, 1e-12);
}
