#pragma once

// Experimental procedures at desk scale: interval coverage for the AMIP and
// for sums of influences, the interpolation-path linearity check, and the
// three-way robustness verdict.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amip/amip.hpp"
#include "amip/core.hpp"
#include "amip/estimator.hpp"
#include "amip/oracles.hpp"
#include "amip/parallel.hpp"
#include "amip/random.hpp"
#include "amip/resample.hpp"

namespace amip {

enum class Outcome { non_robust, robust, abstain };

inline const char* to_string(Outcome o) {
    switch (o) {
    case Outcome::non_robust: return "non_robust";
    case Outcome::robust: return "robust";
    default: return "abstain";
    }
}

struct Verdict {
    Outcome outcome = Outcome::abstain;
    double phi_full = 0.0;
    double lb_shifted = 0.0;
    double ub_shifted = 0.0;
};

/// Compares [phi_full + lb, phi_full + ub] with zero. phi_full must be
/// negative (the QoI convention).
inline Verdict verdict(double phi_full, double lb, double ub) {
    if (!(phi_full < 0.0))
        throw InvalidInput("phi(1_N) must be negative; re-resolve the QoI so the full-data value is below zero");
    Verdict v{Outcome::abstain, phi_full, phi_full + lb, phi_full + ub};
    if (v.lb_shifted > 0.0)
        v.outcome = Outcome::non_robust;
    else if (v.ub_shifted < 0.0)
        v.outcome = Outcome::robust;
    return v;
}

inline Verdict verdict(double phi_full, const IntervalResult& interval) {
    return verdict(phi_full, interval.lb, interval.ub);
}

/// `count` values with log10 equally spaced on [log10 lo, log10 hi].
inline std::vector<double> log10_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi >= lo) || count < 1) throw InvalidInput("log grid needs 0 < lo <= hi and count >= 1");
    std::vector<double> out(count);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = count == 1 ? lo : std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

/// 0.1% .. 1% on a 10-point log grid, followed by the single-observation
/// fraction 1/N.
inline std::vector<double> default_alpha_grid(std::size_t num_obs) {
    auto grid = log10_grid(1e-3, 1e-2, 10);
    const double single = 1.0 / static_cast<double>(num_obs);
    if (std::none_of(grid.begin(), grid.end(), [&](double a) { return std::abs(a - single) <= 1e-12 * single; }))
        grid.push_back(single);
    return grid;
}

inline const std::vector<double>& default_zeta_grid() {
    static const std::vector<double> grid{0.0,    0.0010, 0.0016, 0.0027, 0.0044, 0.0072, 0.0118, 0.0193,
                                          0.0316, 0.0518, 0.0848, 0.1389, 0.2276, 0.3728, 0.6105, 1.0};
    return grid;
}

/// Produces one independent bundle per seed (an exact sampler or a chain).
using ChainSource = std::function<DrawBundle(std::uint64_t seed)>;

struct ExperimentConfig {
    std::size_t chains = 200;       ///< J
    std::uint64_t seed = 0;         ///< chain j uses stream_seed(seed, j)
    BootstrapConfig bootstrap;      ///< chain j bootstraps with stream_seed(bootstrap.seed, j)
    std::size_t threads = 1;        ///< workers across chains
};

struct CoverageRecord {
    double alpha = 0.0;
    std::size_t budget = 0;
    double ground_truth = 0.0;      ///< Delta-tilde (amip) or sum of psi-tilde over I (soi)
    IndexSet target_set;            ///< U-tilde
    std::size_t covered = 0;
    std::size_t chains = 0;         ///< J
    double coverage_point = 0.0;
    ProportionInterval coverage_interval;
    bool skipped = false;
    std::string note;
};

struct CoverageReport {
    std::vector<CoverageRecord> records;
    std::vector<double> averaged_influences; ///< psi-tilde
    std::size_t draws = 0;                   ///< S of the first chain
};

namespace detail {
inline void finish_record(CoverageRecord& rec) {
    rec.coverage_point = static_cast<double>(rec.covered) / static_cast<double>(rec.chains);
    rec.coverage_interval = clopper_pearson(rec.covered, rec.chains, 0.95);
}

inline BootstrapConfig chain_bootstrap(const ExperimentConfig& cfg, std::uint64_t stream) {
    BootstrapConfig b = cfg.bootstrap;
    b.seed = stream_seed(cfg.bootstrap.seed, stream);
    b.threads = 1;
    return b;
}
} // namespace detail

/// Runs J chains; psi-tilde is the across-chain mean of psi-hat, Delta-tilde
/// and U-tilde come from the sorted-sum solver on psi-tilde, and coverage is
/// the fraction of chains whose AMIP interval contains Delta-tilde.
inline CoverageReport coverage_experiment(const ChainSource& source, const QoiSpec& qoi,
                                          std::span<const double> alphas, const ExperimentConfig& cfg) {
    if (cfg.chains < 2) throw InvalidInput("coverage needs at least two chains (J >= 2)");
    struct ChainResult {
        std::vector<double> psi;
        std::vector<double> lb, ub;
        std::size_t draws = 0;
    };
    std::vector<ChainResult> results(cfg.chains);
    parallel_for(cfg.chains, cfg.threads, [&](std::size_t j) {
        const DrawBundle bundle = source(stream_seed(cfg.seed, j));
        ChainResult r;
        r.draws = bundle.draws();
        r.psi = influence_estimates(bundle, qoi).psi;
        for (const auto& iv : ci_for_amip_grid(bundle, qoi, alphas, detail::chain_bootstrap(cfg, j))) {
            r.lb.push_back(iv.lb);
            r.ub.push_back(iv.ub);
        }
        results[j] = std::move(r);
    });

    CoverageReport report;
    report.draws = results.front().draws;
    const std::size_t N = results.front().psi.size();
    report.averaged_influences.assign(N, 0.0);
    for (const auto& r : results)
        for (std::size_t n = 0; n < N; ++n) report.averaged_influences[n] += r.psi[n];
    for (double& v : report.averaged_influences) v /= static_cast<double>(cfg.chains);

    const InfluenceVector averaged{report.averaged_influences};
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const auto best = sosie(averaged, alphas[a]);
        CoverageRecord rec;
        rec.alpha = alphas[a];
        rec.budget = best.budget;
        rec.ground_truth = best.delta_hat;
        rec.target_set = best.dropped;
        rec.chains = cfg.chains;
        for (const auto& r : results) rec.covered += (r.lb[a] <= rec.ground_truth && rec.ground_truth <= r.ub[a]);
        detail::finish_record(rec);
        report.records.push_back(std::move(rec));
    }
    return report;
}

/// Coverage of the sum-of-influence interval for a fixed target set and
/// target value. Chain j uses stream_seed(cfg.seed, stream_offset + j).
inline CoverageRecord soi_coverage(const ChainSource& source, const QoiSpec& qoi, const IndexSet& set,
                                   double target, const ExperimentConfig& cfg, std::uint64_t stream_offset = 0) {
    if (cfg.chains < 2) throw InvalidInput("coverage needs at least two chains (J >= 2)");
    std::vector<char> hit(cfg.chains, 0);
    parallel_for(cfg.chains, cfg.threads, [&](std::size_t j) {
        const DrawBundle bundle = source(stream_seed(cfg.seed, stream_offset + j));
        const auto iv = ci_for_sum_of_influence(bundle, qoi, set, detail::chain_bootstrap(cfg, stream_offset + j));
        hit[j] = iv.lb <= target && target <= iv.ub;
    });
    CoverageRecord rec;
    rec.ground_truth = target;
    rec.target_set = set;
    rec.chains = cfg.chains;
    for (char h : hit) rec.covered += static_cast<std::size_t>(h);
    detail::finish_record(rec);
    return rec;
}

/// For each alpha, targets I = U-tilde_alpha and sum_{n in I} psi-tilde_n,
/// evaluated on a second, independent set of J chains. Pass psi-tilde from a
/// previous coverage_experiment; if absent, a first set of J chains is run
/// to obtain it.
inline CoverageReport soi_coverage_experiment(const ChainSource& source, const QoiSpec& qoi,
                                              std::span<const double> alphas, const ExperimentConfig& cfg,
                                              std::optional<std::vector<double>> averaged = std::nullopt) {
    if (cfg.chains < 2) throw InvalidInput("coverage needs at least two chains (J >= 2)");
    CoverageReport report;
    if (averaged) {
        report.averaged_influences = std::move(*averaged);
    } else {
        std::vector<std::vector<double>> psi(cfg.chains);
        parallel_for(cfg.chains, cfg.threads, [&](std::size_t j) {
            psi[j] = influence_estimates(source(stream_seed(cfg.seed, j)), qoi).psi;
        });
        report.averaged_influences.assign(psi.front().size(), 0.0);
        for (const auto& p : psi)
            for (std::size_t n = 0; n < p.size(); ++n) report.averaged_influences[n] += p[n];
        for (double& v : report.averaged_influences) v /= static_cast<double>(cfg.chains);
    }
    const InfluenceVector avg{report.averaged_influences};
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const auto best = sosie(avg, alphas[a]);
        CoverageRecord rec;
        if (best.dropped.empty()) {
            rec.alpha = alphas[a];
            rec.budget = best.budget;
            rec.chains = cfg.chains;
            rec.skipped = true;
            rec.note = "no negative averaged influence within budget; nothing to target";
        } else {
            // Second set of chains: streams J .. 2J-1.
            rec = soi_coverage(source, qoi, best.dropped, avg.sum_over(best.dropped), cfg, cfg.chains);
            rec.alpha = alphas[a];
            rec.budget = best.budget;
        }
        report.records.push_back(std::move(rec));
    }
    return report;
}

struct InterpolationReport {
    std::vector<double> zeta_grid;
    std::vector<double> refit;  ///< exact phi(zeta w* + (1 - zeta) 1_N)
    std::vector<double> linear; ///< phi(1_N) + zeta * Delta
    double alpha_star = 0.05;
    IndexSet dropped;           ///< zero set of w*
    double delta = 0.0;
};

/// Walks w(zeta) = zeta w* + (1 - zeta) 1_N, where w* removes the
/// floor(alpha* N) most negative influences, and compares the exact QoI
/// `phi` with its first-order prediction.
inline InterpolationReport interpolation_experiment(const std::function<double(const WeightVector&)>& phi,
                                                   const InfluenceVector& psi, double alpha_star = 0.05,
                                                   std::span<const double> zeta_grid = default_zeta_grid()) {
    const std::size_t N = psi.size();
    const auto best = sosie(psi, alpha_star);
    InterpolationReport r;
    r.alpha_star = alpha_star;
    r.dropped = best.dropped;
    r.delta = best.delta_hat;
    r.zeta_grid.assign(zeta_grid.begin(), zeta_grid.end());
    const double full = phi(WeightVector::ones(N));
    for (double zeta : r.zeta_grid) {
        if (!(zeta >= 0.0 && zeta <= 1.0)) throw InvalidInput("zeta must lie in [0, 1]");
        std::vector<double> w(N, 1.0);
        for (std::size_t i : best.dropped) w[i] = 1.0 - zeta;
        const WeightVector wz(std::move(w));
        r.refit.push_back(zeta == 0.0 ? full : phi(wz));
        r.linear.push_back(taylor_predict(full, psi, wz));
    }
    return r;
}

inline InterpolationReport interpolation_experiment(const NormalModel& model, const QoiSpec& qoi,
                                                   double alpha_star = 0.05,
                                                   std::span<const double> zeta_grid = default_zeta_grid()) {
    return interpolation_experiment([&](const WeightVector& w) { return normal_qoi(model, qoi, w); },
                                    normal_influences(model, qoi), alpha_star, zeta_grid);
}

/// Normal-means model, QoI = posterior mean of mu.
inline InterpolationReport interpolation_experiment(const NormalMeansModel& model, double alpha_star = 0.05,
                                                   std::span<const double> zeta_grid = default_zeta_grid()) {
    return interpolation_experiment(
        [&](const WeightVector& w) { return normal_means_weighted_posterior(model, w).mean; },
        normal_means_influences(model), alpha_star, zeta_grid);
}

} // namespace amip
