#pragma once

// Vanilla and non-overlapping block bootstrap over draws, quantile intervals
// for the AMIP and for sums of influences, and Clopper-Pearson intervals.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "amip/amip.hpp"
#include "amip/core.hpp"
#include "amip/estimator.hpp"
#include "amip/parallel.hpp"
#include "amip/random.hpp"

namespace amip {

enum class BootstrapMode { iid, block };

inline const char* to_string(BootstrapMode m) { return m == BootstrapMode::iid ? "iid" : "block"; }

struct BootstrapConfig {
    std::size_t replicates = 200; ///< B
    std::size_t block_length = 10; ///< L
    double eta = 0.95;
    BootstrapMode mode = BootstrapMode::block;
    std::uint64_t seed = 0;
    std::size_t threads = 1; ///< never changes results

    void validate(std::size_t draws) const {
        if (replicates < 1) throw InvalidInput("bootstrap needs at least one replicate");
        if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in (0, 1)");
        if (mode == BootstrapMode::block && (block_length < 1 || block_length > draws))
            throw InvalidInput("block length must satisfy 1 <= L <= S");
    }
};

struct IntervalResult {
    double lb = 0.0;
    double ub = 0.0;
    std::vector<double> replicate_values;
};

/// Sample quantile by linear interpolation of order statistics (R's default,
/// type 7): h = (n - 1) p, result x[floor h] + frac(h) (x[floor h + 1] - x[floor h]).
inline double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidInput("quantile of an empty sequence");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

/// Row indices of one block-bootstrap resample: M = floor(S/L) blocks drawn
/// with replacement and concatenated (M * L rows; trailing rows unused).
inline std::vector<std::size_t> block_resample_rows(std::size_t draws, std::size_t block_length, Rng& rng) {
    if (block_length < 1 || block_length > draws) throw InvalidInput("block length must satisfy 1 <= L <= S");
    const std::size_t blocks = draws / block_length;
    std::vector<std::size_t> rows;
    rows.reserve(blocks * block_length);
    for (std::size_t m = 0; m < blocks; ++m) {
        const std::size_t start = static_cast<std::size_t>(rng.below(blocks)) * block_length;
        for (std::size_t r = 0; r < block_length; ++r) rows.push_back(start + r);
    }
    return rows;
}

inline std::vector<std::size_t> iid_resample_rows(std::size_t draws, Rng& rng) {
    std::vector<std::size_t> rows(draws);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(draws));
    return rows;
}

inline DrawBundle block_resample(const DrawBundle& bundle, std::size_t block_length, Rng& rng) {
    const auto rows = block_resample_rows(bundle.draws(), block_length, rng);
    return bundle.select_rows(rows);
}

inline std::vector<std::size_t> resample_rows(const DrawBundle& bundle, const BootstrapConfig& cfg, Rng& rng) {
    return cfg.mode == BootstrapMode::block ? block_resample_rows(bundle.draws(), cfg.block_length, rng)
                                            : iid_resample_rows(bundle.draws(), rng);
}

/// Evaluates stat(rows) on B resamples; replicate b draws from
/// stream_seed(cfg.seed, b), so results are independent of scheduling.
template <class Stat>
auto bootstrap_replicates(const DrawBundle& bundle, const BootstrapConfig& cfg, Stat&& stat) {
    cfg.validate(bundle.draws());
    using Result = std::decay_t<decltype(stat(std::span<const std::size_t>{}))>;
    std::vector<Result> out(cfg.replicates);
    parallel_for(cfg.replicates, cfg.threads, [&](std::size_t b) {
        Rng rng(stream_seed(cfg.seed, b));
        const auto rows = resample_rows(bundle, cfg, rng);
        out[b] = stat(std::span<const std::size_t>(rows));
    });
    return out;
}

inline IntervalResult interval_from_replicates(std::vector<double> values, double eta) {
    IntervalResult r;
    r.lb = quantile(values, (1.0 - eta) / 2.0);
    r.ub = quantile(values, (1.0 + eta) / 2.0);
    r.replicate_values = std::move(values);
    return r;
}

/// Bootstrap interval for any scalar statistic of the draws.
template <class Stat>
IntervalResult ci_for_statistic(const DrawBundle& bundle, const BootstrapConfig& cfg, Stat&& stat) {
    auto values = bootstrap_replicates(bundle, cfg, std::forward<Stat>(stat));
    return interval_from_replicates(std::move(values), cfg.eta);
}

/// Intervals for the AMIP at several alphas from one shared set of
/// replicates; entry i equals ci_for_amip(bundle, qoi, alphas[i], cfg).
inline std::vector<IntervalResult> ci_for_amip_grid(const DrawBundle& bundle, const QoiSpec& qoi,
                                                    std::span<const double> alphas, const BootstrapConfig& cfg) {
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
    auto per_rep = bootstrap_replicates(bundle, cfg, [&](std::span<const std::size_t> rows) {
        const auto psi = influence_estimates(bundle, qoi, rows);
        const auto order = ascending_ranks(psi);
        std::vector<double> deltas;
        deltas.reserve(alphas.size());
        for (double a : alphas) deltas.push_back(sosie_ranked(psi, order, a).delta_hat);
        return deltas;
    });
    std::vector<IntervalResult> out;
    out.reserve(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        std::vector<double> values(per_rep.size());
        for (std::size_t b = 0; b < per_rep.size(); ++b) values[b] = per_rep[b][i];
        out.push_back(interval_from_replicates(std::move(values), cfg.eta));
    }
    return out;
}

inline IntervalResult ci_for_amip(const DrawBundle& bundle, const QoiSpec& qoi, double alpha,
                                  const BootstrapConfig& cfg) {
    const double alphas[] = {alpha};
    return std::move(ci_for_amip_grid(bundle, qoi, alphas, cfg).front());
}

/// Interval for sum_{n in I} psi_hat_n; only the columns in I are touched.
inline IntervalResult ci_for_sum_of_influence(const DrawBundle& bundle, const QoiSpec& qoi, const IndexSet& set,
                                              const BootstrapConfig& cfg) {
    if (set.empty()) throw InvalidInput("sum-of-influence target needs a nonempty index set");
    for (std::size_t i : set)
        if (i >= bundle.observations()) throw InvalidInput("index set exceeds the number of observations");
    return ci_for_statistic(bundle, cfg, [&](std::span<const std::size_t> rows) {
        const auto part = detail::influence_kernel(bundle, qoi, {rows, bundle.draws()}, set.indices());
        double s = 0.0;
        for (double x : part) s += x;
        return s;
    });
}

/// Bootstrap interval for the posterior mean of g.
inline IntervalResult ci_for_posterior_mean(const DrawBundle& bundle, const BootstrapConfig& cfg) {
    const auto g = bundle.g_values();
    return ci_for_statistic(bundle, cfg, [&](std::span<const std::size_t> rows) {
        double s = 0.0;
        for (std::size_t r : rows) s += g[r];
        return s / static_cast<double>(rows.size());
    });
}

struct ProportionInterval {
    double lb = 0.0;
    double ub = 1.0;
};

/// Exact (Clopper-Pearson) binomial interval from beta quantiles.
inline ProportionInterval clopper_pearson(std::size_t successes, std::size_t trials, double level = 0.95) {
    if (trials < 1 || successes > trials) throw InvalidInput("need 0 <= successes <= trials and trials >= 1");
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("level must lie in (0, 1)");
    const double x = static_cast<double>(successes);
    const double n = static_cast<double>(trials);
    const double tail = (1.0 - level) / 2.0;
    ProportionInterval r;
    r.lb = successes == 0 ? 0.0 : boost::math::ibeta_inv(x, n - x + 1.0, tail);
    r.ub = successes == trials ? 1.0 : boost::math::ibeta_inv(x + 1.0, n - x, 1.0 - tail);
    return r;
}

} // namespace amip
