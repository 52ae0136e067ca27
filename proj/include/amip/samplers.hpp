#pragma once

// Draw bundles from the conjugate models: exact i.i.d. posterior samples, and
// a random-walk Metropolis chain for the normal model.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "amip/core.hpp"
#include "amip/oracles.hpp"
#include "amip/random.hpp"

namespace amip {

enum class SamplerKind { normal_exact, normal_means_exact, normal_gamma_exact, metropolis };

struct SamplerConfig {
    std::size_t draws = 1000; ///< S
    std::uint64_t seed = 0;
    SamplerKind kind = SamplerKind::normal_exact;
    double step_scale = 0.0;  ///< metropolis proposal sd; <= 0 selects 2.4 sigma / sqrt(N)
    std::size_t burn_in = 0;  ///< metropolis iterations discarded before recording

    void validate() const {
        if (draws < 2) throw InvalidInput("sampler needs S >= 2");
    }
};

namespace detail {
inline void expect_kind(const SamplerConfig& cfg, SamplerKind kind) {
    cfg.validate();
    if (cfg.kind != kind) throw InvalidInput("sampler config kind does not match the requested sampler");
}

/// 0.5 log(precision / 2 pi) - 0.5 precision (x - mean)^2.
inline double gaussian_loglik(double x, double mean, double precision) {
    const double d = x - mean;
    return 0.5 * std::log(precision / (2.0 * std::numbers::pi)) - 0.5 * precision * d * d;
}
} // namespace detail

inline DrawBundle sample_normal_exact(const NormalModel& model, const SamplerConfig& cfg) {
    detail::expect_kind(cfg, SamplerKind::normal_exact);
    model.validate();
    const std::size_t N = model.size();
    const double xbar = detail::mean_of(model.x);
    const double sd = model.sigma / std::sqrt(static_cast<double>(N));
    const double precision = 1.0 / (model.sigma * model.sigma);
    Rng rng(cfg.seed);
    std::vector<double> g(cfg.draws);
    std::vector<double> ll(cfg.draws * N);
    for (std::size_t s = 0; s < cfg.draws; ++s) {
        const double mu = rng.normal(xbar, sd);
        g[s] = mu;
        for (std::size_t n = 0; n < N; ++n) ll[s * N + n] = detail::gaussian_loglik(model.x[n], mu, precision);
    }
    return DrawBundle(std::move(g), std::move(ll), N, SamplingKind::exact_iid);
}

/// tau ~ Gamma(shape, rate), mu = xbar + eps / sqrt(N tau); g = mu.
inline DrawBundle sample_normal_gamma_exact(const NormalGammaModel& model, const SamplerConfig& cfg) {
    detail::expect_kind(cfg, SamplerKind::normal_gamma_exact);
    const auto post = normal_gamma_posterior(model);
    const std::size_t N = model.size();
    Rng rng(cfg.seed);
    std::vector<double> g(cfg.draws);
    std::vector<double> ll(cfg.draws * N);
    for (std::size_t s = 0; s < cfg.draws; ++s) {
        const double tau = rng.gamma(post.shape, post.rate);
        const double mu = post.location + rng.normal() / std::sqrt(static_cast<double>(N) * tau);
        g[s] = mu;
        for (std::size_t n = 0; n < N; ++n) ll[s * N + n] = detail::gaussian_loglik(model.x[n], mu, tau);
    }
    return DrawBundle(std::move(g), std::move(ll), N, SamplingKind::exact_iid);
}

/// mu from its marginal N(mu*, 1/Lambda*), then theta_g | mu independent
/// normals; g = mu, l_n evaluated at theta_{g(n)}.
inline DrawBundle sample_normal_means_exact(const NormalMeansModel& model, const SamplerConfig& cfg) {
    detail::expect_kind(cfg, SamplerKind::normal_means_exact);
    const std::vector<double> ones(model.size(), 1.0);
    const auto summary = normal_means_summary(model, ones);
    const std::size_t N = model.size();
    const std::size_t G = summary.count.size();
    const double s2 = model.sigma * model.sigma;
    const double t2 = model.tau * model.tau;
    const double precision = 1.0 / s2;
    std::vector<double> cond_prec(G);
    for (std::size_t k = 0; k < G; ++k) cond_prec[k] = 1.0 / t2 + summary.count[k] / s2;

    Rng rng(cfg.seed);
    std::vector<double> g(cfg.draws);
    std::vector<double> ll(cfg.draws * N);
    std::vector<double> theta(G);
    for (std::size_t s = 0; s < cfg.draws; ++s) {
        const double mu = rng.normal(summary.mu, 1.0 / std::sqrt(summary.lambda));
        for (std::size_t k = 0; k < G; ++k) {
            const double mean = (mu / t2 + summary.count[k] * summary.mean[k] / s2) / cond_prec[k];
            theta[k] = rng.normal(mean, 1.0 / std::sqrt(cond_prec[k]));
        }
        g[s] = mu;
        for (std::size_t n = 0; n < N; ++n)
            ll[s * N + n] = detail::gaussian_loglik(model.x[n], theta[model.group[n]], precision);
    }
    return DrawBundle(std::move(g), std::move(ll), N, SamplingKind::exact_iid);
}

struct MetropolisRun {
    DrawBundle bundle;
    double acceptance_rate = 0.0;
    double lag1_autocorrelation = 0.0;
};

inline double lag1_autocorrelation(std::span<const double> x) {
    const double m = detail::sample_mean(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        den += (x[i] - m) * (x[i] - m);
        if (i + 1 < x.size()) num += (x[i] - m) * (x[i + 1] - m);
    }
    return den > 0.0 ? num / den : 0.0;
}

/// Random-walk Metropolis on the normal-model posterior of mu, started at xbar.
inline MetropolisRun sample_metropolis(const NormalModel& model, const SamplerConfig& cfg) {
    detail::expect_kind(cfg, SamplerKind::metropolis);
    model.validate();
    const std::size_t N = model.size();
    const double step = cfg.step_scale > 0.0 ? cfg.step_scale
                                             : 2.4 * model.sigma / std::sqrt(static_cast<double>(N));
    const double precision = 1.0 / (model.sigma * model.sigma);
    auto log_post = [&](double mu) {
        double lp = 0.0;
        for (double x : model.x) lp += detail::gaussian_loglik(x, mu, precision);
        return lp;
    };

    Rng rng(cfg.seed);
    double mu = detail::mean_of(model.x);
    double lp = log_post(mu);
    std::size_t accepted = 0;
    const std::size_t total = cfg.burn_in + cfg.draws;
    std::vector<double> g;
    std::vector<double> ll;
    g.reserve(cfg.draws);
    ll.reserve(cfg.draws * N);
    for (std::size_t it = 0; it < total; ++it) {
        const double proposal = mu + step * rng.normal();
        const double lp_prop = log_post(proposal);
        if (std::log(rng.uniform()) < lp_prop - lp) {
            mu = proposal;
            lp = lp_prop;
            ++accepted;
        }
        if (it < cfg.burn_in) continue;
        g.push_back(mu);
        for (double x : model.x) ll.push_back(detail::gaussian_loglik(x, mu, precision));
    }
    const double rate = static_cast<double>(accepted) / static_cast<double>(total);
    const double rho = lag1_autocorrelation(g);
    return {DrawBundle(std::move(g), std::move(ll), N, SamplingKind::markov_chain), rate, rho};
}

} // namespace amip
