#pragma once

// Influence estimation from posterior draws, plus the covariance-of-sample-
// covariances formula and its brute-force enumeration oracle.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "amip/core.hpp"

namespace amip {

/// Sample moments of g: m = mean g, k = mean g^2, v = k - m^2 (biased).
struct Moments {
    double m = 0.0;
    double k = 0.0;
    double v = 0.0;
};

namespace detail {

/// Iterates either every row of the bundle or an explicit (possibly
/// repeating) list of row indices, as a bootstrap resample would.
struct RowSelection {
    std::span<const std::size_t> rows;
    std::size_t all = 0;

    std::size_t count() const noexcept { return rows.empty() ? all : rows.size(); }
    std::size_t operator[](std::size_t i) const noexcept { return rows.empty() ? i : rows[i]; }
};

inline double clamp_variance(double v) { return (v < 0.0 && v > -1e-12) ? 0.0 : v; }

inline Moments moments_of(const DrawBundle& bundle, RowSelection sel) {
    const std::size_t count = sel.count();
    const auto g = bundle.g_values();
    double m = 0.0;
    double k = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = g[sel[i]];
        m += x;
        k += x * x;
    }
    m /= static_cast<double>(count);
    k /= static_cast<double>(count);
    double v = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = g[sel[i]] - m;
        v += d * d;
    }
    v = clamp_variance(v / static_cast<double>(count));
    return {m, k, v};
}

/// Centered two-pass influence kernel. `cols` restricts the output to a
/// subset of observations (empty = all, in order).
inline std::vector<double> influence_kernel(const DrawBundle& bundle, const QoiSpec& qoi, RowSelection sel,
                                            std::span<const std::size_t> cols = {}) {
    const std::size_t num_obs = bundle.observations();
    const std::size_t count = sel.count();
    const bool all_cols = cols.empty();
    const std::size_t width = all_cols ? num_obs : cols.size();
    const auto g = bundle.g_values();

    const Moments mom = moments_of(bundle, sel);
    const bool need_sd = qoi.c2 != 0.0;
    if (need_sd && mom.v <= 1e-300)
        throw NumericError("posterior variance of g is zero; the sd term of the QoI is undefined");

    std::vector<double> u(width, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        const auto row = bundle.row(sel[i]);
        if (all_cols) {
            for (std::size_t n = 0; n < width; ++n) u[n] += row[n];
        } else {
            for (std::size_t c = 0; c < width; ++c) u[c] += row[cols[c]];
        }
    }
    for (double& x : u) x /= static_cast<double>(count);

    std::vector<double> f(width, 0.0);
    std::vector<double> h(need_sd ? width : 0, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t s = sel[i];
        const auto row = bundle.row(s);
        const double dg = g[s] - mom.m;
        const double dq = dg * dg - mom.v;
        if (all_cols) {
            if (need_sd) {
                for (std::size_t n = 0; n < width; ++n) {
                    const double dl = row[n] - u[n];
                    f[n] += dg * dl;
                    h[n] += dq * dl;
                }
            } else {
                for (std::size_t n = 0; n < width; ++n) f[n] += dg * (row[n] - u[n]);
            }
        } else {
            for (std::size_t c = 0; c < width; ++c) {
                const double dl = row[cols[c]] - u[c];
                f[c] += dg * dl;
                if (need_sd) h[c] += dq * dl;
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(count);
    const double inv_sd = need_sd ? 1.0 / std::sqrt(mom.v) : 0.0;
    std::vector<double> psi(width);
    for (std::size_t c = 0; c < width; ++c) {
        double value = qoi.c1 * f[c] * inv;
        if (need_sd) value += qoi.c2 * h[c] * inv * inv_sd;
        if (!std::isfinite(value))
            throw NumericError("non-finite influence estimate for observation " + std::to_string(all_cols ? c : cols[c]));
        psi[c] = value;
    }
    return psi;
}

} // namespace detail

inline Moments moments(const DrawBundle& bundle) {
    return detail::moments_of(bundle, {{}, bundle.draws()});
}

/// Estimated influences psi_hat_n = c1 * Cov(g, l_n) + c2 * dsd/dw_n, all
/// covariances biased (divide by S).
inline InfluenceVector influence_estimates(const DrawBundle& bundle, const QoiSpec& qoi) {
    return {detail::influence_kernel(bundle, qoi, {{}, bundle.draws()})};
}

/// Same estimate on a resample given as row indices into `bundle`.
inline InfluenceVector influence_estimates(const DrawBundle& bundle, const QoiSpec& qoi,
                                           std::span<const std::size_t> rows) {
    return {detail::influence_kernel(bundle, qoi, {rows, bundle.draws()})};
}

/// Raw-moment form, line for line: a, b, u as plain averages, then
/// f = a - m u and h = ((b - k u) - 2 m f) / sqrt(v). Cancels badly when g or
/// l_n have large means; kept as a cross-check of the centered kernel.
inline InfluenceVector influence_estimates_raw(const DrawBundle& bundle, const QoiSpec& qoi) {
    const std::size_t S = bundle.draws();
    const std::size_t N = bundle.observations();
    const auto g = bundle.g_values();
    double m = 0.0, k = 0.0;
    for (double x : g) {
        m += x;
        k += x * x;
    }
    m /= static_cast<double>(S);
    k /= static_cast<double>(S);
    const double v = detail::clamp_variance(k - m * m);
    if (qoi.c2 != 0.0 && v <= 1e-300)
        throw NumericError("posterior variance of g is zero; the sd term of the QoI is undefined");
    InfluenceVector out{std::vector<double>(N)};
    for (std::size_t n = 0; n < N; ++n) {
        double a = 0.0, b = 0.0, u = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double l = bundle.loglik_at(s, n);
            a += g[s] * l;
            b += g[s] * g[s] * l;
            u += l;
        }
        a /= static_cast<double>(S);
        b /= static_cast<double>(S);
        u /= static_cast<double>(S);
        const double f = a - m * u;
        double psi = qoi.c1 * f;
        if (qoi.c2 != 0.0) psi += qoi.c2 * ((b - k * u) - 2.0 * m * f) / std::sqrt(v);
        out.psi[n] = psi;
    }
    return out;
}

struct AsymptoticCovEstimate {
    double sigma_ij = 0.0;
    /// False when the bundle is not tagged exact_iid; the estimate then
    /// ignores autocorrelation and is not a consistent estimate of Sigma.
    bool exact_iid = false;
};

/// Biased sample covariance, over draws, of (g - m)(l_i - u_i) and
/// (g - m)(l_j - u_j): a plug-in estimate of Sigma_{i,j}.
inline AsymptoticCovEstimate asymptotic_cov_estimate(const DrawBundle& bundle, std::size_t i, std::size_t j) {
    const std::size_t S = bundle.draws();
    if (i >= bundle.observations() || j >= bundle.observations())
        throw InvalidInput("observation index out of range");
    const auto g = bundle.g_values();
    const double m = detail::sample_mean(g);
    double ui = 0.0, uj = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        ui += bundle.loglik_at(s, i);
        uj += bundle.loglik_at(s, j);
    }
    ui /= static_cast<double>(S);
    uj /= static_cast<double>(S);
    std::vector<double> pi(S), pj(S);
    double mi = 0.0, mj = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        pi[s] = (g[s] - m) * (bundle.loglik_at(s, i) - ui);
        pj[s] = (g[s] - m) * (bundle.loglik_at(s, j) - uj);
        mi += pi[s];
        mj += pj[s];
    }
    mi /= static_cast<double>(S);
    mj /= static_cast<double>(S);
    // Symmetric in (i, j) term by term, so swapping arguments is exact.
    double acc = 0.0;
    for (std::size_t s = 0; s < S; ++s) acc += (pi[s] - mi) * (pj[s] - mj);
    return {acc / static_cast<double>(S), bundle.sampling_kind() == SamplingKind::exact_iid};
}

/// One support point of a finite joint distribution of (A, B, C).
struct TripleAtom {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double prob = 0.0;
};

using DiscreteTriple = std::vector<TripleAtom>;

namespace detail {
inline void validate_triple(const DiscreteTriple& dist) {
    if (dist.empty()) throw InvalidInput("joint distribution has empty support");
    double total = 0.0;
    for (const auto& t : dist) {
        if (!(t.prob >= 0.0)) throw InvalidInput("negative probability in joint distribution");
        total += t.prob;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("joint distribution probabilities must sum to 1");
}
} // namespace detail

/// Exact Cov(f1, f2) for the biased sample covariances f1 = Cov_S(A, B) and
/// f2 = Cov_S(A, C) over S i.i.d. draws, from population moments.
inline double exact_cov_of_sample_covariances(const DiscreteTriple& dist, std::size_t S) {
    detail::validate_triple(dist);
    if (S < 2) throw InvalidInput("S must be at least 2");
    double ea = 0.0, eb = 0.0, ec = 0.0;
    for (const auto& t : dist) {
        ea += t.prob * t.a;
        eb += t.prob * t.b;
        ec += t.prob * t.c;
    }
    double m4 = 0.0, cov_bc = 0.0, var_a = 0.0, cov_ab = 0.0, cov_ac = 0.0;
    for (const auto& t : dist) {
        const double da = t.a - ea, db = t.b - eb, dc = t.c - ec;
        m4 += t.prob * da * da * db * dc;
        cov_bc += t.prob * db * dc;
        var_a += t.prob * da * da;
        cov_ab += t.prob * da * db;
        cov_ac += t.prob * da * dc;
    }
    const double s = static_cast<double>(S);
    const double s3 = s * s * s;
    return (s - 1.0) * (s - 1.0) / s3 * m4 + (s - 1.0) / s3 * cov_bc * var_a -
           (s - 1.0) * (s - 2.0) / s3 * cov_ab * cov_ac;
}

/// Cov(f1, f2) by enumerating every S-tuple of i.i.d. draws. Capped at
/// |support| <= 4 and S <= 4 (at most 256 tuples).
inline double brute_force_cov_of_cov(const DiscreteTriple& dist, std::size_t S) {
    detail::validate_triple(dist);
    if (S < 2) throw InvalidInput("S must be at least 2");
    if (S > 4 || dist.size() > 4) throw InvalidInput("enumeration cap exceeded (S <= 4, support <= 4)");
    const std::size_t K = dist.size();
    std::size_t tuples = 1;
    for (std::size_t i = 0; i < S; ++i) tuples *= K;

    std::vector<std::size_t> pick(S);
    double e1 = 0.0, e2 = 0.0, e12 = 0.0;
    const double inv = 1.0 / static_cast<double>(S);
    for (std::size_t code = 0; code < tuples; ++code) {
        std::size_t rest = code;
        double p = 1.0;
        for (std::size_t s = 0; s < S; ++s) {
            pick[s] = rest % K;
            rest /= K;
            p *= dist[pick[s]].prob;
        }
        double sa = 0.0, sb = 0.0, sc = 0.0, sab = 0.0, sac = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const auto& t = dist[pick[s]];
            sa += t.a;
            sb += t.b;
            sc += t.c;
            sab += t.a * t.b;
            sac += t.a * t.c;
        }
        const double f1 = sab * inv - sa * inv * sb * inv;
        const double f2 = sac * inv - sa * inv * sc * inv;
        e1 += p * f1;
        e2 += p * f2;
        e12 += p * f1 * f2;
    }
    return e12 - e1 * e2;
}

} // namespace amip
