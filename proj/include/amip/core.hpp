#pragma once

// Domain types shared by every module: draw bundles, quantity-of-interest
// specs, weight vectors and index sets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace amip {

/// Bad input: malformed data, violated preconditions. Maps to CLI exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure during estimation (degenerate posterior, non-finite
/// intermediate). Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Standard normal 0.975 quantile.
inline constexpr double kDefaultZ = 1.959963984540054;

enum class SamplingKind { exact_iid, markov_chain, unknown };

inline const char* to_string(SamplingKind k) {
    switch (k) {
    case SamplingKind::exact_iid: return "exact_iid";
    case SamplingKind::markov_chain: return "markov_chain";
    default: return "unknown";
    }
}

/// S posterior draws reduced to the QoI evaluations g(beta^(s)) and the S x N
/// matrix of per-observation log-likelihoods (row-major, one row per draw).
class DrawBundle {
public:
    DrawBundle(std::vector<double> g_values, std::vector<double> loglik, std::size_t num_obs,
               SamplingKind kind = SamplingKind::unknown)
        : g_(std::move(g_values)), loglik_(std::move(loglik)), num_obs_(num_obs), kind_(kind) {
        validate();
    }

    std::size_t draws() const noexcept { return g_.size(); }
    std::size_t observations() const noexcept { return num_obs_; }
    SamplingKind sampling_kind() const noexcept { return kind_; }

    std::span<const double> g_values() const noexcept { return g_; }
    std::span<const double> loglik() const noexcept { return loglik_; }
    std::span<const double> row(std::size_t s) const noexcept {
        return std::span<const double>(loglik_).subspan(s * num_obs_, num_obs_);
    }
    double loglik_at(std::size_t s, std::size_t n) const noexcept { return loglik_[s * num_obs_ + n]; }

    /// New bundle made of the given source rows, in order.
    DrawBundle select_rows(std::span<const std::size_t> rows) const {
        std::vector<double> g;
        std::vector<double> ll;
        g.reserve(rows.size());
        ll.reserve(rows.size() * num_obs_);
        for (std::size_t r : rows) {
            g.push_back(g_.at(r));
            auto src = row(r);
            ll.insert(ll.end(), src.begin(), src.end());
        }
        return DrawBundle(std::move(g), std::move(ll), num_obs_, kind_);
    }

private:
    void validate() const {
        if (num_obs_ < 1) throw InvalidInput("draw bundle needs at least one observation");
        if (g_.size() < 2) throw InvalidInput("draw bundle needs at least two draws (S >= 2)");
        if (loglik_.size() != g_.size() * num_obs_)
            throw InvalidInput("log-likelihood matrix must have S rows and N columns");
        for (std::size_t s = 0; s < g_.size(); ++s) {
            if (!std::isfinite(g_[s])) {
                std::ostringstream os;
                os << "non-finite g value at draw " << s;
                throw InvalidInput(os.str());
            }
        }
        for (std::size_t i = 0; i < loglik_.size(); ++i) {
            if (!std::isfinite(loglik_[i])) {
                std::ostringstream os;
                os << "non-finite log-likelihood at draw " << i / num_obs_ << ", observation "
                   << i % num_obs_;
                throw InvalidInput(os.str());
            }
        }
    }

    std::vector<double> g_;
    std::vector<double> loglik_;
    std::size_t num_obs_;
    SamplingKind kind_;
};

enum class QoiPreset { sign, sig, both, custom };

inline const char* to_string(QoiPreset p) {
    switch (p) {
    case QoiPreset::sign: return "sign";
    case QoiPreset::sig: return "sig";
    case QoiPreset::both: return "both";
    default: return "custom";
    }
}

inline QoiPreset parse_preset(const std::string& s) {
    if (s == "sign") return QoiPreset::sign;
    if (s == "sig") return QoiPreset::sig;
    if (s == "both") return QoiPreset::both;
    if (s == "custom") return QoiPreset::custom;
    throw InvalidInput("unknown QoI preset '" + s + "'");
}

/// phi(w) = c1 * E_w g + c2 * sd_w g.
struct QoiSpec {
    double c1 = 1.0;
    double c2 = 0.0;
    double z = kDefaultZ;
    QoiPreset preset = QoiPreset::custom;

    static QoiSpec custom(double c1, double c2, double z = kDefaultZ) {
        QoiSpec q{c1, c2, z, QoiPreset::custom};
        q.validate();
        return q;
    }

    void validate() const {
        if (c1 == 0.0 && c2 == 0.0) throw InvalidInput("QoI needs (c1, c2) != (0, 0)");
        if (!(z > 0.0)) throw InvalidInput("credible multiplier z must be positive");
    }

    double evaluate(double mean, double sd) const { return c1 * mean + c2 * sd; }
};

/// Observation weights in [0, 1]; not identically zero.
class WeightVector {
public:
    explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {
        bool any = false;
        for (double x : w_) {
            if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput("weights must lie in [0, 1]");
            any = any || x > 0.0;
        }
        if (!any) throw InvalidInput("weight vector is identically zero");
    }

    static WeightVector ones(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0)); }

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const noexcept { return w_[i]; }
    std::span<const double> values() const noexcept { return w_; }
    double sum() const noexcept {
        double s = 0.0;
        for (double x : w_) s += x;
        return s;
    }

private:
    std::vector<double> w_;
};

/// Sorted set of distinct 0-based observation indices.
class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(std::vector<std::size_t> idx) : idx_(std::move(idx)) {
        std::sort(idx_.begin(), idx_.end());
        if (std::adjacent_find(idx_.begin(), idx_.end()) != idx_.end())
            throw InvalidInput("index set contains duplicates");
    }

    std::size_t size() const noexcept { return idx_.size(); }
    bool empty() const noexcept { return idx_.empty(); }
    bool contains(std::size_t i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }
    std::span<const std::size_t> indices() const noexcept { return idx_; }
    auto begin() const noexcept { return idx_.begin(); }
    auto end() const noexcept { return idx_.end(); }

    bool operator==(const IndexSet&) const = default;

private:
    std::vector<std::size_t> idx_;
};

struct InfluenceVector {
    std::vector<double> psi;

    std::size_t size() const noexcept { return psi.size(); }
    double operator[](std::size_t i) const noexcept { return psi[i]; }

    double sum_over(const IndexSet& set) const {
        double s = 0.0;
        for (std::size_t i : set) s += psi.at(i);
        return s;
    }
};

inline WeightVector index_set_to_weight(const IndexSet& set, std::size_t n) {
    std::vector<double> w(n, 1.0);
    for (std::size_t i : set) {
        if (i >= n) throw InvalidInput("index " + std::to_string(i) + " out of range");
        w[i] = 0.0;
    }
    return WeightVector(std::move(w));
}

inline IndexSet weight_to_index_set(const WeightVector& w) {
    std::vector<std::size_t> zeros;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0)
            zeros.push_back(i);
        else if (w[i] != 1.0)
            throw InvalidInput("weight vector is not binary at index " + std::to_string(i));
    }
    return IndexSet(std::move(zeros));
}

/// Number of observations dropped at fraction alpha. The epsilon keeps
/// alpha = k/N from flooring to k-1 under rounding.
inline std::size_t drop_budget(std::size_t n, double alpha) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * alpha + 1e-9));
}

namespace detail {
inline double sample_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double biased_sd(std::span<const double> v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
} // namespace detail

/// Turn a named conclusion into (c1, c2) so that phi(1_N) < 0 on this bundle.
/// Uses the bundle's sample mean and (biased) sample sd as stand-ins for the
/// full-data posterior moments.
inline QoiSpec resolve_qoi_preset(QoiPreset preset, const DrawBundle& bundle, double z = kDefaultZ,
                                  double custom_c1 = 1.0, double custom_c2 = 0.0) {
    if (!(z > 0.0)) throw InvalidInput("credible multiplier z must be positive");
    if (preset == QoiPreset::custom) {
        QoiSpec q{custom_c1, custom_c2, z, QoiPreset::custom};
        q.validate();
        return q;
    }
    const double m = detail::sample_mean(bundle.g_values());
    if (m == 0.0) throw InvalidInput("posterior mean estimate is exactly zero; sign is ambiguous");
    const double s = detail::sgn(m);
    QoiSpec q;
    q.z = z;
    q.preset = preset;
    switch (preset) {
    case QoiPreset::sign:
        q.c1 = -s;
        q.c2 = 0.0;
        break;
    case QoiPreset::sig: {
        const double sd = detail::biased_sd(bundle.g_values());
        if (!(sd > 0.0)) throw InvalidInput("significance preset needs a positive posterior sd");
        // Endpoint nearer zero on the same side as the mean.
        const double endpoint = m - s * z * sd;
        if (detail::sgn(endpoint) != s)
            throw InvalidInput("credible interval already contains zero; nothing to overturn");
        q.c1 = -s;
        q.c2 = z;
        break;
    }
    case QoiPreset::both: {
        const double sd = detail::biased_sd(bundle.g_values());
        if (!(sd > 0.0)) throw InvalidInput("opposite-significance preset needs a positive posterior sd");
        q.c1 = -s;
        q.c2 = -z;
        break;
    }
    default: break;
    }
    return q;
}

/// phi(1_N) estimated from the bundle (sample mean, biased sample sd).
inline double phi_full(const DrawBundle& bundle, const QoiSpec& qoi) {
    return qoi.evaluate(detail::sample_mean(bundle.g_values()), detail::biased_sd(bundle.g_values()));
}

} // namespace amip
