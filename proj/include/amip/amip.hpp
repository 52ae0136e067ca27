#pragma once

// First-order relaxation of the maximum influence perturbation problem:
// sorted-sum solver, brute-force enumeration oracle, Taylor prediction.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "amip/core.hpp"

namespace amip {

struct AmipResult {
    double delta_hat = 0.0; ///< predicted increase in phi, >= 0
    IndexSet dropped;       ///< proposed most influential set
    double alpha = 0.0;
    std::size_t budget = 0; ///< floor(N * alpha)
};

/// Ranks of psi in ascending order, ties broken by index.
inline std::vector<std::size_t> ascending_ranks(const InfluenceVector& psi) {
    std::vector<std::size_t> order(psi.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return psi.psi[a] < psi.psi[b]; });
    return order;
}

/// Drop up to floor(N alpha) of the most negative influences; only strictly
/// negative entries are ever dropped.
inline AmipResult sosie_ranked(const InfluenceVector& psi, const std::vector<std::size_t>& order, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
    const std::size_t budget = drop_budget(psi.size(), alpha);
    std::vector<std::size_t> chosen;
    double total = 0.0;
    for (std::size_t r = 0; r < budget && r < order.size(); ++r) {
        const double v = psi.psi[order[r]];
        if (!(v < 0.0)) break;
        chosen.push_back(order[r]);
        total -= v;
    }
    return {total, IndexSet(std::move(chosen)), alpha, budget};
}

inline AmipResult sosie(const InfluenceVector& psi, double alpha) {
    return sosie_ranked(psi, ascending_ranks(psi), alpha);
}

/// Exhaustive search over every subset of size <= floor(N alpha). Ties go to
/// the smallest set, then the lexicographically smallest index list. Accepts
/// alpha = 1 so that single-observation vectors have a nonzero budget.
inline AmipResult brute_force_mip(const InfluenceVector& psi, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in (0, 1]");
    const std::size_t N = psi.size();
    if (N > 20) throw InvalidInput("brute-force enumeration is capped at N <= 20");
    const std::size_t budget = drop_budget(N, alpha);

    double best = 0.0;
    std::vector<std::size_t> best_set;
    // Enumerate sizes in increasing order and, within a size, index lists in
    // lexicographic order, so strict improvement implements the tie rule.
    for (std::size_t k = 1; k <= std::min(budget, N); ++k) {
        std::vector<std::size_t> comb(k);
        std::iota(comb.begin(), comb.end(), std::size_t{0});
        for (;;) {
            double value = 0.0;
            for (std::size_t i : comb) value -= psi.psi[i];
            if (value > best) {
                best = value;
                best_set = comb;
            }
            std::size_t pos = k;
            while (pos > 0 && comb[pos - 1] == N - k + pos - 1) --pos;
            if (pos == 0) break;
            ++comb[pos - 1];
            for (std::size_t j = pos; j < k; ++j) comb[j] = comb[j - 1] + 1;
        }
    }
    return {best, IndexSet(std::move(best_set)), alpha, budget};
}

/// phi_full + sum_n psi_n (w_n - 1).
inline double taylor_predict(double phi_full, const InfluenceVector& psi, const WeightVector& w) {
    if (psi.size() != w.size()) throw InvalidInput("influence and weight vectors differ in length");
    double change = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) change += psi.psi[n] * (w[n] - 1.0);
    return phi_full + change;
}

} // namespace amip
