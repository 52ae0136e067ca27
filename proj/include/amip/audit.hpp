#pragma once

// End-to-end robustness audit of one draw bundle, rendered as a report
// document.

#include <optional>
#include <string>
#include <vector>

#include "amip/amip.hpp"
#include "amip/core.hpp"
#include "amip/estimator.hpp"
#include "amip/harness.hpp"
#include "amip/io.hpp"
#include "amip/resample.hpp"

namespace amip {

inline constexpr const char* kToolVersion = "0.1.0";

struct AuditOptions {
    QoiPreset preset = QoiPreset::sign;
    double z = kDefaultZ;
    double c1 = 1.0; ///< custom preset only
    double c2 = 0.0; ///< custom preset only
    std::vector<double> alphas;
    BootstrapConfig bootstrap;
};

struct AuditEntry {
    AmipResult point;
    IntervalResult interval;
    std::optional<Verdict> decision; ///< empty when phi(1_N) >= 0
};

struct AuditResult {
    QoiSpec qoi;
    double phi_full = 0.0;
    InfluenceVector psi;
    std::vector<AuditEntry> entries;
};

inline AuditResult run_audit(const DrawBundle& bundle, const AuditOptions& opt) {
    if (opt.alphas.empty()) throw InvalidInput("audit needs at least one alpha");
    AuditResult r;
    r.qoi = resolve_qoi_preset(opt.preset, bundle, opt.z, opt.c1, opt.c2);
    r.phi_full = phi_full(bundle, r.qoi);
    r.psi = influence_estimates(bundle, r.qoi);
    const auto order = ascending_ranks(r.psi);
    auto intervals = ci_for_amip_grid(bundle, r.qoi, opt.alphas, opt.bootstrap);
    for (std::size_t i = 0; i < opt.alphas.size(); ++i) {
        AuditEntry e;
        e.point = sosie_ranked(r.psi, order, opt.alphas[i]);
        e.interval = std::move(intervals[i]);
        if (r.phi_full < 0.0) e.decision = verdict(r.phi_full, e.interval);
        r.entries.push_back(std::move(e));
    }
    return r;
}

/// Indices are reported 1-based.
inline Json one_based(const IndexSet& set) {
    Json arr = Json::array();
    for (std::size_t i : set) arr.push_back(i + 1);
    return arr;
}

inline Json qoi_json(const QoiSpec& q) {
    Json j;
    j["preset"] = to_string(q.preset);
    j["c1"] = q.c1;
    j["c2"] = q.c2;
    j["z"] = q.z;
    return j;
}

inline Json bootstrap_json(const BootstrapConfig& b) {
    Json j;
    j["replicates"] = b.replicates;
    j["block_length"] = b.block_length;
    j["eta"] = b.eta;
    j["mode"] = to_string(b.mode);
    return j;
}

/// Report document: version, input digest, QoI, bootstrap config, seed and
/// one record per alpha. The thread count is deliberately not recorded.
inline Json audit_report(const DrawBundle& bundle, const std::string& digest, const AuditOptions& opt) {
    const auto r = run_audit(bundle, opt);
    Json doc;
    doc["tool_version"] = kToolVersion;
    doc["input_digest"] = digest;
    doc["draws"] = bundle.draws();
    doc["observations"] = bundle.observations();
    doc["qoi"] = qoi_json(r.qoi);
    doc["phi_full"] = r.phi_full;
    doc["bootstrap"] = bootstrap_json(opt.bootstrap);
    doc["seed"] = opt.bootstrap.seed;
    Json results = Json::array();
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        const auto& e = r.entries[i];
        Json rec;
        rec["alpha"] = opt.alphas[i];
        rec["budget"] = e.point.budget;
        rec["delta_hat"] = e.point.delta_hat;
        rec["dropped"] = one_based(e.point.dropped);
        rec["lb"] = e.interval.lb;
        rec["ub"] = e.interval.ub;
        if (e.decision) {
            rec["verdict"] = to_string(e.decision->outcome);
            rec["lb_shifted"] = e.decision->lb_shifted;
            rec["ub_shifted"] = e.decision->ub_shifted;
        } else {
            rec["verdict"] = nullptr;
        }
        results.push_back(std::move(rec));
    }
    doc["results"] = std::move(results);
    return doc;
}

} // namespace amip
