#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amip.hpp"

using namespace amip;

namespace {

enum class Format { csv, json };

struct QoiOptions {
    std::string preset = "sign";
    double z = kDefaultZ;
    double c1 = 1.0;
    double c2 = 0.0;
};

struct BootOptions {
    double eta = 0.95;
    std::size_t block_length = 10;
    std::size_t reps = 200;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string mode = "block";

    BootstrapConfig config() const {
        BootstrapConfig c;
        c.eta = eta;
        c.block_length = block_length;
        c.replicates = reps;
        c.seed = seed;
        c.threads = threads;
        if (mode == "block")
            c.mode = BootstrapMode::block;
        else if (mode == "iid")
            c.mode = BootstrapMode::iid;
        else
            throw InvalidInput("unknown bootstrap mode '" + mode + "' (expected block or iid)");
        return c;
    }
};

struct ModelOptions {
    std::vector<double> x;
    std::vector<std::size_t> group; // 1-based on the command line
    double sigma = 1.0;
    double tau = 1.0;
    double prior_shape = 2.0;
    double prior_rate = 1.0;

    NormalModel normal() const { return {x, sigma}; }
    NormalGammaModel normal_gamma() const { return {x, prior_shape, prior_rate}; }
    NormalMeansModel normal_means() const {
        if (group.size() != x.size()) throw InvalidInput("--group needs one 1-based label per observation");
        NormalMeansModel m{x, {}, sigma, tau};
        for (std::size_t g : group) {
            if (g < 1) throw InvalidInput("group labels are 1-based");
            m.group.push_back(g - 1);
        }
        return m;
    }
};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double parse_double(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InvalidInput("cannot parse number '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) throw InvalidInput("cannot parse number '" + text + "'");
    return v;
}

/// Comma list, or lo:hi:log10[:count] (count defaults to 10).
std::vector<double> parse_alphas(const std::string& spec) {
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(trim(p));
        if (parts.size() < 3 || parts.size() > 4 || parts[2] != "log10")
            throw InvalidInput("alpha range must look like lo:hi:log10[:count]");
        std::size_t count = 10;
        if (parts.size() == 4) {
            const double c = parse_double(parts[3]);
            if (c < 1 || c != std::floor(c)) throw InvalidInput("alpha grid count must be a positive integer");
            count = static_cast<std::size_t>(c);
        }
        return log10_grid(parse_double(parts[0]), parse_double(parts[1]), count);
    }
    std::vector<double> out;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_double(trim(p)));
    if (out.empty()) throw InvalidInput("empty alpha list");
    return out;
}

std::vector<double> resolve_alphas(const std::string& spec, std::size_t num_obs) {
    auto alphas = spec.empty() ? default_alpha_grid(num_obs) : parse_alphas(spec);
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw InvalidInput("alpha values must lie in (0, 1)");
    return alphas;
}

IndexSet parse_one_based_set(const std::vector<std::size_t>& idx, std::size_t n) {
    std::vector<std::size_t> zero;
    for (std::size_t i : idx) {
        if (i < 1 || i > n) throw InvalidInput("index " + std::to_string(i) + " outside 1.." + std::to_string(n));
        zero.push_back(i - 1);
    }
    return IndexSet(std::move(zero));
}

std::string join_one_based(const IndexSet& set) {
    std::string s;
    for (std::size_t i : set) {
        if (!s.empty()) s += ';';
        s += std::to_string(i + 1);
    }
    return s;
}

Format parse_format(const std::string& f) {
    if (f == "csv") return Format::csv;
    if (f == "json") return Format::json;
    throw InvalidInput("unknown format '" + f + "' (expected csv or json)");
}

void add_qoi_options(CLI::App* cmd, QoiOptions& q) {
    cmd->add_option("--qoi", q.preset, "QoI preset: sign, sig, both or custom")->capture_default_str();
    cmd->add_option("--z", q.z, "credible multiplier")->capture_default_str();
    cmd->add_option("--c1", q.c1, "custom mean coefficient")->capture_default_str();
    cmd->add_option("--c2", q.c2, "custom sd coefficient")->capture_default_str();
}

void add_boot_options(CLI::App* cmd, BootOptions& b) {
    cmd->add_option("--eta", b.eta, "interval level")->capture_default_str();
    cmd->add_option("--block-length", b.block_length, "block length L")->capture_default_str();
    cmd->add_option("--bootstrap-reps", b.reps, "replicates B")->capture_default_str();
    cmd->add_option("--bootstrap-mode", b.mode, "block or iid")->capture_default_str();
    cmd->add_option("--seed", b.seed, "random seed")->capture_default_str();
    cmd->add_option("--threads", b.threads, "worker threads (never changes results)")->capture_default_str();
}

void add_model_options(CLI::App* cmd, ModelOptions& m, bool with_groups, bool with_gamma) {
    cmd->add_option("--x", m.x, "observations, comma separated")->delimiter(',')->required();
    cmd->add_option("--sigma", m.sigma, "observation sd")->capture_default_str();
    if (with_groups) {
        cmd->add_option("--group", m.group, "1-based group label per observation")->delimiter(',');
        cmd->add_option("--tau", m.tau, "group-effect sd")->capture_default_str();
    }
    if (with_gamma) {
        cmd->add_option("--prior-shape", m.prior_shape, "gamma prior shape")->capture_default_str();
        cmd->add_option("--prior-rate", m.prior_rate, "gamma prior rate")->capture_default_str();
    }
}

struct LoadedBundle {
    DrawBundle bundle;
    std::string digest;
};

LoadedBundle load(const std::string& path) {
    const auto text = read_file(path);
    return {parse_bundle_csv(text), content_digest(text)};
}

QoiSpec resolve(const QoiOptions& q, const DrawBundle& b) {
    return resolve_qoi_preset(parse_preset(q.preset), b, q.z, q.c1, q.c2);
}

Json interval_json(const IntervalResult& iv) {
    Json j;
    j["lb"] = iv.lb;
    j["ub"] = iv.ub;
    return j;
}

// ---------------------------------------------------------------------------

int cmd_influence(const std::string& path, const QoiOptions& qo, Format fmt) {
    const auto in = load(path);
    const auto q = resolve(qo, in.bundle);
    const auto psi = influence_estimates(in.bundle, q);
    if (fmt == Format::csv) {
        std::cout << "n,psi\n";
        for (std::size_t n = 0; n < psi.size(); ++n) std::cout << n + 1 << ',' << format_real(psi[n]) << '\n';
        return 0;
    }
    Json doc;
    doc["tool_version"] = kToolVersion;
    doc["input_digest"] = in.digest;
    doc["qoi"] = qoi_json(q);
    doc["psi"] = psi.psi;
    std::cout << dump_json(doc);
    return 0;
}

int cmd_amip(const std::string& path, const QoiOptions& qo, const std::string& alpha_spec, Format fmt) {
    const auto in = load(path);
    const auto q = resolve(qo, in.bundle);
    const auto alphas = resolve_alphas(alpha_spec, in.bundle.observations());
    const auto psi = influence_estimates(in.bundle, q);
    const auto order = ascending_ranks(psi);
    if (fmt == Format::csv) {
        std::cout << "alpha,budget,delta_hat,dropped\n";
        for (double a : alphas) {
            const auto r = sosie_ranked(psi, order, a);
            std::cout << format_real(a) << ',' << r.budget << ',' << format_real(r.delta_hat) << ','
                      << join_one_based(r.dropped) << '\n';
        }
        return 0;
    }
    Json doc;
    doc["tool_version"] = kToolVersion;
    doc["input_digest"] = in.digest;
    doc["qoi"] = qoi_json(q);
    doc["phi_full"] = phi_full(in.bundle, q);
    Json results = Json::array();
    for (double a : alphas) {
        const auto r = sosie_ranked(psi, order, a);
        Json rec;
        rec["alpha"] = a;
        rec["budget"] = r.budget;
        rec["delta_hat"] = r.delta_hat;
        rec["dropped"] = one_based(r.dropped);
        results.push_back(std::move(rec));
    }
    doc["results"] = std::move(results);
    std::cout << dump_json(doc);
    return 0;
}

int cmd_ci(const std::string& path, const QoiOptions& qo, const BootOptions& bo, const std::string& alpha_spec,
           const std::string& target, const std::vector<std::size_t>& set_idx, Format fmt) {
    const auto in = load(path);
    const auto cfg = bo.config();
    Json doc;
    doc["tool_version"] = kToolVersion;
    doc["input_digest"] = in.digest;
    doc["target"] = target;
    doc["bootstrap"] = bootstrap_json(cfg);
    doc["seed"] = cfg.seed;
    std::vector<std::pair<std::string, IntervalResult>> rows;
    if (target == "amip") {
        const auto q = resolve(qo, in.bundle);
        doc["qoi"] = qoi_json(q);
        const auto alphas = resolve_alphas(alpha_spec, in.bundle.observations());
        const auto ivs = ci_for_amip_grid(in.bundle, q, alphas, cfg);
        Json results = Json::array();
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            Json rec = interval_json(ivs[i]);
            rec["alpha"] = alphas[i];
            results.push_back(std::move(rec));
            rows.emplace_back(format_real(alphas[i]), ivs[i]);
        }
        doc["results"] = std::move(results);
    } else if (target == "soi") {
        const auto q = resolve(qo, in.bundle);
        doc["qoi"] = qoi_json(q);
        const auto set = parse_one_based_set(set_idx, in.bundle.observations());
        const auto iv = ci_for_sum_of_influence(in.bundle, q, set, cfg);
        doc["set"] = one_based(set);
        doc["results"] = Json::array({interval_json(iv)});
        rows.emplace_back("", iv);
    } else if (target == "mean") {
        const auto iv = ci_for_posterior_mean(in.bundle, cfg);
        doc["results"] = Json::array({interval_json(iv)});
        rows.emplace_back("", iv);
    } else {
        throw InvalidInput("unknown interval target '" + target + "' (expected amip, soi or mean)");
    }
    if (fmt == Format::json) {
        std::cout << dump_json(doc);
        return 0;
    }
    std::cout << "alpha,quantity,value\n";
    for (const auto& [alpha, iv] : rows) {
        std::cout << alpha << ",lb," << format_real(iv.lb) << '\n';
        std::cout << alpha << ",ub," << format_real(iv.ub) << '\n';
    }
    return 0;
}

int cmd_audit(const std::string& path, const QoiOptions& qo, const BootOptions& bo, const std::string& alpha_spec,
              Format fmt) {
    const auto in = load(path);
    AuditOptions opt;
    opt.preset = parse_preset(qo.preset);
    opt.z = qo.z;
    opt.c1 = qo.c1;
    opt.c2 = qo.c2;
    opt.alphas = resolve_alphas(alpha_spec, in.bundle.observations());
    opt.bootstrap = bo.config();
    const auto doc = audit_report(in.bundle, in.digest, opt);
    if (fmt == Format::json) {
        std::cout << dump_json(doc);
        return 0;
    }
    std::cout << "alpha,quantity,value\n";
    for (const auto& r : doc["results"]) {
        const auto a = format_real(r["alpha"].get<double>());
        std::cout << a << ",budget," << r["budget"].get<std::size_t>() << '\n';
        std::cout << a << ",delta_hat," << format_real(r["delta_hat"].get<double>()) << '\n';
        std::cout << a << ",lb," << format_real(r["lb"].get<double>()) << '\n';
        std::cout << a << ",ub," << format_real(r["ub"].get<double>()) << '\n';
        std::cout << a << ",verdict," << (r["verdict"].is_null() ? "" : r["verdict"].get<std::string>()) << '\n';
    }
    return 0;
}

int emit_pairs(const std::vector<std::pair<std::string, Json>>& pairs, Format fmt) {
    if (fmt == Format::json) {
        Json doc;
        doc["tool_version"] = kToolVersion;
        for (const auto& [k, v] : pairs) doc[k] = v;
        std::cout << dump_json(doc);
        return 0;
    }
    std::cout << "quantity,value\n";
    for (const auto& [k, v] : pairs) {
        if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i)
                std::cout << k << '_' << i + 1 << ','
                          << (v[i].is_number_float() ? format_real(v[i].get<double>()) : v[i].dump()) << '\n';
        } else if (v.is_boolean()) {
            std::cout << k << ',' << (v.get<bool>() ? "true" : "false") << '\n';
        } else if (v.is_number_float()) {
            std::cout << k << ',' << format_real(v.get<double>()) << '\n';
        } else {
            std::cout << k << ',' << v.dump() << '\n';
        }
    }
    return 0;
}

int cmd_oracle_normal(const ModelOptions& mo, const std::vector<std::size_t>& drop, Format fmt) {
    const auto m = mo.normal();
    m.validate();
    const auto full = normal_weighted_posterior(m, WeightVector::ones(m.size()));
    std::vector<std::pair<std::string, Json>> out{{"posterior_mean", full.mean},
                                                  {"posterior_variance", full.variance},
                                                  {"psi", normal_influences(m).psi}};
    if (!drop.empty()) {
        const auto set = parse_one_based_set(drop, m.size());
        const auto e = normal_drop_errors(m, set);
        out.emplace_back("dropped_mean", normal_weighted_posterior(m, index_set_to_weight(set, m.size())).mean);
        out.emplace_back("err_first", e.err_first);
        out.emplace_back("err_zeroth", e.err_zeroth);
    }
    return emit_pairs(out, fmt);
}

int cmd_oracle_normal_means(const ModelOptions& mo, const std::vector<std::size_t>& drop, Format fmt) {
    const auto m = mo.normal_means();
    m.validate();
    const auto full = normal_means_weighted_posterior(m, WeightVector::ones(m.size()));
    std::vector<std::pair<std::string, Json>> out{{"posterior_mean", full.mean},
                                                  {"posterior_variance", full.variance},
                                                  {"psi", normal_means_influences(m).psi}};
    if (!drop.empty()) {
        const auto set = parse_one_based_set(drop, m.size());
        const auto r = normal_means_drop_errors(m, set);
        out.emplace_back("err_first", r.direct.err_first);
        out.emplace_back("err_zeroth", r.direct.err_zeroth);
        out.emplace_back("lemma_err_first", r.lemma_decomposition.err_first);
        out.emplace_back("lemma_err_zeroth", r.lemma_decomposition.err_zeroth);
        out.emplace_back("difference_err_first", r.difference().err_first);
        out.emplace_back("difference_err_zeroth", r.difference().err_zeroth);
        out.emplace_back("F1", r.terms.f1);
        out.emplace_back("F2", r.terms.f2);
        out.emplace_back("E", r.terms.e);
        out.emplace_back("condition", r.condition);
        try {
            out.emplace_back("error_bound", normal_means_error_bound(m, set));
        } catch (const InvalidInput& e) {
            out.emplace_back("error_bound", std::string("n/a: ") + e.what());
        }
    }
    return emit_pairs(out, fmt);
}

int cmd_oracle_normal_gamma(const ModelOptions& mo, Format fmt) {
    const auto m = mo.normal_gamma();
    const auto post = normal_gamma_posterior(m);
    std::vector<std::pair<std::string, Json>> out{{"shape", post.shape},
                                                  {"rate", post.rate},
                                                  {"location", post.location},
                                                  {"psi", normal_gamma_influences(m).psi}};
    if (post.shape > 2.0) {
        const auto c = normal_gamma_sigma_coefficients(m);
        const auto p = normal_gamma_sigma_coefficients_as_printed(m);
        std::vector<double> sigma;
        for (std::size_t n = 0; n < m.size(); ++n) sigma.push_back(normal_gamma_sigma_nn(m, n));
        out.emplace_back("D1", c.d1);
        out.emplace_back("D2", c.d2);
        out.emplace_back("D3", c.d3);
        out.emplace_back("D2_as_printed", p.d2);
        out.emplace_back("D3_as_printed", p.d3);
        out.emplace_back("sigma_nn", sigma);
    }
    return emit_pairs(out, fmt);
}

struct SampleOptions {
    std::string model = "normal";
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
    double step_scale = 0.0;
    std::size_t burn_in = 0;
};

ChainSource make_source(const ModelOptions& mo, const SampleOptions& so) {
    SamplerConfig c;
    c.draws = so.draws;
    c.step_scale = so.step_scale;
    c.burn_in = so.burn_in;
    if (so.model == "normal") {
        const auto m = mo.normal();
        m.validate();
        c.kind = SamplerKind::normal_exact;
        return [m, c](std::uint64_t seed) mutable {
            c.seed = seed;
            return sample_normal_exact(m, c);
        };
    }
    if (so.model == "metropolis") {
        const auto m = mo.normal();
        m.validate();
        c.kind = SamplerKind::metropolis;
        return [m, c](std::uint64_t seed) mutable {
            c.seed = seed;
            return sample_metropolis(m, c).bundle;
        };
    }
    if (so.model == "normal-gamma") {
        const auto m = mo.normal_gamma();
        m.validate();
        c.kind = SamplerKind::normal_gamma_exact;
        return [m, c](std::uint64_t seed) mutable {
            c.seed = seed;
            return sample_normal_gamma_exact(m, c);
        };
    }
    if (so.model == "normal-means") {
        const auto m = mo.normal_means();
        m.validate();
        c.kind = SamplerKind::normal_means_exact;
        return [m, c](std::uint64_t seed) mutable {
            c.seed = seed;
            return sample_normal_means_exact(m, c);
        };
    }
    throw InvalidInput("unknown model '" + so.model + "' (expected normal, metropolis, normal-gamma or normal-means)");
}

int cmd_sample(const ModelOptions& mo, const SampleOptions& so, const std::string& out_path) {
    const auto bundle = make_source(mo, so)(so.seed);
    const auto text = bundle_to_csv(bundle);
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return 0;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + out_path + "'");
    out << text;
    return 0;
}

Json coverage_json(const CoverageReport& rep) {
    Json records = Json::array();
    for (const auto& r : rep.records) {
        Json j;
        j["alpha"] = r.alpha;
        j["budget"] = r.budget;
        j["ground_truth"] = r.ground_truth;
        j["target_set"] = one_based(r.target_set);
        j["covered"] = r.covered;
        j["chains"] = r.chains;
        j["coverage_point"] = r.coverage_point;
        j["coverage_lb"] = r.coverage_interval.lb;
        j["coverage_ub"] = r.coverage_interval.ub;
        j["skipped"] = r.skipped;
        if (!r.note.empty()) j["note"] = r.note;
        records.push_back(std::move(j));
    }
    return records;
}

int emit_coverage(const CoverageReport& rep, const QoiSpec& q, const BootstrapConfig& boot, std::size_t chains,
                  std::uint64_t seed, Format fmt) {
    if (fmt == Format::json) {
        Json doc;
        doc["tool_version"] = kToolVersion;
        doc["qoi"] = qoi_json(q);
        doc["bootstrap"] = bootstrap_json(boot);
        doc["seed"] = seed;
        doc["chains"] = chains;
        doc["draws"] = rep.draws;
        doc["records"] = coverage_json(rep);
        doc["averaged_influences"] = rep.averaged_influences;
        std::cout << dump_json(doc);
        return 0;
    }
    std::cout << "alpha,quantity,value\n";
    for (const auto& r : rep.records) {
        const auto a = format_real(r.alpha);
        if (r.skipped) {
            std::cout << a << ",skipped,1\n";
            continue;
        }
        std::cout << a << ",ground_truth," << format_real(r.ground_truth) << '\n';
        std::cout << a << ",coverage_point," << format_real(r.coverage_point) << '\n';
        std::cout << a << ",coverage_lb," << format_real(r.coverage_interval.lb) << '\n';
        std::cout << a << ",coverage_ub," << format_real(r.coverage_interval.ub) << '\n';
    }
    return 0;
}

int cmd_coverage(const ModelOptions& mo, const SampleOptions& so, const QoiOptions& qo, const BootOptions& bo,
                 const std::string& alpha_spec, std::size_t chains, bool soi, Format fmt) {
    const auto source = make_source(mo, so);
    ExperimentConfig cfg;
    cfg.chains = chains;
    cfg.seed = bo.seed;
    cfg.bootstrap = bo.config();
    cfg.bootstrap.threads = 1;
    cfg.threads = bo.threads;
    // The preset is resolved once, on the first chain.
    const auto q = resolve(qo, source(stream_seed(cfg.seed, 0)));
    const auto alphas = resolve_alphas(alpha_spec, mo.x.size());
    const auto rep = soi ? soi_coverage_experiment(source, q, alphas, cfg) : coverage_experiment(source, q, alphas, cfg);
    return emit_coverage(rep, q, cfg.bootstrap, chains, cfg.seed, fmt);
}

int cmd_interpolate(const ModelOptions& mo, const std::string& model, const QoiOptions& qo, double alpha_star,
                    Format fmt) {
    InterpolationReport rep;
    if (model == "normal") {
        if (parse_preset(qo.preset) != QoiPreset::custom)
            throw InvalidInput("interpolate uses --qoi custom with --c1/--c2 on the closed-form posterior");
        rep = interpolation_experiment(mo.normal(), QoiSpec::custom(qo.c1, qo.c2, qo.z), alpha_star);
    } else if (model == "normal-means") {
        rep = interpolation_experiment(mo.normal_means(), alpha_star);
    } else {
        throw InvalidInput("interpolate supports the normal and normal-means models");
    }
    if (fmt == Format::json) {
        Json doc;
        doc["tool_version"] = kToolVersion;
        doc["model"] = model;
        doc["alpha_star"] = rep.alpha_star;
        doc["dropped"] = one_based(rep.dropped);
        doc["delta"] = rep.delta;
        doc["zeta"] = rep.zeta_grid;
        doc["refit"] = rep.refit;
        doc["linear"] = rep.linear;
        std::cout << dump_json(doc);
        return 0;
    }
    std::cout << "zeta,quantity,value\n";
    for (std::size_t i = 0; i < rep.zeta_grid.size(); ++i) {
        const auto z = format_real(rep.zeta_grid[i]);
        std::cout << z << ",refit," << format_real(rep.refit[i]) << '\n';
        std::cout << z << ",linear," << format_real(rep.linear[i]) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// cross-check

struct CheckRow {
    std::string name;
    bool pass = true;
    std::string detail;
};

std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

CheckRow check_max_abs(const std::string& name, double worst, double tol) {
    return {name, worst <= tol, "max |diff| " + fmt_short(worst) + " (tol " + fmt_short(tol) + ")"};
}

std::vector<CheckRow> run_cross_checks(std::uint64_t seed) {
    std::vector<CheckRow> rows;
    Rng rng(seed);

    {
        double worst = 0.0, worst_ratio = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t N = 3 + rng.below(20);
            NormalModel m{std::vector<double>(N), std::exp(rng.normal())};
            for (auto& v : m.x) v = 3.0 * rng.normal();
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i + 1 < N; ++i)
                if (rng.below(3) == 0) idx.push_back(i);
            if (idx.empty()) idx.push_back(N - 1);
            const IndexSet set(idx);
            const auto f = normal_drop_errors(m, set);
            const auto d = normal_drop_errors_direct(m, set);
            worst = std::max({worst, std::abs(f.err_first - d.err_first), std::abs(f.err_zeroth - d.err_zeroth)});
            worst_ratio = std::max(worst_ratio, std::abs(f.err_first - static_cast<double>(set.size()) / N * f.err_zeroth));
        }
        rows.push_back(check_max_abs("normal drop errors: formula vs direct", worst, 1e-12));
        rows.push_back(check_max_abs("normal drop errors: |I|/N ratio", worst_ratio, 1e-12));
    }
    {
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            DiscreteTriple d(2 + rng.below(3));
            double total = 0.0;
            for (auto& t : d) {
                t = {rng.normal(), rng.normal(), rng.normal(), 0.05 + rng.uniform()};
                total += t.prob;
            }
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < d.size(); ++i) acc += (d[i].prob /= total);
            d.back().prob = 1.0 - acc;
            for (std::size_t S : {2u, 3u})
                worst = std::max(worst, std::abs(exact_cov_of_sample_covariances(d, S) - brute_force_cov_of_cov(d, S)));
        }
        rows.push_back(check_max_abs("cov of sample covariances: formula vs enumeration", worst, 1e-12));
    }
    {
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t N = 1 + rng.below(12);
            InfluenceVector psi{std::vector<double>(N)};
            for (auto& v : psi.psi) v = rep % 3 == 0 ? std::round(rng.normal()) : rng.normal();
            for (std::size_t k = 1; k <= N; ++k) {
                const double alpha = std::min(0.999999, (k + 0.5) / static_cast<double>(N));
                worst = std::max(worst, std::abs(sosie(psi, alpha).delta_hat - brute_force_mip(psi, alpha).delta_hat));
            }
        }
        rows.push_back(check_max_abs("sorted sum vs exhaustive search", worst, 1e-12));
    }
    {
        double worst_identity = 0.0, worst_gap = 0.0, bound_slack = 1e300;
        for (int rep = 0; rep < 50; ++rep) {
            NormalMeansModel m;
            m.sigma = 0.5 + rng.uniform();
            m.tau = 0.5 + rng.uniform();
            const std::size_t G = 2 + rng.below(3);
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t i = 0, size = 4 + rng.below(4); i < size; ++i) {
                    m.x.push_back(rng.normal() + static_cast<double>(g));
                    m.group.push_back(g);
                }
            const IndexSet set({rng.below(4)});
            const auto r = normal_means_drop_errors(m, set);
            const double full = normal_means_weighted_posterior(m, WeightVector::ones(m.size())).mean;
            const double drop = normal_means_weighted_posterior(m, index_set_to_weight(set, m.size())).mean;
            worst_identity = std::max({worst_identity, std::abs(r.direct.err_zeroth - (drop - full)),
                                       std::abs(r.direct.err_first - (drop - full + normal_means_influences(m).sum_over(set)))});
            worst_gap = std::max(worst_gap, std::abs(r.difference().err_first));
            try {
                bound_slack = std::min(bound_slack, normal_means_error_bound(m, set) - std::abs(r.direct.err_first));
            } catch (const InvalidInput&) {
            }
        }
        rows.push_back(check_max_abs("normal-means direct errors: defining identities", worst_identity, 1e-12));
        rows.push_back({"normal-means printed decomposition vs direct", true,
                        "reported only; max |diff err_first| " + fmt_short(worst_gap)});
        rows.push_back({"normal-means bound dominates |err_first|", bound_slack >= 0.0,
                        "min slack " + fmt_short(bound_slack)});
    }
    {
        double worst = 0.0;
        for (auto [a, b] : {std::pair{3.0, 2.0}, std::pair{12.0, 20.0}, std::pair{2.5, 0.3}}) {
            const auto c = gamma_moments_closed_form(a, b);
            const auto q = gamma_moments_quadrature(a, b);
            for (auto [x, y] : {std::pair{c.inv, q.inv}, std::pair{c.inv_dtau, q.inv_dtau},
                                std::pair{c.inv_dtau2, q.inv_dtau2}, std::pair{c.inv_dlog, q.inv_dlog},
                                std::pair{c.inv_dlog2, q.inv_dlog2}, std::pair{c.inv_dlog_dtau, q.inv_dlog_dtau}})
                worst = std::max(worst, std::abs(x - y));
        }
        rows.push_back(check_max_abs("gamma moments: quadrature vs closed form", worst, 1e-9));
    }
    auto z_check = [&](const std::string& name, const DrawBundle& b, const std::vector<double>& truth) {
        const auto est = influence_estimates(b, QoiSpec::custom(1.0, 0.0));
        double worst = 0.0;
        for (std::size_t n = 0; n < truth.size(); ++n) {
            const double se = std::sqrt(asymptotic_cov_estimate(b, n, n).sigma_ij / static_cast<double>(b.draws()));
            worst = std::max(worst, std::abs(est[n] - truth[n]) / se);
        }
        rows.push_back({name, worst < 4.5, "max |z| " + fmt_short(worst) + " (tol 4.5)"});
    };
    {
        const NormalModel m{{0.3, -1.2, 2.5, 0.9, 4.0, -0.6, 1.1, 0.0}, 1.5};
        SamplerConfig c{40000, stream_seed(seed, 1), SamplerKind::normal_exact};
        z_check("normal: estimated vs closed-form influences", sample_normal_exact(m, c), normal_influences(m).psi);
    }
    {
        const NormalGammaModel m{{0.4, -1.3, 2.2, 0.1, -0.8, 1.9, 3.5, -0.2}, 2.0, 1.0};
        SamplerConfig c{40000, stream_seed(seed, 2), SamplerKind::normal_gamma_exact};
        z_check("normal-gamma: estimated vs closed-form influences", sample_normal_gamma_exact(m, c),
                normal_gamma_influences(m).psi);
    }
    {
        const NormalMeansModel m{{0.0, 2.0, 4.0, 1.0, -1.0, 3.0}, {0, 0, 1, 1, 2, 2}, 1.0, 0.8};
        SamplerConfig c{40000, stream_seed(seed, 3), SamplerKind::normal_means_exact};
        z_check("normal-means: estimated vs closed-form influences", sample_normal_means_exact(m, c),
                normal_means_influences(m).psi);
    }
    {
        const NormalModel m{{0.3, -1.2, 2.5, 0.9, 4.0}, 1.0};
        SamplerConfig c{5000, stream_seed(seed, 4), SamplerKind::normal_exact};
        const auto b = sample_normal_exact(m, c);
        const auto q = QoiSpec::custom(-1.0, kDefaultZ);
        const auto a = influence_estimates(b, q);
        const auto r = influence_estimates_raw(b, q);
        double worst = 0.0;
        for (std::size_t n = 0; n < a.size(); ++n)
            worst = std::max(worst, std::abs(a[n] - r[n]) / std::max(1.0, std::abs(a[n])));
        rows.push_back(check_max_abs("centered vs raw-moment influence algebra (relative)", worst, 1e-8));
    }
    return rows;
}

int cmd_cross_check(std::uint64_t seed, Format fmt) {
    const auto rows = run_cross_checks(seed);
    bool all = true;
    for (const auto& r : rows) all = all && r.pass;
    if (fmt == Format::json) {
        Json doc;
        doc["tool_version"] = kToolVersion;
        doc["seed"] = seed;
        Json arr = Json::array();
        for (const auto& r : rows) {
            Json j;
            j["check"] = r.name;
            j["status"] = r.pass ? "pass" : "fail";
            j["detail"] = r.detail;
            arr.push_back(std::move(j));
        }
        doc["checks"] = std::move(arr);
        doc["all_pass"] = all;
        std::cout << dump_json(doc);
    } else {
        std::cout << "check,status,detail\n";
        for (const auto& r : rows) std::cout << '"' << r.name << "\"," << (r.pass ? "pass" : "fail") << ",\"" << r.detail << "\"\n";
    }
    return all ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-dropping robustness from posterior draws"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string bundle_path, format_str, alpha_spec, target = "amip";
    QoiOptions qo;
    BootOptions bo;
    ModelOptions mo;
    SampleOptions so;
    std::vector<std::size_t> drop, set_idx;
    std::string out_path, interp_model = "normal";
    std::size_t chains = 200;
    double alpha_star = 0.05;
    std::uint64_t check_seed = 0;

    auto add_format = [&](CLI::App* c, const std::string& def) {
        c->add_option("--format", format_str, "csv or json (default " + def + ")");
    };
    auto add_alphas = [&](CLI::App* c) {
        c->add_option("--alphas,--alpha", alpha_spec,
                      "comma list or lo:hi:log10[:count]; default 0.1%..1% log grid and 1/N");
    };

    auto* influence = app.add_subcommand("influence", "estimated influence of every observation");
    influence->add_option("bundle", bundle_path, "bundle CSV")->required();
    add_qoi_options(influence, qo);

    auto* amip_cmd = app.add_subcommand("amip", "approximate maximum influence perturbation per alpha");
    amip_cmd->add_option("bundle", bundle_path, "bundle CSV")->required();
    add_qoi_options(amip_cmd, qo);
    add_alphas(amip_cmd);

    auto* ci = app.add_subcommand("ci", "bootstrap confidence intervals");
    ci->add_option("bundle", bundle_path, "bundle CSV")->required();
    add_qoi_options(ci, qo);
    add_boot_options(ci, bo);
    add_alphas(ci);
    ci->add_option("--target", target, "amip, soi (sum of influences over --set) or mean")->capture_default_str();
    ci->add_option("--set", set_idx, "1-based indices for --target soi")->delimiter(',');

    auto* audit = app.add_subcommand("audit", "full robustness audit with verdicts");
    audit->add_option("bundle", bundle_path, "bundle CSV")->required();
    add_qoi_options(audit, qo);
    add_boot_options(audit, bo);
    add_alphas(audit);

    auto* oracle = app.add_subcommand("oracle", "closed forms for the conjugate models");
    oracle->require_subcommand(1);
    auto* o_normal = oracle->add_subcommand("normal", "normal model with known sigma");
    add_model_options(o_normal, mo, false, false);
    o_normal->add_option("--drop", drop, "1-based indices to drop")->delimiter(',');
    auto* o_means = oracle->add_subcommand("normal-means", "two-level normal-means model");
    add_model_options(o_means, mo, true, false);
    o_means->add_option("--drop", drop, "1-based indices to drop (one group)")->delimiter(',');
    auto* o_gamma = oracle->add_subcommand("normal-gamma", "normal model with gamma prior on the precision");
    add_model_options(o_gamma, mo, false, true);

    auto* sample = app.add_subcommand("sample", "write a draw bundle CSV");
    sample->add_option("--model", so.model, "normal, metropolis, normal-gamma or normal-means")->capture_default_str();
    add_model_options(sample, mo, true, true);
    sample->add_option("--draws", so.draws, "S")->capture_default_str();
    sample->add_option("--seed", so.seed, "random seed")->capture_default_str();
    sample->add_option("--step-scale", so.step_scale, "metropolis proposal sd (0 = 2.4 sigma / sqrt N)");
    sample->add_option("--burn-in", so.burn_in, "metropolis iterations discarded");
    sample->add_option("--out", out_path, "output path (default standard output)");

    auto setup_coverage = [&](CLI::App* c) {
        c->add_option("--model", so.model, "normal, metropolis, normal-gamma or normal-means")->capture_default_str();
        add_model_options(c, mo, true, true);
        c->add_option("--draws", so.draws, "S per chain")->capture_default_str();
        c->add_option("--chains", chains, "J")->capture_default_str();
        c->add_option("--step-scale", so.step_scale, "metropolis proposal sd");
        add_qoi_options(c, qo);
        add_boot_options(c, bo);
        add_alphas(c);
    };
    auto* coverage = app.add_subcommand("coverage", "coverage of AMIP intervals over J chains");
    setup_coverage(coverage);
    auto* soi = app.add_subcommand("soi-coverage", "coverage of sum-of-influence intervals over J chains");
    setup_coverage(soi);

    auto* interp = app.add_subcommand("interpolate", "refit vs linear prediction along the interpolation path");
    interp->add_option("--model", interp_model, "normal or normal-means")->capture_default_str();
    add_model_options(interp, mo, true, false);
    add_qoi_options(interp, qo);
    interp->add_option("--alpha-star", alpha_star, "fraction defining w*")->capture_default_str();

    auto* cross = app.add_subcommand("cross-check", "oracle-vs-estimator and formula-vs-direct comparisons");
    cross->add_option("--seed", check_seed, "random seed")->capture_default_str();

    for (auto* c : {influence, amip_cmd, ci, audit, o_normal, o_means, o_gamma, coverage, soi, interp, cross})
        add_format(c, c == audit ? "json" : "csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const Format fmt = parse_format(!format_str.empty() ? format_str : (*audit ? "json" : "csv"));
        if (*influence) return cmd_influence(bundle_path, qo, fmt);
        if (*amip_cmd) return cmd_amip(bundle_path, qo, alpha_spec, fmt);
        if (*ci) return cmd_ci(bundle_path, qo, bo, alpha_spec, target, set_idx, fmt);
        if (*audit) return cmd_audit(bundle_path, qo, bo, alpha_spec, fmt);
        if (*o_normal) return cmd_oracle_normal(mo, drop, fmt);
        if (*o_means) return cmd_oracle_normal_means(mo, drop, fmt);
        if (*o_gamma) return cmd_oracle_normal_gamma(mo, fmt);
        if (*sample) return cmd_sample(mo, so, out_path);
        if (*coverage) return cmd_coverage(mo, so, qo, bo, alpha_spec, chains, false, fmt);
        if (*soi) return cmd_coverage(mo, so, qo, bo, alpha_spec, chains, true, fmt);
        if (*interp) return cmd_interpolate(mo, interp_model, qo, alpha_star, fmt);
        if (*cross) return cmd_cross_check(check_seed, fmt);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
