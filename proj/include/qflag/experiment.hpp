#pragma once

// Experiment orchestration: a JSON document names an experiment kind, a base
// simulation config and the checks to run; each check may override any
// simulation field and carries its own model parameters.
//
//   {
//     "schema_version": 1,
//     "kind": "clt_area",
//     "sim": {"n": 2, "t_final": 50, "dt": 0.002, "n_paths": 10000, "seed": 1},
//     "params": {"z_threshold": 3},
//     "checks": {"area_covariance": {"bias_budget": 0.1}}
//   }
//
// Reports contain no timing or worker information, so outputs for a fixed
// config and seed are byte-identical whatever the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "qflag/error.hpp"
#include "qflag/flag.hpp"
#include "qflag/parallel.hpp"
#include "qflag/quadrature.hpp"
#include "qflag/sde.hpp"
#include "qflag/spectral.hpp"
#include "qflag/spn.hpp"
#include "qflag/stats.hpp"
#include "qflag/winding.hpp"

namespace qflag {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class ExperimentKind { spn_bm, flag_area, cf_compare, clt_area, winding_clt, jacobi_checks, spectral_checks };

inline const std::vector<std::pair<ExperimentKind, std::string>>& kind_names() {
    static const std::vector<std::pair<ExperimentKind, std::string>> names = {
        {ExperimentKind::spn_bm, "spn_bm"},
        {ExperimentKind::flag_area, "flag_area"},
        {ExperimentKind::cf_compare, "cf_compare"},
        {ExperimentKind::clt_area, "clt_area"},
        {ExperimentKind::winding_clt, "winding_clt"},
        {ExperimentKind::jacobi_checks, "jacobi_checks"},
        {ExperimentKind::spectral_checks, "spectral_checks"},
    };
    return names;
}

inline std::string kind_name(ExperimentKind k) {
    for (const auto& [kind, name] : kind_names())
        if (kind == k) return name;
    return "unknown";
}

inline ExperimentKind parse_kind(const std::string& s) {
    for (const auto& [kind, name] : kind_names())
        if (name == s) return kind;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

/// Checks run by each kind, in report order.
inline std::vector<std::string> kind_checks(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::spn_bm: return {"mean_decay", "skew_product_moments", "skew_product_eta"};
        case ExperimentKind::flag_area: return {"mean_ode", "horizontality"};
        case ExperimentKind::cf_compare: return {"characteristic_function"};
        case ExperimentKind::clt_area: return {"area_covariance"};
        case ExperimentKind::winding_clt: return {"winding_covariance"};
        case ExperimentKind::jacobi_checks: return {"radial_law", "ergodic_average"};
        case ExperimentKind::spectral_checks: return {"basis", "eigen_identity", "dirichlet_moments", "heat_kernel"};
    }
    return {};
}

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::spectral_checks;
    SimConfig sim;
    json params = json::object();
    std::vector<std::pair<std::string, json>> checks;  ///< name, overrides
    unsigned workers = 1;
};

struct CheckResult {
    std::string name;
    bool pass = true;
    std::size_t excluded = 0;
    std::vector<CheckRow> rows;
    json details = json::object();
};

struct ExperimentReport {
    std::string experiment;
    json config;
    std::vector<CheckResult> checks;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    std::size_t excluded() const {
        std::size_t s = 0;
        for (const auto& c : checks) s += c.excluded;
        return s;
    }
};

// ------------------------------------------------------------------ parsing

namespace detail {

inline void apply_sim_fields(SimConfig& cfg, const json& j) {
    if (!j.is_object()) throw ConfigError("sim must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "n")
            cfg.n = v.get<std::size_t>();
        else if (key == "t_final")
            cfg.t_final = v.get<double>();
        else if (key == "dt")
            cfg.dt = v.get<double>();
        else if (key == "n_paths")
            cfg.n_paths = v.get<std::size_t>();
        else if (key == "seed")
            cfg.seed = v.get<std::uint64_t>();
        else if (key == "sphere_scheme") {
            const auto s = v.get<std::string>();
            if (s == "last_row")
                cfg.sphere_scheme = SphereScheme::last_row;
            else if (s == "intrinsic")
                cfg.sphere_scheme = SphereScheme::intrinsic;
            else
                throw ConfigError("unknown sphere_scheme '" + s + "'");
        }
    }
}

inline const char* scheme_name(SphereScheme s) { return s == SphereScheme::last_row ? "last_row" : "intrinsic"; }

inline json sim_json(const SimConfig& c) {
    return {{"n", c.n},         {"t_final", c.t_final}, {"dt", c.dt},
            {"n_paths", c.n_paths}, {"seed", c.seed},   {"sphere_scheme", scheme_name(c.sphere_scheme)}};
}

inline bool is_sim_key(const std::string& k) {
    return k == "n" || k == "t_final" || k == "dt" || k == "n_paths" || k == "seed" || k == "sphere_scheme";
}

}  // namespace detail

/// Parse and validate a config document. `seed_override`, when set, replaces
/// the seed everywhere (base config and per-check overrides).
inline ExperimentSpec parse_spec(const json& doc, std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (!doc.contains("schema_version")) throw ConfigError("config is missing schema_version");
    if (doc.at("schema_version").get<int>() != kSchemaVersion)
        throw ConfigError("unsupported schema_version " + doc.at("schema_version").dump() + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
    if (!doc.contains("kind")) throw ConfigError("config is missing kind");
    ExperimentSpec spec;
    spec.kind = parse_kind(doc.at("kind").get<std::string>());
    if (doc.contains("sim")) detail::apply_sim_fields(spec.sim, doc.at("sim"));
    if (doc.contains("params")) {
        if (!doc.at("params").is_object()) throw ConfigError("params must be an object");
        spec.params = doc.at("params");
    }
    const auto known = kind_checks(spec.kind);
    if (doc.contains("checks")) {
        const json& c = doc.at("checks");
        if (c.is_array()) {
            for (const auto& name : c) spec.checks.emplace_back(name.get<std::string>(), json::object());
        } else if (c.is_object()) {
            // keep the kind's canonical order
            for (const auto& name : known)
                if (c.contains(name)) spec.checks.emplace_back(name, c.at(name));
            for (const auto& [name, v] : c.items())
                if (std::find(known.begin(), known.end(), name) == known.end())
                    throw ConfigError("check '" + name + "' does not belong to kind " + kind_name(spec.kind));
        } else {
            throw ConfigError("checks must be an array or an object");
        }
        for (const auto& [name, v] : spec.checks) {
            if (std::find(known.begin(), known.end(), name) == known.end())
                throw ConfigError("check '" + name + "' does not belong to kind " + kind_name(spec.kind));
            if (!v.is_object()) throw ConfigError("overrides for check '" + name + "' must be an object");
        }
    } else {
        for (const auto& name : known) spec.checks.emplace_back(name, json::object());
    }
    if (seed_override) {
        spec.sim.seed = *seed_override;
        for (auto& [name, v] : spec.checks)
            if (v.contains("seed")) v["seed"] = *seed_override;
    }
    try {
        validate(spec.sim);
        for (const auto& [name, v] : spec.checks) {
            SimConfig c = spec.sim;
            detail::apply_sim_fields(c, v);
            validate(c);
        }
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

inline ExperimentSpec load_spec(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_spec(doc, seed_override);
}

inline json spec_json(const ExperimentSpec& s) {
    json checks = json::object();
    for (const auto& [name, v] : s.checks) checks[name] = v;
    return {{"schema_version", kSchemaVersion},
            {"kind", kind_name(s.kind)},
            {"sim", detail::sim_json(s.sim)},
            {"params", s.params},
            {"checks", checks}};
}

// ------------------------------------------------------------------ check context

/// Parameters visible to one check: its overrides, then the experiment params.
class CheckContext {
public:
    CheckContext(const ExperimentSpec& spec, const json& overrides) : spec_(spec), over_(overrides), sim_(spec.sim) {
        detail::apply_sim_fields(sim_, overrides);
    }

    const SimConfig& sim() const { return sim_; }
    unsigned workers() const { return spec_.workers; }

    bool has(const std::string& key) const { return over_.contains(key) || spec_.params.contains(key); }
    const json& raw(const std::string& key) const { return over_.contains(key) ? over_.at(key) : spec_.params.at(key); }

    template <class T>
    T get(const std::string& key, T fallback) const {
        if (!has(key)) return fallback;
        try {
            return raw(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("parameter '" + key + "': " + e.what());
        }
    }

    double z() const { return get<double>("z_threshold", kDefaultZThreshold); }

    json effective() const {
        json e = spec_.params;
        for (const auto& [k, v] : over_.items())
            if (!detail::is_sim_key(k)) e[k] = v;
        e["sim"] = detail::sim_json(sim_);
        return e;
    }

private:
    const ExperimentSpec& spec_;
    json over_;
    SimConfig sim_;
};

namespace detail {

inline std::string idx(std::initializer_list<std::pair<const char*, double>> parts) {
    std::string s;
    char buf[64];
    for (const auto& [k, v] : parts) {
        std::snprintf(buf, sizeof buf, "%s%s=%.10g", s.empty() ? "" : ",", k, v);
        s += buf;
    }
    return s;
}

inline std::vector<double> lambda_param(const CheckContext& ctx, const std::string& key, std::vector<double> fallback) {
    std::vector<double> lam = ctx.get<std::vector<double>>(key, std::move(fallback));
    if (lam.size() != ctx.sim().n) throw ConfigError(key + " must have n entries");
    try {
        check_simplex(lam, true, key.c_str());
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return lam;
}

inline std::vector<double> balanced(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

/// (sqrt(lambda_1), ..., sqrt(lambda_n)) as real quaternions.
inline std::vector<Quaternion> sphere_point(std::span<const double> lam) {
    std::vector<Quaternion> x(lam.size());
    for (std::size_t j = 0; j < lam.size(); ++j) x[j] = Quaternion{std::sqrt(lam[j]), 0.0, 0.0, 0.0};
    return x;
}

/// Fixed non-trivial starting point exp(X) with X = sum_p 0.5 sin(1.7 p + 0.3) B_p.
inline SpnMatrix rotated_start(std::size_t n) {
    std::vector<double> c(algebra_dimension(n));
    for (std::size_t p = 0; p < c.size(); ++p) c[p] = 0.5 * std::sin(1.7 * static_cast<double>(p) + 0.3);
    return expm(from_coeffs(TangentCoeffs(n, std::move(c))));
}

inline SpnMatrix start_matrix(const CheckContext& ctx) {
    const auto name = ctx.get<std::string>("u0", "rotated");
    if (name == "rotated") return rotated_start(ctx.sim().n);
    if (name == "identity") return SpnMatrix::identity(ctx.sim().n);
    throw ConfigError("u0 must be 'rotated' or 'identity'");
}

/// Step indices for observation times on the grid of cfg.
inline std::vector<std::size_t> grid_steps(const SimConfig& cfg, std::span<const double> times) {
    const TimeGrid g = time_grid(cfg);
    std::vector<std::size_t> out;
    for (double t : times) {
        if (!(t > 0.0) || t > cfg.t_final * (1.0 + 1e-12)) throw ConfigError("observation times must lie in (0, t_final]");
        const double k = t / g.h;
        const double r = std::round(k);
        if (std::abs(k - r) > 1e-6) throw ConfigError("observation time " + std::to_string(t) + " is not on the time grid");
        out.push_back(static_cast<std::size_t>(r));
    }
    return out;
}

inline std::vector<double> default_times(const SimConfig& cfg, int count) {
    std::vector<double> t;
    for (int i = 1; i <= count; ++i) t.push_back(cfg.t_final * i / count);
    return t;
}

/// lambda of a sphere path at the requested steps.
inline std::vector<std::vector<double>> sphere_lambda_at(const SimConfig& cfg, std::span<const Quaternion> x0,
                                                         std::uint64_t path, std::span<const std::size_t> steps) {
    std::vector<std::vector<double>> out;
    out.reserve(steps.size());
    std::size_t next = 0;
    drive_sphere_bm(cfg, x0, path, [&](std::size_t k, double, std::span<const Quaternion> x) {
        while (next < steps.size() && steps[next] == k) {
            std::vector<double> lam(x.size());
            for (std::size_t j = 0; j < x.size(); ++j) lam[j] = norm2(x[j]);
            out.push_back(std::move(lam));
            ++next;
        }
    });
    return out;
}

inline std::vector<std::vector<double>> simplex_lambda_at(const SimConfig& cfg, std::span<const double> lam0,
                                                          std::uint64_t path, std::span<const std::size_t> steps,
                                                          std::size_t& truncations) {
    std::vector<std::vector<double>> out;
    out.reserve(steps.size());
    std::size_t next = 0;
    truncations = drive_jacobi_simplex(cfg, lam0, path, [&](std::size_t k, double, std::span<const double> lam) {
        while (next < steps.size() && steps[next] == k) {
            out.emplace_back(lam.begin(), lam.end());
            ++next;
        }
    });
    return out;
}

/// Stochastic area of the flag Brownian motion, sampled as the projection of
/// a horizontal Brownian motion started at u0.
inline AreaVector flag_area_sample(const SimConfig& cfg, const QMatrix& u0, std::uint64_t path) {
    const std::size_t n = cfg.n;
    FlagState prev = project_affine(u0), next(n);
    AreaVector total(n), inc(n);
    drive_group_bm(cfg, u0, path, GroupNoise::horizontal,
                   [&](std::size_t k, double, const QMatrix&, const QMatrix& u, std::span<const double>) {
                       project_affine_into(u, next);
                       area_increment_into(prev, next, inc);
                       if (!inc.all_finite()) throw NumericalError("flag area: non-finite increment", k);
                       total += inc;
                       std::swap(prev, next);
                   });
    return total;
}

inline void add_rows(CheckResult& r, std::vector<CheckRow> rows) {
    for (auto& row : rows) {
        r.pass = r.pass && row.pass;
        r.rows.push_back(std::move(row));
    }
}

inline void add_row(CheckResult& r, CheckRow row) {
    r.pass = r.pass && row.pass;
    r.rows.push_back(std::move(row));
}

inline json matrix_json(const RealMatrix& m) {
    json a = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

inline json estimate_json(const McEstimate& e) {
    json v = json::array(), s = json::array();
    for (std::size_t i = 0; i < e.rows; ++i) {
        json rv = json::array(), rs = json::array();
        for (std::size_t j = 0; j < e.cols; ++j) {
            rv.push_back(e(i, j));
            rs.push_back(e.se(i, j));
        }
        v.push_back(rv);
        s.push_back(rs);
    }
    return {{"value", v}, {"se", s}, {"n_samples", e.n_samples}, {"excluded", e.excluded}};
}

template <class T>
struct MaybeSample {
    T value{};
    bool ok = false;
};

/// Runs f(p) for every path; domain exits drop the path and are counted.
template <class F>
auto sample_paths(std::size_t count, unsigned workers, std::size_t& excluded, F&& f) {
    using T = std::invoke_result_t<F&, std::size_t>;
    auto raw = parallel_map(count, workers, [&](std::size_t p) {
        MaybeSample<T> s;
        try {
            s.value = f(p);
            s.ok = true;
        } catch (const DomainExitError&) {
        }
        return s;
    });
    std::vector<T> out;
    out.reserve(raw.size());
    for (auto& s : raw) {
        if (s.ok)
            out.push_back(std::move(s.value));
        else
            ++excluded;
    }
    return out;
}

}  // namespace detail

// ------------------------------------------------------------------ checks

/// E[U(t)] = exp(-c(n) t) U(0) entrywise.
inline CheckResult check_mean_decay(const CheckContext& ctx) {
    CheckResult r{"mean_decay"};
    const SimConfig& cfg = ctx.sim();
    const SpnMatrix u0 = detail::start_matrix(ctx);
    const double c = casimir_rate(cfg.n);
    r.details["casimir_rate"] = c;
    if (cfg.t_final == 0.0) return r;
    const std::size_t n = cfg.n;
    const auto finals = parallel_map(cfg.n_paths, ctx.workers(), [&](std::size_t p) {
        std::vector<double> v(4 * n * n);
        QMatrix last = u0.matrix();
        drive_group_bm(cfg, u0.matrix(), p, GroupNoise::full,
                       [&](std::size_t, double, const QMatrix&, const QMatrix& u, std::span<const double>) { last = u; });
        for (std::size_t i = 0; i < n * n; ++i)
            for (int a = 0; a < 4; ++a) v[4 * i + static_cast<std::size_t>(a)] = last(i / n, i % n)[a];
        return v;
    });
    const double decay = std::exp(-c * cfg.t_final);
    std::vector<double> col(finals.size());
    const double budget = ctx.get<double>("bias_budget", 0.0);
    for (std::size_t i = 0; i < n * n; ++i) {
        for (int a = 0; a < 4; ++a) {
            for (std::size_t p = 0; p < finals.size(); ++p) col[p] = finals[p][4 * i + static_cast<std::size_t>(a)];
            const McEstimate m = mean_estimate(col);
            detail::add_row(r, compare("mean_U", detail::idx({{"i", double(i / n + 1)}, {"j", double(i % n + 1)}, {"e", double(a)}}),
                                       m.scalar(), m.se(), decay * u0(i / n, i % n)[a], ctx.z(), budget));
        }
    }
    return r;
}

/// lambda moments from the skew-product construction vs the direct sampler.
inline CheckResult check_skew_product_moments(const CheckContext& ctx) {
    CheckResult r{"skew_product_moments"};
    const SimConfig& cfg = ctx.sim();
    if (cfg.t_final == 0.0) return r;
    const std::size_t n = cfg.n;
    const SpnMatrix u0 = detail::start_matrix(ctx);
    auto lam_final = [&](const QMatrix& u) { return last_row_lambda(u); };
    const auto skew = detail::sample_paths(cfg.n_paths, ctx.workers(), r.excluded, [&](std::size_t p) {
        std::vector<double> lam;
        drive_skew_product(cfg, u0.matrix(), p,
                           [&](std::size_t k, double, const QMatrix&, const QMatrix& u, const FlagState&, const AreaVector&) {
                               if (k == time_grid(cfg).steps) lam = lam_final(u);
                           });
        return lam;
    });
    const auto direct = parallel_map(cfg.n_paths, ctx.workers(), [&](std::size_t p) {
        std::vector<double> lam;
        const std::size_t steps = time_grid(cfg).steps;
        drive_group_bm(cfg, u0.matrix(), cfg.n_paths + p, GroupNoise::full,
                       [&](std::size_t k, double, const QMatrix&, const QMatrix& u, std::span<const double>) {
                           if (k == steps) lam = lam_final(u);
                       });
        return lam;
    });
    for (std::size_t j = 0; j < n; ++j) {
        for (int power = 1; power <= 2; ++power) {
            std::vector<double> a, b;
            for (const auto& l : skew) a.push_back(std::pow(l[j], power));
            for (const auto& l : direct) b.push_back(std::pow(l[j], power));
            const McEstimate ea = mean_estimate(a), eb = mean_estimate(b);
            detail::add_row(r, compare_two("lambda_moment", detail::idx({{"j", double(j + 1)}, {"k", double(power)}}),
                                           ea.scalar(), ea.se(), eb.scalar(), eb.se(), ctx.z()));
        }
    }
    return r;
}

/// Cov(int_U eta) / t in the orthonormal frame of sp(1)^n equals I_{3n}.
inline CheckResult check_skew_product_eta(const CheckContext& ctx) {
    CheckResult r{"skew_product_eta"};
    const SimConfig& cfg = ctx.sim();
    if (cfg.t_final == 0.0) return r;
    const std::size_t n = cfg.n;
    const SpnMatrix u0 = detail::start_matrix(ctx);
    // coefficients on (i, j, k) have variance kFiberRate per unit time
    const double scale = 1.0 / std::sqrt(kFiberRate * cfg.t_final);
    const auto samples = detail::sample_paths(cfg.n_paths, ctx.workers(), r.excluded, [&](std::size_t p) {
        AreaVector total(n), inc(n);
        drive_skew_product(cfg, u0.matrix(), p,
                           [&](std::size_t, double, const QMatrix& a, const QMatrix& b, const FlagState&, const AreaVector&) {
                               eta_increment_into(a, b, inc);
                               total += inc;
                           });
        std::vector<double> v = total.a;
        for (double& x : v) x *= scale;
        return v;
    });
    const McEstimate cov = cov_estimate(samples);
    RealMatrix target(3 * n, 3 * n);
    for (std::size_t i = 0; i < 3 * n; ++i) target(i, i) = 1.0;
    detail::add_rows(r, compare_matrix("eta_covariance", cov, target, ctx.z(), ctx.get<double>("bias_budget", 0.0)));
    r.details["empirical_cov"] = detail::estimate_json(cov);
    return r;
}

/// E[lambda_j(t)] = 1/n + (lambda_j(0) - 1/n) exp(-4 n t).
inline CheckResult check_mean_ode(const CheckContext& ctx) {
    CheckResult r{"mean_ode"};
    const SimConfig& cfg = ctx.sim();
    if (cfg.t_final == 0.0) return r;
    std::vector<double> fallback(cfg.n, 0.1 / static_cast<double>(cfg.n - 1));
    fallback[0] = 0.9;
    const auto lam0 = detail::lambda_param(ctx, "lambda0", fallback);
    const auto times = ctx.get<std::vector<double>>("times", detail::default_times(cfg, 5));
    const auto steps = detail::grid_steps(cfg, times);
    const auto x0 = detail::sphere_point(lam0);
    const auto samples = parallel_map(cfg.n_paths, ctx.workers(), [&](std::size_t p) {
        return detail::sphere_lambda_at(cfg, x0, p, steps);
    });
    const double budget = ctx.get<double>("bias_budget", 0.0);
    const MeanOdeReport rep = mean_ode_check(times, samples, lam0, budget, ctx.z());
    detail::add_rows(r, rep.rows);
    r.details["max_abs_z"] = rep.max_abs_z;
    r.details["sphere_scheme"] = detail::scheme_name(cfg.sphere_scheme);
    return r;
}

/// RMS over paths of |int eta| along horizontal paths, at two meshes.
inline double horizontal_eta_rms(const SimConfig& cfg, unsigned workers) {
    const SpnMatrix u0 = detail::rotated_start(cfg.n);
    const auto sq = parallel_map(cfg.n_paths, workers, [&](std::size_t p) {
        AreaVector total(cfg.n), inc(cfg.n);
        drive_group_bm(cfg, u0.matrix(), p, GroupNoise::horizontal,
                       [&](std::size_t, double, const QMatrix& a, const QMatrix& b, std::span<const double>) {
                           eta_increment_into(a, b, inc);
                           total += inc;
                       });
        double s = 0.0;
        for (double v : total.a) s += v * v;
        return s;
    });
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

/// The connection form integrates to zero along horizontal paths up to the
/// discretization error, which must shrink under refinement.
inline CheckResult check_horizontality(const CheckContext& ctx) {
    CheckResult r{"horizontality"};
    const SimConfig& cfg = ctx.sim();
    if (cfg.t_final == 0.0) return r;
    const double refine = ctx.get<double>("refine", 4.0);
    const double rms_max = ctx.get<double>("rms_max", 0.02);
    const double min_ratio = ctx.get<double>("min_ratio", 1.5);
    const double floor = ctx.get<double>("roundoff_floor", 1e-10);
    auto mesh_pair = [&](SimConfig fine, const std::string& tag) {
        SimConfig coarse = fine;
        coarse.dt = fine.dt * refine;
        const double rc = horizontal_eta_rms(coarse, ctx.workers());
        const double rf = horizontal_eta_rms(fine, ctx.workers());
        CheckRow c = compare("eta_rms", detail::idx({{"n", double(fine.n)}, {"dt", coarse.dt}}), rc, 0.0, 0.0, 0.0, INFINITY);
        c.pass = true;
        detail::add_row(r, c);
        CheckRow f = compare("eta_rms", detail::idx({{"n", double(fine.n)}, {"dt", fine.dt}}), rf, 0.0, 0.0, 0.0, rms_max);
        detail::add_row(r, f);
        // a scheme that is exactly horizontal leaves only roundoff at every mesh
        const bool exact = rc <= floor && rf <= floor;
        const double ratio = exact ? 0.0 : rc / rf;
        CheckRow q;
        q.quantity = "eta_rms_ratio";
        q.index = detail::idx({{"n", double(fine.n)}, {"refine", refine}});
        q.value = ratio;
        q.target = std::sqrt(refine);
        q.pass = exact || ratio >= min_ratio;
        detail::add_row(r, q);
        r.details[tag] = {{"n", fine.n}, {"rms_coarse", rc}, {"rms_fine", rf}, {"ratio", ratio}, {"exact", exact}};
    };
    mesh_pair(cfg, "primary");
    if (ctx.has("rate_n")) {
        SimConfig rate = cfg;
        rate.n = ctx.get<std::size_t>("rate_n", 3);
        rate.dt = ctx.get<double>("rate_dt", cfg.dt);
        if (ctx.has("rate_paths")) rate.n_paths = ctx.get<std::size_t>("rate_paths", cfg.n_paths);
        validate(rate);
        mesh_pair(rate, "rate");
    }
    return r;
}

/// Moments of lambda(t) from the sphere sampler vs the simplex SDE.
inline CheckResult check_radial_law(const CheckContext& ctx) {
    CheckResult r{"radial_law"};
    const SimConfig& cfg = ctx.sim();
    if (cfg.t_final == 0.0) return r;
    std::vector<double> fallback(cfg.n, 0.3 / static_cast<double>(cfg.n - 1));
    fallback[0] = 0.7;
    const auto lam0 = detail::lambda_param(ctx, "lambda0", fallback);
    const auto times = ctx.get<std::vector<double>>("times", std::vector<double>{cfg.t_final});
    const auto steps = detail::grid_steps(cfg, times);
    const auto x0 = detail::sphere_point(lam0);
    const auto sphere = parallel_map(cfg.n_paths, ctx.workers(), [&](std::size_t p) {
        return detail::sphere_lambda_at(cfg, x0, p, steps);
    });
    const auto simplex = parallel_map(cfg.n_paths, ctx.workers(), [&](std::size_t p) {
        std::size_t trunc = 0;
        auto l = detail::simplex_lambda_at(cfg, lam0, p, steps, trunc);
        return std::make_pair(std::move(l), trunc);
    });
    std::size_t truncations = 0;
    for (const auto& s : simplex) truncations += s.second;
    r.details["truncations"] = truncations;
    std::vector<double> a(cfg.n_paths), b(cfg.n_paths);
    for (std::size_t g = 0; g < times.size(); ++g) {
        for (std::size_t j = 0; j < cfg.n; ++j) {
            for (int power = 1; power <= 2; ++power) {
                for (std::size_t p = 0; p < cfg.n_paths; ++p) {
                    a[p] = std::pow(sphere[p][g][j], power);
                    b[p] = std::pow(simplex[p].first[g][j], power);
                }
                const McEstimate ea = mean_estimate(a), eb = mean_estimate(b);
                detail::add_row(r, compare_two("lambda_moment",
                                               detail::idx({{"t", times[g]}, {"j", double(j + 1)}, {"k", double(power)}}),
                                               ea.scalar(), ea.se(), eb.scalar(), eb.se(), ctx.z()));
            }
        }
    }
    return r;
}

/// Time average of (1 - lambda_j)/lambda_j along one path vs 2n - 2, and the
/// stationary integral by quadrature.
inline CheckResult check_ergodic_average(const CheckContext& ctx) {
    CheckResult r{"ergodic_average"};
    const SimConfig& cfg = ctx.sim();
    const double target = 2.0 * static_cast<double>(cfg.n) - 2.0;
    const double integral = stationary_ratio_integral(cfg.n);
    CheckRow q = compare("stationary_integral", detail::idx({{"n", double(cfg.n)}}), integral, 0.0, target, 0.0,
                         ctx.get<double>("quadrature_tolerance", 1e-8));
    detail::add_row(r, q);
    if (cfg.t_final == 0.0) return r;
    const auto lam0 = detail::lambda_param(ctx, "lambda0", detail::balanced(cfg.n));
    const auto x0 = detail::sphere_point(lam0);
    const auto path = ctx.get<std::uint64_t>("path", 0);
    std::vector<std::vector<double>> lam;
    lam.reserve(time_grid(cfg).steps);
    drive_sphere_bm(cfg, x0, path, [&](std::size_t, double, std::span<const Quaternion> x) {
        std::vector<double> l(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) l[j] = norm2(x[j]);
        lam.push_back(std::move(l));
    });
    const McEstimate e = ergodic_check(lam, time_grid(cfg).h, ctx.get<std::size_t>("batches", 20));
    r.excluded = e.excluded;
    for (std::size_t j = 0; j < cfg.n; ++j)
        detail::add_row(r, compare("ergodic_ratio", detail::idx({{"j", double(j + 1)}}), e.value[j], e.std_error[j], target,
                                   ctx.z()));
    return r;
}

/// Orthonormality and size of the sp(n) basis, and the Casimir sum.
inline CheckResult check_basis(const CheckContext& ctx) {
    CheckResult r{"basis"};
    const auto dims = ctx.get<std::vector<std::size_t>>("dims", std::vector<std::size_t>{2, 3, 4});
    const double tol = ctx.get<double>("tolerance", 1e-13);
    for (std::size_t n : dims) {
        const auto b = basis(n);
        double err = 0.0;
        for (std::size_t p = 0; p < b.size(); ++p)
            for (std::size_t q = 0; q < b.size(); ++q)
                err = std::max(err, std::abs(hs_inner(b[p], b[q]) - (p == q ? 1.0 : 0.0)));
        CheckRow size = compare("basis_size", detail::idx({{"n", double(n)}}), double(b.size()), 0.0,
                                double(algebra_dimension(n)), 0.0, 0.0);
        detail::add_row(r, size);
        detail::add_row(r, compare("gram_error", detail::idx({{"n", double(n)}}), err, 0.0, 0.0, 0.0, tol));
        detail::add_row(r, compare("casimir_rate", detail::idx({{"n", double(n)}}), casimir_rate(n), 0.0,
                                   2.0 * double(n) + 1.0, 0.0, 1e-12));
    }
    return r;
}

/// Coefficientwise G P_tau = lambda_|tau| P_tau for the orthonormal polynomials.
inline CheckResult check_eigen_identity(const CheckContext& ctx) {
    CheckResult r{"eigen_identity"};
    const auto dims = ctx.get<std::vector<std::size_t>>("dims", std::vector<std::size_t>{2, 3});
    const int degree = ctx.get<int>("max_degree", 5);
    const double tol = ctx.get<double>("tolerance", 1e-9);
    const std::vector<double> shift = ctx.get<std::vector<double>>("shift_mu", std::vector<double>{0.25, 0.6, 0.4, 0.8});
    for (std::size_t n : dims) {
        if (shift.size() < n) throw ConfigError("shift_mu needs at least n entries");
        const std::vector<JacobiIndex> indices = {JacobiIndex::uniform(n, 1.5),
                                                  JacobiIndex::shifted(std::span<const double>(shift).first(n))};
        for (std::size_t s = 0; s < indices.size(); ++s) {
            const auto polys = jacobi_polynomials(indices[s], degree);
            double worst = 0.0;
            for (const auto& p : polys) {
                const Polynomial lhs = apply_generator(indices[s], p.poly);
                const double ev = jacobi_eigenvalue(indices[s], p.degree());
                worst = std::max(worst, max_coefficient_difference(lhs, ev * p.poly));
            }
            detail::add_row(r, compare("eigen_residual", detail::idx({{"n", double(n)}, {"shifted", double(s)}}), worst, 0.0,
                                       0.0, 0.0, tol));
        }
    }
    return r;
}

/// Dirichlet(3/2) moments: mean 1/n, second moment 3/(n(2n+1)), double vs
/// working precision, and orthonormality of the low-degree basis.
inline CheckResult check_dirichlet_moments(const CheckContext& ctx) {
    CheckResult r{"dirichlet_moments"};
    const auto dims = ctx.get<std::vector<std::size_t>>("dims", std::vector<std::size_t>{2, 3});
    for (std::size_t n : dims) {
        const JacobiIndex k = JacobiIndex::uniform(n, 1.5);
        std::vector<int> a1(n, 0), a2(n, 0);
        a1[0] = 1;
        a2[0] = 2;
        const double nd = static_cast<double>(n);
        detail::add_row(r, compare("moment", detail::idx({{"n", nd}, {"k", 1}}), dirichlet_moment(k, a1), 0.0, 1.0 / nd, 0.0,
                                   1e-14));
        detail::add_row(r, compare("moment", detail::idx({{"n", nd}, {"k", 2}}), dirichlet_moment(k, a2), 0.0,
                                   3.0 / (nd * (2.0 * nd + 1.0)), 0.0, 1e-14));
        std::vector<int> big(n, 0);
        big[0] = 7;
        big[n - 1] = 5;
        const double lo = dirichlet_moment(k, big), hi = static_cast<double>(dirichlet_moment_high(k, big));
        detail::add_row(r, compare("moment_precision", detail::idx({{"n", nd}}), lo, 0.0, hi, 0.0, 1e-13 * std::abs(hi)));
        const int degree = 4;
        const auto polys = jacobi_polynomials(k, degree);
        double err = 0.0;
        for (std::size_t p = 0; p < polys.size(); ++p)
            for (std::size_t q = 0; q <= p; ++q)
                err = std::max(err, std::abs(static_cast<double>(dirichlet_inner(k, polys[p].precise, polys[q].precise)) -
                                             (p == q ? 1.0 : 0.0)));
        detail::add_row(r, compare("orthonormality", detail::idx({{"n", nd}, {"degree", degree}}), err, 0.0, 0.0, 0.0, 1e-12));
    }
    return r;
}

/// Heat kernel: mass one, symmetry, and the characteristic function at u = 0.
inline CheckResult check_heat_kernel(const CheckContext& ctx) {
    CheckResult r{"heat_kernel"};
    const std::size_t n = ctx.get<std::size_t>("kernel_n", 2);
    const double t = ctx.get<double>("kernel_t", 0.25);
    const int degree = ctx.get<int>("degree", default_kernel_degree(n));
    const JacobiIndex k = JacobiIndex::uniform(n, 1.5);
    const JacobiHeatKernel kernel(k, degree);
    std::vector<double> x(n - 1), y(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        x[i] = 0.6 / static_cast<double>(n - 1) * (i == 0 ? 1.2 : 0.8);
        y[i] = 0.3 / static_cast<double>(n - 1);
    }
    const auto px = kernel.evaluate(x);
    const QuadratureResult mass = integrate_simplex(
        n - 1, [&](std::span<const double> z) { return kernel.with_left(t, px, z).value * dirichlet_density(k, z); },
        {1e-11, 1e-300, 8, 512});
    detail::add_row(r, compare("kernel_mass", detail::idx({{"n", double(n)}, {"t", t}}), mass.value, 0.0, 1.0, 0.0, 1e-8));
    const double qxy = kernel(t, x, y).value, qyx = kernel(t, y, x).value;
    detail::add_row(r, compare("kernel_symmetry", detail::idx({{"n", double(n)}, {"t", t}}), qxy, 0.0, qyx, 0.0,
                               1e-12 * std::max(1.0, std::abs(qyx))));
    std::vector<double> lam0(n);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) s += lam0[i] = x[i];
    lam0[n - 1] = 1.0 - s;
    const CfValue cf0 = cf_unconditional(n, t, lam0, FrequencyVector(n), degree);
    detail::add_row(r, compare("cf_at_zero", detail::idx({{"n", double(n)}, {"t", t}}), cf0.value, 0.0, 1.0, 0.0, 1e-10));
    r.details["kernel_tail"] = kernel(t, x, y).tail_bound;
    return r;
}

/// Empirical characteristic function of the areas vs the spectral formula.
inline CheckResult check_characteristic_function(const CheckContext& ctx) {
    CheckResult r{"characteristic_function"};
    const SimConfig& cfg = ctx.sim();
    const std::size_t n = cfg.n;
    if (!ctx.has("u_grid")) throw ConfigError("cf_compare needs a u_grid");
    const auto grid = ctx.get<std::vector<std::vector<double>>>("u_grid", {});
    for (const auto& u : grid)
        if (u.size() != 3 * n) throw ConfigError("each u_grid point needs 3n entries");
    if (cfg.t_final == 0.0) return r;
    const auto lam0 = detail::lambda_param(ctx, "lambda0", detail::balanced(n));
    const int degree = ctx.get<int>("degree", default_kernel_degree(n));
    const SpnMatrix u0 = complete_to_symplectic(detail::sphere_point(lam0));
    const auto areas = detail::sample_paths(cfg.n_paths, ctx.workers(), r.excluded,
                                            [&](std::size_t p) { return detail::flag_area_sample(cfg, u0.matrix(), p); });
    json points = json::array();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const FrequencyVector u(n, grid[g]);
        const CfEstimate mc = empirical_cf(areas, u);
        const CfValue an = cf_unconditional(n, cfg.t_final, lam0, u, degree);
        CheckRow re = compare("cf_real", detail::idx({{"point", double(g)}}), mc.real.scalar(), mc.real.se(), an.value, ctx.z());
        re.pass = re.pass && an.accurate;
        detail::add_row(r, re);
        detail::add_row(r, compare("cf_imag", detail::idx({{"point", double(g)}}), mc.imag.scalar(), mc.imag.se(), 0.0, ctx.z()));
        points.push_back({{"u", grid[g]},
                          {"mc", mc.real.scalar()},
                          {"se", mc.real.se()},
                          {"analytic", an.value},
                          {"tail_bound", an.tail_bound},
                          {"quadrature_order", an.quadrature_order}});
    }
    r.details["points"] = points;
    return r;
}

/// Cov(a(t)/sqrt t) vs Sigma (x) I_3.
inline CheckResult check_area_covariance(const CheckContext& ctx) {
    CheckResult r{"area_covariance"};
    const SimConfig& cfg = ctx.sim();
    const std::size_t n = cfg.n;
    if (cfg.t_final == 0.0) return r;
    const auto lam0 = detail::lambda_param(ctx, "lambda0", detail::balanced(n));
    const SpnMatrix u0 = complete_to_symplectic(detail::sphere_point(lam0));
    const double scale = 1.0 / std::sqrt(cfg.t_final);
    const auto samples = detail::sample_paths(cfg.n_paths, ctx.workers(), r.excluded, [&](std::size_t p) {
        std::vector<double> v = detail::flag_area_sample(cfg, u0.matrix(), p).a;
        for (double& x : v) x *= scale;
        return v;
    });
    const McEstimate cov = cov_estimate(samples);
    const double budget = ctx.get<double>("bias_budget", 5.0 / cfg.t_final);
    const RealMatrix target = limit_covariance(n);
    detail::add_rows(r, compare_matrix("area_covariance", cov, target, ctx.z(), budget));
    r.details["empirical_cov"] = detail::estimate_json(cov);
    r.details["target"] = detail::matrix_json(target);
    r.details["bias_budget"] = budget;
    return r;
}

/// Winding covariance against both candidate limits.
inline CheckResult check_winding_covariance(const CheckContext& ctx) {
    CheckResult r{"winding_covariance"};
    const SimConfig& cfg = ctx.sim();
    if (!ctx.has("mu")) throw ConfigError("winding_clt needs mu");
    const auto mu = ctx.get<std::vector<double>>("mu", {});
    if (mu.size() != cfg.n) throw ConfigError("mu must have n entries");
    if (cfg.t_final == 0.0) return r;
    CanonicalVariation cv;
    try {
        cv = CanonicalVariation(mu);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    const double budget = ctx.get<double>("bias_budget", 0.0);
    const double decisive = ctx.get<double>("decisive_z", 5.0);
    const WindingReport w = winding_clt_experiment(cfg, cv, ctx.workers(), ctx.z(), budget);
    r.excluded = w.excluded;
    for (const auto& row : w.rows_linear) r.rows.push_back(row);
    for (const auto& row : w.rows_quadratic) r.rows.push_back(row);
    for (const auto& row : w.rows_offdiag) r.rows.push_back(row);
    const bool lin = all_pass(w.rows_linear), quad = all_pass(w.rows_quadratic);
    const bool decided = (lin && !quad && w.max_z_quadratic > decisive) || (quad && !lin && w.max_z_linear > decisive);
    r.pass = decided && all_pass(w.rows_offdiag);
    json zl = json::array(), zq = json::array();
    for (const auto& row : w.rows_linear) zl.push_back(row.z);
    for (const auto& row : w.rows_quadratic) zq.push_back(row.z);
    r.details = {{"empirical_cov", detail::estimate_json(w.empirical)},
                 {"candidate_A", detail::matrix_json(w.candidates.linear)},
                 {"candidate_B", detail::matrix_json(w.candidates.quadratic)},
                 {"per_entry_z_scores", {{"candidate_A", zl}, {"candidate_B", zq}}},
                 {"max_abs_z", {{"candidate_A", w.max_z_linear}, {"candidate_B", w.max_z_quadratic}}},
                 {"verdict", w.verdict},
                 {"underpowered", w.underpowered},
                 {"excluded_paths", w.excluded}};
    return r;
}

// ------------------------------------------------------------------ run

inline CheckResult run_check(const std::string& name, const CheckContext& ctx) {
    if (name == "mean_decay") return check_mean_decay(ctx);
    if (name == "skew_product_moments") return check_skew_product_moments(ctx);
    if (name == "skew_product_eta") return check_skew_product_eta(ctx);
    if (name == "mean_ode") return check_mean_ode(ctx);
    if (name == "horizontality") return check_horizontality(ctx);
    if (name == "radial_law") return check_radial_law(ctx);
    if (name == "ergodic_average") return check_ergodic_average(ctx);
    if (name == "basis") return check_basis(ctx);
    if (name == "eigen_identity") return check_eigen_identity(ctx);
    if (name == "dirichlet_moments") return check_dirichlet_moments(ctx);
    if (name == "heat_kernel") return check_heat_kernel(ctx);
    if (name == "characteristic_function") return check_characteristic_function(ctx);
    if (name == "area_covariance") return check_area_covariance(ctx);
    if (name == "winding_covariance") return check_winding_covariance(ctx);
    throw ConfigError("unknown check '" + name + "'");
}

inline ExperimentReport run(const ExperimentSpec& spec) {
    ExperimentReport rep;
    rep.experiment = kind_name(spec.kind);
    rep.config = spec_json(spec);
    for (const auto& [name, overrides] : spec.checks) {
        const CheckContext ctx(spec, overrides);
        CheckResult c = run_check(name, ctx);
        c.details["parameters"] = ctx.effective();
        rep.checks.push_back(std::move(c));
    }
    return rep;
}

// ------------------------------------------------------------------ output

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Long-format table: experiment, check, quantity, index, value, se, target, z, pass.
inline std::string plot_csv(const ExperimentReport& rep) {
    std::ostringstream os;
    os << "experiment,check,quantity,index,value,se,target,z,pass\n";
    for (const auto& c : rep.checks)
        for (const auto& r : c.rows)
            os << rep.experiment << ',' << c.name << ',' << r.quantity << ",\"" << r.index << "\"," << format_double(r.value)
               << ',' << format_double(r.se) << ',' << format_double(r.target) << ',' << format_double(r.z) << ','
               << (r.pass ? 1 : 0) << '\n';
    return os.str();
}

inline json report_json(const ExperimentReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks) {
        json rows = json::array();
        for (const auto& r : c.rows)
            rows.push_back({{"quantity", r.quantity},
                            {"index", r.index},
                            {"estimate", r.value},
                            {"se", r.se},
                            {"target", r.target},
                            {"z", std::isfinite(r.z) ? json(r.z) : json(format_double(r.z))},
                            {"bias_budget", r.bias_budget},
                            {"pass", r.pass}});
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"excluded", c.excluded}, {"rows", rows}, {"details", c.details}});
    }
    return {{"experiment", rep.experiment},
            {"config", rep.config},
            {"pass", rep.pass()},
            {"excluded_paths", rep.excluded()},
            {"checks", checks}};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("write failed for " + path);
}

/// Writes <dir>/<experiment>.csv.
inline std::string emit_plot_data(const ExperimentReport& rep, const std::string& dir) {
    const std::string path = dir + "/" + rep.experiment + ".csv";
    write_file(path, plot_csv(rep));
    return path;
}

inline std::string emit_report(const ExperimentReport& rep, const std::string& dir) {
    const std::string path = dir + "/report.json";
    write_file(path, report_json(rep).dump(2) + "\n");
    return path;
}

/// One line per check plus a verdict line.
inline std::string summary_table(const ExperimentReport& rep) {
    std::ostringstream os;
    for (const auto& c : rep.checks) {
        double worst = 0.0;
        for (const auto& r : c.rows)
            if (r.se > 0.0) worst = std::max(worst, std::abs(r.z));
        os << (c.pass ? "PASS " : "FAIL ") << rep.experiment << '/' << c.name << "  rows=" << c.rows.size()
           << "  max|z|=" << format_double(worst) << "  excluded=" << c.excluded << '\n';
    }
    os << (rep.pass() ? "PASS " : "FAIL ") << rep.experiment << '\n';
    return os.str();
}

}  // namespace qflag
