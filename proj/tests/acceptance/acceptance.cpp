// Acceptance runner: one PASS/FAIL line per criterion.
//
//   qflag_acceptance --criterion 5 [--out DIR] [--workers N]
//   qflag_acceptance --all

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qflag/experiment.hpp"

using namespace qflag;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    double budget_s;
    std::function<Outcome(unsigned, const std::string&)> body;
};

double worst_z(const CheckResult& c) {
    double w = 0.0;
    for (const auto& r : c.rows)
        if (r.se > 0.0) w = std::max(w, std::abs(r.z));
    return w;
}

double worst_value(const CheckResult& c, const std::string& quantity) {
    double w = 0.0;
    for (const auto& r : c.rows)
        if (r.quantity == quantity) w = std::max(w, std::abs(r.value - r.target));
    return w;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ExperimentReport run_config(const std::string& text, unsigned workers, const std::string& out, const std::string& tag) {
    ExperimentSpec spec = parse_spec(json::parse(text));
    spec.workers = workers;
    ExperimentReport rep = run(spec);
    if (!out.empty()) {
        const std::string dir = out + "/" + tag;
        std::filesystem::create_directories(dir);
        emit_plot_data(rep, dir);
        emit_report(rep, dir);
    }
    return rep;
}

const CheckResult& check(const ExperimentReport& rep, const std::string& name) {
    for (const auto& c : rep.checks)
        if (c.name == name) return c;
    throw Error("report has no check " + name);
}

Outcome simple(const ExperimentReport& rep, const std::string& name) {
    const CheckResult& c = check(rep, name);
    return {c.pass, name + " rows=" + std::to_string(c.rows.size()) + " max|z|=" + fmt("%.3g", worst_z(c)) +
                        " excluded=" + std::to_string(c.excluded)};
}

std::vector<Criterion> criteria() {
    std::vector<Criterion> v;
    v.push_back({"1", "sp(n) basis orthonormal, n = 2, 3, 4", 1.0, [](unsigned w, const std::string& out) {
                     const auto rep = run_config(R"({"schema_version":1,"kind":"spectral_checks",
                         "checks":{"basis":{"dims":[2,3,4],"tolerance":1e-13}}})", w, out, "c01");
                     const CheckResult& c = check(rep, "basis");
                     return Outcome{c.pass, "max gram error " + fmt("%.3g", worst_value(c, "gram_error"))};
                 }});
    v.push_back({"2", "generator eigen-identity, |tau| <= 5, n = 2, 3", 10.0, [](unsigned w, const std::string& out) {
                     const auto rep = run_config(R"({"schema_version":1,"kind":"spectral_checks",
                         "checks":{"eigen_identity":{"dims":[2,3],"max_degree":5,"tolerance":1e-9}}})", w, out, "c02");
                     const CheckResult& c = check(rep, "eigen_identity");
                     return Outcome{c.pass, "max residual " + fmt("%.3g", worst_value(c, "eigen_residual"))};
                 }});
    v.push_back({"3", "E[U(t)] = exp(-(2n+1)t) U(0), n = 2, t = 0.5", 120.0, [](unsigned w, const std::string& out) {
                     return simple(run_config(R"({"schema_version":1,"kind":"spn_bm",
                         "sim":{"n":2,"t_final":0.5,"dt":1e-3,"n_paths":20000,"seed":14},
                         "checks":{"mean_decay":{}}})", w, out, "c03"), "mean_decay");
                 }});
    v.push_back({"4", "radial law: Sp(n) last row vs simplex SDE, n = 2", 120.0, [](unsigned w, const std::string& out) {
                     return simple(run_config(R"({"schema_version":1,"kind":"jacobi_checks",
                         "sim":{"n":2,"t_final":1.0,"dt":1e-3,"n_paths":10000,"seed":13},
                         "checks":{"radial_law":{"lambda0":[0.7,0.3],"times":[0.2,1.0]}}})", w, out, "c04"), "radial_law");
                 }});
    v.push_back({"5", "mean ODE for lambda_j(t)", 60.0, [](unsigned w, const std::string& out) {
                     return simple(run_config(R"({"schema_version":1,"kind":"flag_area",
                         "sim":{"n":2,"t_final":0.25,"dt":5e-4,"n_paths":20000,"seed":11},
                         "checks":{"mean_ode":{"lambda0":[0.9,0.1],"times":[0.05,0.1,0.15,0.2,0.25]}}})", w, out, "c05"),
                                   "mean_ode");
                 }});
    v.push_back({"6", "horizontality of int eta under refinement", 120.0, [](unsigned w, const std::string& out) {
                     const auto rep = run_config(R"({"schema_version":1,"kind":"flag_area",
                         "sim":{"n":2,"t_final":1,"dt":1e-4,"n_paths":200,"seed":12},
                         "checks":{"horizontality":{"rms_max":0.02,"rate_n":3,"rate_dt":2.5e-4}}})", w, out, "c06");
                     const CheckResult& c = check(rep, "horizontality");
                     const json& d = c.details;
                     std::ostringstream os;
                     os << "n=2 rms " << fmt("%.3g", d["primary"]["rms_coarse"].get<double>()) << " -> "
                        << fmt("%.3g", d["primary"]["rms_fine"].get<double>())
                        << (d["primary"]["exact"].get<bool>() ? " (exact)" : "") << "; n=3 rms "
                        << fmt("%.3g", d["rate"]["rms_coarse"].get<double>()) << " -> "
                        << fmt("%.3g", d["rate"]["rms_fine"].get<double>()) << " ratio "
                        << fmt("%.3g", d["rate"]["ratio"].get<double>());
                     return Outcome{c.pass, os.str()};
                 }});
    v.push_back({"7", "skew product: lambda moments and Cov(int eta)/t", 180.0, [](unsigned w, const std::string& out) {
                     const auto rep = run_config(R"({"schema_version":1,"kind":"spn_bm","sim":{"n":2,"dt":1e-3,"seed":14},
                         "checks":{"skew_product_moments":{"t_final":0.5,"n_paths":10000},
                                   "skew_product_eta":{"t_final":5,"dt":2e-3,"n_paths":4000}}})", w, out, "c07");
                     const Outcome a = simple(rep, "skew_product_moments"), b = simple(rep, "skew_product_eta");
                     return Outcome{a.pass && b.pass, a.detail + "; " + b.detail};
                 }});
    v.push_back({"8", "characteristic function vs spectral formula, n = 2, t = 0.5", 600.0,
                 [](unsigned w, const std::string& out) {
                     return simple(run_config(R"({"schema_version":1,"kind":"cf_compare",
                         "sim":{"n":2,"t_final":0.5,"dt":1e-3,"n_paths":50000,"seed":15},
                         "params":{"lambda0":[0.5,0.5],"degree":40,
                           "u_grid":[[0.5,0,0,0,0,0],[1,0,0,0,0,0],[0.6,0.3,0,0.4,0,0],[0,0,0.8,0,0,0.8],[1,0,0,-0.8,0.3,0]]}})",
                                             w, out, "c08"),
                                  "characteristic_function");
                 }});
    v.push_back({"9a", "area CLT, n = 2, t = 50", 600.0, [](unsigned w, const std::string& out) {
                     return simple(run_config(R"({"schema_version":1,"kind":"clt_area",
                         "sim":{"n":2,"t_final":50,"dt":2e-3,"n_paths":10000,"seed":16}})", w, out, "c09a"),
                                   "area_covariance");
                 }});
    v.push_back({"9b", "area CLT, n = 3, t = 50", 600.0, [](unsigned w, const std::string& out) {
                     return simple(run_config(R"({"schema_version":1,"kind":"clt_area",
                         "sim":{"n":3,"t_final":50,"dt":2e-3,"n_paths":10000,"seed":18}})", w, out, "c09b"),
                                   "area_covariance");
                 }});
    v.push_back({"10", "ergodic average of (1 - lambda)/lambda, n = 2, t = 100", 120.0,
                 [](unsigned w, const std::string& out) {
                     const auto rep = run_config(R"({"schema_version":1,"kind":"jacobi_checks",
                         "sim":{"n":2,"t_final":100,"dt":1e-3,"seed":13},
                         "checks":{"ergodic_average":{}}})", w, out, "c10");
                     const CheckResult& c = check(rep, "ergodic_average");
                     std::ostringstream os;
                     for (const auto& r : c.rows)
                         os << r.quantity << '[' << r.index << "]=" << fmt("%.10g", r.value)
                            << (r.se > 0 ? " +- " + fmt("%.3g", r.se) : std::string()) << ' ';
                     return Outcome{c.pass, os.str()};
                 }});
    v.push_back({"11", "winding CLT, n = 2, mu = (2, 1), t = 50", 600.0, [](unsigned w, const std::string& out) {
                     const auto rep = run_config(R"({"schema_version":1,"kind":"winding_clt",
                         "sim":{"n":2,"t_final":50,"dt":2e-3,"n_paths":10000,"seed":17},"params":{"mu":[2,1]}})",
                                                 w, out, "c11");
                     const CheckResult& c = check(rep, "winding_covariance");
                     const json& d = c.details;
                     std::ostringstream os;
                     os << "verdict " << d["verdict"].get<std::string>() << "; max|z| Sigma+diag(mu)="
                        << fmt("%.3g", d["max_abs_z"]["candidate_A"].get<double>()) << ", Sigma+diag(mu^2)="
                        << fmt("%.3g", d["max_abs_z"]["candidate_B"].get<double>())
                        << "; excluded=" << c.excluded;
                     return Outcome{c.pass, os.str()};
                 }});
    v.push_back({"12", "byte-identical outputs with 1, 4 and 8 workers", 300.0, [](unsigned, const std::string& out) {
                     const std::vector<std::string> configs = {
                         R"({"schema_version":1,"kind":"clt_area","sim":{"n":2,"t_final":2,"dt":5e-3,"n_paths":400,"seed":3}})",
                         R"({"schema_version":1,"kind":"flag_area","sim":{"n":3,"t_final":0.1,"dt":1e-3,"n_paths":1000,"seed":4},
                             "checks":{"mean_ode":{}}})",
                         R"({"schema_version":1,"kind":"winding_clt","sim":{"n":2,"t_final":1,"dt":5e-3,"n_paths":300,"seed":5},
                             "params":{"mu":[2,1]}})",
                         R"({"schema_version":1,"kind":"spn_bm","sim":{"n":2,"t_final":0.2,"dt":2e-3,"n_paths":300,"seed":6}})"};
                     bool same = true;
                     std::ostringstream os;
                     for (std::size_t i = 0; i < configs.size(); ++i) {
                         std::string csv0, js0;
                         for (unsigned w : {1u, 4u, 8u}) {
                             const auto rep = run_config(configs[i], w, w == 1 ? out : std::string(), "c12_" + std::to_string(i));
                             const std::string csv = plot_csv(rep), js = report_json(rep).dump(2);
                             if (w == 1) {
                                 csv0 = csv;
                                 js0 = js;
                                 os << rep.experiment << ' ';
                             } else if (csv != csv0 || js != js0) {
                                 same = false;
                                 os << "(differs at " << w << " workers) ";
                             }
                         }
                     }
                     return Outcome{same, os.str() + (same ? "identical" : "")};
                 }});
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<std::string> ids;
    bool all = false;
    std::string out;
    unsigned workers = 0;
    app.add_option("--criterion", ids, "criterion id (1..12, 9a, 9b); repeatable");
    app.add_flag("--all", all, "run every criterion");
    app.add_option("--out", out, "write each experiment's CSV and report here");
    app.add_option("--workers", workers, "worker threads, 0 = hardware concurrency");
    CLI11_PARSE(app, argc, argv);

    const auto list = criteria();
    if (all)
        for (const auto& c : list) ids.push_back(c.id);
    if (ids.empty()) {
        std::cerr << "nothing to run; pass --criterion ID or --all\n";
        return 2;
    }
    const unsigned w = resolve_workers(workers);
    int failures = 0;
    for (const auto& id : ids) {
        const auto it = std::find_if(list.begin(), list.end(), [&](const Criterion& c) { return c.id == id; });
        if (it == list.end()) {
            std::cerr << "unknown criterion " << id << '\n';
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it->body(w, out);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= it->budget_s;
        const bool pass = o.pass && in_time;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << it->id << ": " << it->title << " | " << o.detail
                  << " | " << fmt("%.1f", secs) << " s (budget " << fmt("%.0f", it->budget_s) << " s"
                  << (in_time ? "" : ", exceeded") << ")" << std::endl;
        if (!pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
