#pragma once

// Brownian motion on S^{4n-1} with the canonical variation metric g_mu, built
// as a skew product over the flag Brownian motion, and the quaternionic
// winding processes eta_j = int (o dXi_j) Xi_j^{-1} of its polar parts.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qflag/error.hpp"
#include "qflag/flag.hpp"
#include "qflag/parallel.hpp"
#include "qflag/quat.hpp"
#include "qflag/rng.hpp"
#include "qflag/sde.hpp"
#include "qflag/spectral.hpp"
#include "qflag/stats.hpp"

namespace qflag {

/// Vertical weights mu_j > 0.
class CanonicalVariation {
public:
    CanonicalVariation() = default;
    explicit CanonicalVariation(std::vector<double> mu) : mu_(std::move(mu)) {
        if (mu_.empty()) throw DimensionError("CanonicalVariation: need at least one weight");
        for (double m : mu_)
            if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("CanonicalVariation: weights must be positive");
    }
    static CanonicalVariation round(std::size_t n) { return CanonicalVariation(std::vector<double>(n, 1.0)); }

    std::size_t size() const noexcept { return mu_.size(); }
    double operator[](std::size_t j) const { return mu_[j]; }
    std::span<const double> weights() const noexcept { return mu_; }

private:
    std::vector<double> mu_;
};

/// Polar form x_j = rho_j Xi_j plus the accumulated winding.
struct WindingState {
    std::vector<Quaternion> xi;
    std::vector<double> rho;
    AreaVector eta;
};

/// Polar decomposition; components below `floor` raise DomainExitError.
inline WindingState polar(std::span<const Quaternion> x, double floor = kDomainFloor) {
    WindingState s;
    s.xi.resize(x.size());
    s.rho.resize(x.size());
    s.eta = AreaVector(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double r = norm(x[j]);
        if (!(r > floor)) throw DomainExitError(j, r);
        s.rho[j] = r;
        s.xi[j] = x[j] * (1.0 / r);
    }
    return s;
}

/// eta_j += log(Xi_j(next) Xi_j(prev)^{-1}).
inline void winding_step(std::span<const Quaternion> xi_prev, std::span<const Quaternion> xi_next, AreaVector& eta) {
    for (std::size_t j = 0; j < xi_prev.size(); ++j) eta.add(j, log_unit(xi_next[j] * conj(xi_prev[j])));
}

/// Winding accumulated along a path of angular parts.
inline AreaVector accumulate_winding(std::span<const std::vector<Quaternion>> xi_path) {
    if (xi_path.empty()) throw InvalidArgument("accumulate_winding: empty path");
    const std::size_t n = xi_path.front().size();
    AreaVector eta(n);
    for (std::size_t k = 1; k < xi_path.size(); ++k) {
        if (xi_path[k].size() != n) throw DimensionError("accumulate_winding: inconsistent component count");
        try {
            winding_step(xi_path[k - 1], xi_path[k], eta);
        } catch (const BranchError& e) {
            throw NumericalError(std::string("accumulate_winding: step too large (") + e.what() + ")", k);
        }
    }
    return eta;
}

/// Sphere path in polar form: angular parts of every component.
inline AreaVector accumulate_winding(const SpherePath& path, double floor = kDomainFloor) {
    std::vector<std::vector<Quaternion>> xi;
    xi.reserve(path.states.size());
    for (const auto& x : path.states) xi.push_back(polar(x, floor).xi);
    return accumulate_winding(xi);
}

/// Skew-product Brownian motion on S^{4n-1}_mu:
///   X_j(t) = Theta_j(t) beta_j(mu_j^2 t) / sqrt(1 + |w_j(t)|^2),
/// with (w, Theta) from a horizontal path started at a symplectic completion of
/// x0 and beta an independent unit-rate Sp(1)^n Brownian motion.
/// visit(k, t_k, x_k, xi_prev, xi_k, lambda_k).
template <class Visitor>
void drive_variation_bm(const SimConfig& cfg, const CanonicalVariation& mu, std::span<const Quaternion> x0,
                        std::uint64_t path, Visitor&& visit) {
    const std::size_t n = cfg.n;
    if (x0.size() != n || mu.size() != n) throw DimensionError("sample_variation_bm: sizes do not match cfg.n");
    const SpnMatrix u0 = complete_to_symplectic(x0);
    FlagState w_prev = project_affine(u0), w_next(n);
    FiberState theta = theta_of(u0);
    AreaVector da(n);

    const TimeGrid grid = time_grid(cfg);
    NormalStream fiber_rng(cfg.seed, path, substream::fiber);
    std::vector<double> sd(n);
    for (std::size_t j = 0; j < n; ++j) sd[j] = mu[j] * std::sqrt(grid.h);
    std::vector<Quaternion> beta(n, Quaternion::one()), xi_prev = theta.theta, xi(n), x(n);
    std::vector<double> lam(n);

    drive_group_bm(cfg, u0.matrix(), path, GroupNoise::horizontal,
                   [&](std::size_t k, double t, const QMatrix&, const QMatrix& u, std::span<const double>) {
                       project_affine_into(u, w_next);
                       area_increment_into(w_prev, w_next, da);
                       if (!da.all_finite()) throw NumericalError("sample_variation_bm: non-finite area increment", k);
                       theta_step(theta, da);
                       for (std::size_t j = 0; j < n; ++j) {
                           const double g1 = fiber_rng(), g2 = fiber_rng(), g3 = fiber_rng();
                           beta[j] = beta[j] * exp_imag(ImagQuaternion{sd[j] * g1, sd[j] * g2, sd[j] * g3});
                           xi[j] = theta.theta[j] * beta[j];
                           lam[j] = w_next.lambda[j];
                           x[j] = xi[j] * std::sqrt(lam[j]);
                       }
                       visit(k, t, std::span<const Quaternion>(x), std::span<const Quaternion>(xi_prev),
                             std::span<const Quaternion>(xi), std::span<const double>(lam));
                       std::swap(w_prev, w_next);
                       std::swap(xi_prev, xi);
                   });
}

inline SpherePath sample_variation_bm(const SimConfig& cfg, const CanonicalVariation& mu,
                                      std::span<const Quaternion> x0, std::uint64_t path = 0) {
    if (!(std::abs(vector_norm(x0) - 1.0) <= 1e-10))
        throw InvalidArgument("sample_variation_bm: x0 must have unit norm");
    for (std::size_t j = 0; j < x0.size(); ++j)
        if (!(norm(x0[j]) > kDomainFloor)) throw DomainExitError(j, norm(x0[j]));
    SpherePath out;
    out.times = time_grid(cfg).times();
    out.states.reserve(out.times.size());
    out.states.emplace_back(x0.begin(), x0.end());
    drive_variation_bm(cfg, mu, x0, path,
                       [&](std::size_t, double, std::span<const Quaternion> x, std::span<const Quaternion>,
                           std::span<const Quaternion>, std::span<const double>) {
                           out.states.emplace_back(x.begin(), x.end());
                       });
    return out;
}

/// Winding eta_mu(t) of one skew-product path, without storing it.
inline AreaVector variation_winding(const SimConfig& cfg, const CanonicalVariation& mu, std::span<const Quaternion> x0,
                                    std::uint64_t path) {
    AreaVector eta(cfg.n);
    drive_variation_bm(cfg, mu, x0, path,
                       [&](std::size_t k, double, std::span<const Quaternion>, std::span<const Quaternion> xp,
                           std::span<const Quaternion> xn, std::span<const double>) {
                           try {
                               winding_step(xp, xn, eta);
                           } catch (const BranchError& e) {
                               throw NumericalError(std::string("winding: step too large (") + e.what() + ")", k);
                           }
                       });
    return eta;
}

// ------------------------------------------------------------------ CLT experiment

inline constexpr double kWindingMinTime = 20.0;
inline constexpr std::size_t kWindingMinPaths = 10000;

struct WindingReport {
    McEstimate empirical;  ///< Cov(eta_mu(t) / sqrt(t)), 3n x 3n
    WindingCandidates candidates;
    std::vector<CheckRow> rows_linear;
    std::vector<CheckRow> rows_quadratic;
    std::vector<CheckRow> rows_offdiag;  ///< off-diagonal blocks vs Sigma only
    double max_z_linear = 0.0;
    double max_z_quadratic = 0.0;
    std::size_t excluded = 0;
    bool underpowered = false;
    std::string verdict;  ///< "linear", "quadratic" or "undecided"
};

/// x0 with equal moduli, x0_j = 1/sqrt(n).
inline std::vector<Quaternion> balanced_start(std::size_t n) {
    return std::vector<Quaternion>(n, Quaternion{1.0 / std::sqrt(static_cast<double>(n)), 0.0, 0.0, 0.0});
}

/// Paths that leave the affine chart are excluded and counted.
inline WindingReport winding_clt_experiment(const SimConfig& cfg, const CanonicalVariation& mu, unsigned workers = 1,
                                            double z_threshold = kDefaultZThreshold, double bias_budget = 0.0) {
    validate(cfg);
    if (mu.size() != cfg.n) throw DimensionError("winding_clt_experiment: need one weight per component");
    WindingReport rep;
    rep.underpowered = cfg.t_final < kWindingMinTime || cfg.n_paths < kWindingMinPaths;
    const std::vector<Quaternion> x0 = balanced_start(cfg.n);
    const double scale = 1.0 / std::sqrt(cfg.t_final);

    struct Sample {
        std::vector<double> v;
        bool ok = false;
    };
    const auto samples = parallel_map(cfg.n_paths, workers, [&](std::size_t p) {
        Sample s;
        try {
            const AreaVector eta = variation_winding(cfg, mu, x0, p);
            s.v = eta.a;
            for (double& v : s.v) v *= scale;
            s.ok = true;
        } catch (const DomainExitError&) {
        }
        return s;
    });
    std::vector<std::vector<double>> kept;
    kept.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.ok)
            kept.push_back(s.v);
        else
            ++rep.excluded;
    }
    rep.empirical = cov_estimate(kept);
    rep.empirical.excluded = rep.excluded;
    rep.candidates = winding_covariance(cfg.n, mu.weights());
    rep.rows_linear = compare_matrix("winding_cov_linear", rep.empirical, rep.candidates.linear, z_threshold, bias_budget);
    rep.rows_quadratic =
        compare_matrix("winding_cov_quadratic", rep.empirical, rep.candidates.quadratic, z_threshold, bias_budget);
    const RealMatrix sigma = limit_covariance(cfg.n);
    for (const auto& r : compare_matrix("winding_cov_offdiag", rep.empirical, sigma, z_threshold, bias_budget)) {
        const auto comma = r.index.find(',');
        const std::size_t i = std::stoul(r.index.substr(0, comma)), j = std::stoul(r.index.substr(comma + 1));
        if (i / 3 != j / 3) rep.rows_offdiag.push_back(r);
    }
    rep.max_z_linear = max_abs_z(rep.rows_linear);
    rep.max_z_quadratic = max_abs_z(rep.rows_quadratic);
    const bool lin = all_pass(rep.rows_linear), quad = all_pass(rep.rows_quadratic);
    if (lin && !quad && rep.max_z_quadratic > 5.0)
        rep.verdict = "linear";
    else if (quad && !lin && rep.max_z_linear > 5.0)
        rep.verdict = "quadratic";
    else
        rep.verdict = "undecided";
    return rep;
}

}  // namespace qflag
