#pragma once

// Seeded path samplers: Brownian motion on Sp(n) (full and horizontal),
// on Sp(1)^n, on the sphere S^{4n-1}, and the Jacobi diffusion on the simplex.
//
// Each sampler comes in two forms. drive_* streams steps to a visitor and keeps
// no history; sample_* materializes the whole path. Both consume the same
// random numbers, so a visitor-based experiment and a materialized path with the
// same (seed, path index) see identical trajectories.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qflag/error.hpp"
#include "qflag/quat.hpp"
#include "qflag/rng.hpp"
#include "qflag/spn.hpp"

namespace qflag {

enum class SphereScheme {
    last_row,   ///< last row of an Sp(n) Brownian motion
    intrinsic,  ///< projected Gaussian step on S^{4n-1}, renormalized
};

struct SimConfig {
    std::size_t n = 2;
    double t_final = 0.0;
    double dt = 1e-3;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    SphereScheme sphere_scheme = SphereScheme::last_row;
};

inline void validate(const SimConfig& cfg) {
    if (cfg.n == 0) throw DimensionError("SimConfig: n must be positive");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidArgument("SimConfig: dt must be positive");
    if (!(cfg.t_final >= 0.0) || !std::isfinite(cfg.t_final))
        throw InvalidArgument("SimConfig: t_final must be non-negative");
    if (cfg.n_paths == 0) throw InvalidArgument("SimConfig: n_paths must be at least 1");
    if (cfg.t_final > 0.0 && cfg.dt > cfg.t_final)
        throw InvalidArgument("SimConfig: dt must not exceed t_final");
}

/// Uniform grid with steps = ceil(t_final / dt) and h = t_final / steps.
struct TimeGrid {
    std::size_t steps = 0;
    double h = 0.0;

    double time(std::size_t k) const { return static_cast<double>(k) * h; }
    std::vector<double> times() const {
        std::vector<double> t(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k) t[k] = time(k);
        return t;
    }
};

inline TimeGrid time_grid(const SimConfig& cfg) {
    validate(cfg);
    TimeGrid g;
    if (cfg.t_final == 0.0) return g;
    g.steps = static_cast<std::size_t>(std::ceil(cfg.t_final / cfg.dt * (1.0 - 1e-12)));
    if (g.steps == 0) g.steps = 1;
    g.h = cfg.t_final / static_cast<double>(g.steps);
    return g;
}

// ------------------------------------------------------------------ Sp(n)

enum class GroupNoise {
    full,        ///< all n(2n+1) directions
    horizontal,  ///< off-diagonal directions only; diagonal coefficients stay 0
};

struct GroupPath {
    std::vector<double> times;
    std::vector<SpnMatrix> states;
    std::vector<TangentCoeffs> increments;
};

/// Geodesic Euler scheme U_{k+1} = retract(U_k expm(sum_p xi_p B_p)), xi_p ~ N(0, h).
/// visit(k, t_k, U_{k-1}, U_k, xi) is called for k = 1..steps.
template <class Visitor>
void drive_group_bm(const SimConfig& cfg, const QMatrix& u0, std::uint64_t path, GroupNoise noise,
                    Visitor&& visit) {
    const TimeGrid grid = time_grid(cfg);
    const std::size_t n = cfg.n;
    if (u0.size() != n) throw DimensionError("drive_group_bm: U0 size does not match cfg.n");
    const std::size_t dim = algebra_dimension(n);
    const std::size_t active = noise == GroupNoise::full ? dim : offdiag_count(n);
    const double sd = std::sqrt(grid.h);

    NormalStream rng(cfg.seed, path, substream::group);
    SpnWorkspace ws(n);
    std::vector<double> xi(dim, 0.0);
    QMatrix x(n), e(n), prev = u0, next(n);
    for (std::size_t k = 1; k <= grid.steps; ++k) {
        rng.fill(xi.begin(), xi.begin() + static_cast<std::ptrdiff_t>(active), sd);
        from_coeffs_into(n, xi, x);
        expm_into(x, e, ws);
        multiply_into(prev, e, next);
        retract_in_place(next, ws);
        visit(k, grid.time(k), static_cast<const QMatrix&>(prev), static_cast<const QMatrix&>(next),
              std::span<const double>(xi));
        std::swap(prev, next);
    }
}

namespace detail {

inline GroupPath sample_group(const SimConfig& cfg, const SpnMatrix& u0, std::uint64_t path, GroupNoise noise) {
    const TimeGrid grid = time_grid(cfg);
    if (u0.size() != cfg.n) throw DimensionError("sampler: U0 size does not match cfg.n");
    if (!(unitarity_defect(u0.matrix()) <= kDefaultUnitaryTolerance))
        throw InvalidArgument("sampler: U0 is not unitary within tolerance");
    GroupPath out;
    out.times = grid.times();
    out.states.reserve(grid.steps + 1);
    out.increments.reserve(grid.steps);
    out.states.push_back(u0);
    drive_group_bm(cfg, u0.matrix(), path, noise,
                   [&](std::size_t, double, const QMatrix&, const QMatrix& next, std::span<const double> xi) {
                       out.states.push_back(SpnMatrix::unchecked(next));
                       out.increments.emplace_back(cfg.n, std::vector<double>(xi.begin(), xi.end()));
                   });
    return out;
}

}  // namespace detail

inline GroupPath sample_spn_bm(const SimConfig& cfg, const SpnMatrix& u0, std::uint64_t path = 0) {
    return detail::sample_group(cfg, u0, path, GroupNoise::full);
}

inline GroupPath sample_horizontal_bm(const SimConfig& cfg, const SpnMatrix& u0, std::uint64_t path = 0) {
    return detail::sample_group(cfg, u0, path, GroupNoise::horizontal);
}

/// lambda_j = |q_nj|^2, the squared moduli of the last row.
inline std::vector<double> last_row_lambda(const QMatrix& u) {
    const std::size_t n = u.size();
    std::vector<double> lam(n);
    for (std::size_t j = 0; j < n; ++j) lam[j] = norm2(u(n - 1, j));
    return lam;
}

// ------------------------------------------------------------------ Sp(1)^n

struct Sp1nPath {
    std::vector<double> times;
    std::vector<std::vector<Quaternion>> states;
};

inline void check_unit_vector(std::span<const Quaternion> b, const char* who) {
    for (const auto& q : b)
        if (!(std::abs(norm(q) - 1.0) <= kUnitTolerance))
            throw InvalidArgument(std::string(who) + ": components must be unit quaternions");
}

/// beta_{j,k+1} = beta_{j,k} exp_imag(sqrt(rate_j h) g), g standard normal in R^3.
/// With rate 1 the generator is 1/2 sum_a e_a^2. An empty `rates` means all 1.
/// visit(k, t_k, beta_{k-1}, beta_k) for k = 1..steps.
template <class Visitor>
void drive_sp1n_bm(const SimConfig& cfg, std::span<const Quaternion> b0, std::uint64_t path,
                   std::span<const double> rates, Visitor&& visit) {
    const TimeGrid grid = time_grid(cfg);
    const std::size_t n = b0.size();
    if (!rates.empty() && rates.size() != n) throw DimensionError("drive_sp1n_bm: rates length mismatch");
    std::vector<double> sd(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = rates.empty() ? 1.0 : rates[j];
        if (!(r >= 0.0)) throw InvalidArgument("drive_sp1n_bm: rates must be non-negative");
        sd[j] = std::sqrt(r * grid.h);
    }
    NormalStream rng(cfg.seed, path, substream::fiber);
    std::vector<Quaternion> prev(b0.begin(), b0.end()), next(n);
    for (std::size_t k = 1; k <= grid.steps; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            const double g1 = rng(), g2 = rng(), g3 = rng();
            next[j] = prev[j] * exp_imag(ImagQuaternion{sd[j] * g1, sd[j] * g2, sd[j] * g3});
        }
        visit(k, grid.time(k), std::span<const Quaternion>(prev), std::span<const Quaternion>(next));
        std::swap(prev, next);
    }
}

inline Sp1nPath sample_sp1n_bm(const SimConfig& cfg, std::span<const Quaternion> b0, std::uint64_t path = 0,
                               std::span<const double> rates = {}) {
    check_unit_vector(b0, "sample_sp1n_bm");
    Sp1nPath out;
    out.times = time_grid(cfg).times();
    out.states.reserve(out.times.size());
    out.states.emplace_back(b0.begin(), b0.end());
    drive_sp1n_bm(cfg, b0, path, rates,
                  [&](std::size_t, double, std::span<const Quaternion>, std::span<const Quaternion> next) {
                      out.states.emplace_back(next.begin(), next.end());
                  });
    return out;
}

// ------------------------------------------------------------------ sphere

struct SpherePath {
    std::vector<double> times;
    std::vector<std::vector<Quaternion>> states;
};

inline double vector_norm(std::span<const Quaternion> x) {
    double s = 0.0;
    for (const auto& q : x) s += norm2(q);
    return std::sqrt(s);
}

/// A symplectic matrix whose last row is x (|x| = 1), built by quaternionic
/// Gram-Schmidt on the rows with <r, s> = sum_k r_k conj(s_k).
inline SpnMatrix complete_to_symplectic(std::span<const Quaternion> x) {
    const std::size_t n = x.size();
    if (n == 0) throw DimensionError("complete_to_symplectic: empty vector");
    if (!(std::abs(vector_norm(x) - 1.0) <= 1e-10))
        throw InvalidArgument("complete_to_symplectic: vector must have unit norm");

    std::vector<std::vector<Quaternion>> rows;
    rows.emplace_back(x.begin(), x.end());
    auto orthogonalize = [&](std::vector<Quaternion>& r) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& s : rows) {
                Quaternion c{};
                for (std::size_t k = 0; k < n; ++k) c += r[k] * conj(s[k]);
                for (std::size_t k = 0; k < n; ++k) r[k] -= c * s[k];
            }
        }
    };
    while (rows.size() < n) {
        std::vector<Quaternion> best;
        double best_norm = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<Quaternion> r(n);
            r[i] = Quaternion::one();
            orthogonalize(r);
            const double nr = vector_norm(r);
            if (nr > best_norm) {
                best_norm = nr;
                best = std::move(r);
            }
        }
        for (auto& q : best) q *= 1.0 / best_norm;
        rows.push_back(std::move(best));
    }
    QMatrix m(n);
    // rows[0] is x and goes last
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) m(i - 1, k) = rows[i][k];
    for (std::size_t k = 0; k < n; ++k) m(n - 1, k) = rows[0][k];
    return SpnMatrix(std::move(m), 1e-12);
}

/// visit(k, t_k, x_k) for k = 1..steps.
template <class Visitor>
void drive_sphere_bm(const SimConfig& cfg, std::span<const Quaternion> x0, std::uint64_t path, Visitor&& visit) {
    const std::size_t n = cfg.n;
    if (x0.size() != n) throw DimensionError("drive_sphere_bm: x0 length does not match cfg.n");
    if (cfg.sphere_scheme == SphereScheme::last_row) {
        const SpnMatrix u0 = complete_to_symplectic(x0);
        std::vector<Quaternion> row(n);
        drive_group_bm(cfg, u0.matrix(), path, GroupNoise::full,
                       [&](std::size_t k, double t, const QMatrix&, const QMatrix& u, std::span<const double>) {
                           for (std::size_t j = 0; j < n; ++j) row[j] = u(n - 1, j);
                           visit(k, t, std::span<const Quaternion>(row));
                       });
        return;
    }
    const TimeGrid grid = time_grid(cfg);
    const double sd = std::sqrt(grid.h);
    NormalStream rng(cfg.seed, path, substream::sphere);
    std::vector<Quaternion> x(x0.begin(), x0.end()), g(n);
    for (std::size_t k = 1; k <= grid.steps; ++k) {
        double dot_xg = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            g[j] = Quaternion{rng(), rng(), rng(), rng()};
            dot_xg += inner(x[j], g[j]);
        }
        for (std::size_t j = 0; j < n; ++j) x[j] += (g[j] - x[j] * dot_xg) * sd;
        const double nr = vector_norm(x);
        for (auto& q : x) q *= 1.0 / nr;
        visit(k, grid.time(k), std::span<const Quaternion>(x));
    }
}

inline SpherePath sample_sphere_bm(const SimConfig& cfg, std::span<const Quaternion> x0, std::uint64_t path = 0) {
    if (!(std::abs(vector_norm(x0) - 1.0) <= 1e-10))
        throw InvalidArgument("sample_sphere_bm: x0 must have unit norm");
    SpherePath out;
    out.times = time_grid(cfg).times();
    out.states.reserve(out.times.size());
    out.states.emplace_back(x0.begin(), x0.end());
    drive_sphere_bm(cfg, x0, path, [&](std::size_t, double, std::span<const Quaternion> x) {
        out.states.emplace_back(x.begin(), x.end());
    });
    return out;
}

// ------------------------------------------------------------------ simplex

struct SimplexState {
    std::vector<double> lambda;

    SimplexState() = default;
    explicit SimplexState(std::vector<double> l) : lambda(std::move(l)) {}
    std::size_t size() const noexcept { return lambda.size(); }
    double operator[](std::size_t j) const { return lambda[j]; }
};

inline void check_simplex(std::span<const double> lam, bool interior, const char* who) {
    double s = 0.0;
    for (double v : lam) {
        if (!std::isfinite(v) || v < 0.0 || (interior && v == 0.0))
            throw InvalidArgument(std::string(who) + (interior ? ": point must lie in the open simplex"
                                                               : ": point must lie in the simplex"));
        s += v;
    }
    if (!(std::abs(s - 1.0) <= 1e-12)) throw InvalidArgument(std::string(who) + ": coordinates must sum to 1");
}

struct SimplexPath {
    std::vector<double> times;
    std::vector<SimplexState> states;
    std::size_t truncations = 0;
};

/// Euler-Maruyama for
///   d lambda_j = 2 sum_{l != j} sqrt(lambda_l lambda_j) d gamma_{lj} + 2 (2 - 2 n lambda_j) dt,
/// gamma antisymmetric with independent standard entries above the diagonal.
/// Negative coordinates are clamped to 0 and the point renormalized; each
/// clamped coordinate counts as one truncation. visit(k, t_k, lambda_k).
/// Returns the number of truncations.
template <class Visitor>
std::size_t drive_jacobi_simplex(const SimConfig& cfg, std::span<const double> lam0, std::uint64_t path,
                                 Visitor&& visit) {
    const TimeGrid grid = time_grid(cfg);
    const std::size_t n = lam0.size();
    const double sd = std::sqrt(grid.h);
    const double nd = static_cast<double>(n);
    NormalStream rng(cfg.seed, path, substream::simplex);
    std::vector<double> lam(lam0.begin(), lam0.end()), next(n), root(n);
    std::size_t truncations = 0;
    for (std::size_t k = 1; k <= grid.steps; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            root[j] = std::sqrt(lam[j]);
            next[j] = lam[j] + 2.0 * (2.0 - 2.0 * nd * lam[j]) * grid.h;
        }
        for (std::size_t l = 0; l < n; ++l) {
            for (std::size_t j = l + 1; j < n; ++j) {
                // gamma_{lj} drives lambda_j, gamma_{jl} = -gamma_{lj} drives lambda_l
                const double dg = 2.0 * root[l] * root[j] * sd * rng();
                next[j] += dg;
                next[l] -= dg;
            }
        }
        double s = 0.0;
        for (auto& v : next) {
            if (v < 0.0) {
                v = 0.0;
                ++truncations;
            }
            s += v;
        }
        for (auto& v : next) v /= s;
        std::swap(lam, next);
        visit(k, grid.time(k), std::span<const double>(lam));
    }
    return truncations;
}

inline SimplexPath sample_jacobi_simplex(const SimConfig& cfg, const SimplexState& lam0, std::uint64_t path = 0) {
    if (lam0.size() != cfg.n) throw DimensionError("sample_jacobi_simplex: lambda length does not match cfg.n");
    check_simplex(lam0.lambda, true, "sample_jacobi_simplex");
    SimplexPath out;
    out.times = time_grid(cfg).times();
    out.states.reserve(out.times.size());
    out.states.push_back(lam0);
    out.truncations = drive_jacobi_simplex(cfg, lam0.lambda, path, [&](std::size_t, double, std::span<const double> l) {
        out.states.emplace_back(std::vector<double>(l.begin(), l.end()));
    });
    return out;
}

/// Drift of the simplex SDE, 2(2 - 2 n lambda_j).
inline std::vector<double> jacobi_simplex_drift(std::span<const double> lam) {
    const double nd = static_cast<double>(lam.size());
    std::vector<double> d(lam.size());
    for (std::size_t j = 0; j < lam.size(); ++j) d[j] = 2.0 * (2.0 - 2.0 * nd * lam[j]);
    return d;
}

}  // namespace qflag
