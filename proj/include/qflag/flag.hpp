#pragma once

// The quaternionic full flag manifold Sp(n) / Sp(1)^n in affine coordinates
//
//   w_ij = q_ij q_nj^{-1}   (i < n),      lambda_j = 1 / (1 + |w_j|^2) = |q_nj|^2,
//
// the connection form eta, the area form, the fiber process Theta and the
// trivialization Psi(Theta, w).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qflag/error.hpp"
#include "qflag/quat.hpp"
#include "qflag/sde.hpp"
#include "qflag/spn.hpp"

namespace qflag {

inline constexpr double kDomainFloor = 1e-6;

struct FlagState {
    std::size_t n = 0;
    std::vector<Quaternion> w;    ///< column major, w[j * (n - 1) + i] = w_ij
    std::vector<double> lambda;

    FlagState() = default;
    explicit FlagState(std::size_t n_) : n(n_), w(n_ * (n_ - 1)), lambda(n_) {}

    Quaternion& operator()(std::size_t i, std::size_t j) { return w[j * (n - 1) + i]; }
    const Quaternion& operator()(std::size_t i, std::size_t j) const { return w[j * (n - 1) + i]; }
    std::span<const Quaternion> column(std::size_t j) const { return {w.data() + j * (n - 1), n - 1}; }
};

/// |w_j|^2 = sum_i |w_ij|^2.
inline double column_norm2(const FlagState& f, std::size_t j) {
    double s = 0.0;
    for (const auto& q : f.column(j)) s += norm2(q);
    return s;
}

/// Affine coordinates of U, into a preallocated state.
inline void project_affine_into(const QMatrix& u, FlagState& out, double floor = kDomainFloor) {
    const std::size_t n = u.size();
    if (out.n != n) out = FlagState(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Quaternion& qn = u(n - 1, j);
        const double m2 = norm2(qn);
        if (!(m2 > floor * floor)) throw DomainExitError(j, std::sqrt(m2));
        const Quaternion inv = conj(qn) * (1.0 / m2);
        for (std::size_t i = 0; i + 1 < n; ++i) out(i, j) = u(i, j) * inv;
        out.lambda[j] = 1.0 / (1.0 + column_norm2(out, j));
    }
}

inline FlagState project_affine(const QMatrix& u, double floor = kDomainFloor) {
    FlagState f(u.size());
    project_affine_into(u, f, floor);
    return f;
}

inline FlagState project_affine(const SpnMatrix& u, double floor = kDomainFloor) {
    return project_affine(u.matrix(), floor);
}

/// Largest violations of lambda_j = 1/(1+|w_j|^2) and of w_i* w_j = -1 (i < j).
struct FlagDefects {
    double consistency = 0.0;
    double orthogonality = 0.0;
};

inline FlagDefects flag_defects(const FlagState& f) {
    FlagDefects d;
    const std::size_t n = f.n;
    for (std::size_t j = 0; j < n; ++j)
        d.consistency = std::max(d.consistency, std::abs(f.lambda[j] - 1.0 / (1.0 + column_norm2(f, j))));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Quaternion s{};
            for (std::size_t k = 0; k + 1 < n; ++k) s += conj(f(k, i)) * f(k, j);
            s.t += 1.0;
            d.orthogonality = std::max(d.orthogonality, norm(s));
        }
    }
    return d;
}

// ------------------------------------------------------------------ areas

/// n x 3 real array: a[3 j + (a - 1)] is the coefficient of e_a in the j-th entry.
struct AreaVector {
    std::size_t n = 0;
    std::vector<double> a;

    AreaVector() = default;
    explicit AreaVector(std::size_t n_) : n(n_), a(3 * n_, 0.0) {}

    ImagQuaternion operator[](std::size_t j) const { return {a[3 * j], a[3 * j + 1], a[3 * j + 2]}; }
    void set(std::size_t j, const ImagQuaternion& v) {
        a[3 * j] = v.x;
        a[3 * j + 1] = v.y;
        a[3 * j + 2] = v.z;
    }
    void add(std::size_t j, const ImagQuaternion& v) {
        a[3 * j] += v.x;
        a[3 * j + 1] += v.y;
        a[3 * j + 2] += v.z;
    }
    AreaVector& operator+=(const AreaVector& o) {
        for (std::size_t p = 0; p < a.size(); ++p) a[p] += o.a[p];
        return *this;
    }
    bool all_finite() const {
        for (double v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }
    void clear() { std::fill(a.begin(), a.end(), 0.0); }
};

/// Midpoint increment of the area form between two flag states, written into
/// `out` (overwritten). With a = w(start), b = w(end) and w_mid = (a + b)/2,
///   1/2 sum_k [conj(w_mid) dw - conj(dw) w_mid] = sum_k Im(conj(a_k) b_k),
/// divided by 1 + |w_mid|^2.
inline void area_increment_into(const FlagState& s0, const FlagState& s1, AreaVector& out) {
    const std::size_t n = s0.n;
    if (out.n != n) out = AreaVector(n);
    for (std::size_t j = 0; j < n; ++j) {
        ImagQuaternion num{};
        double mid2 = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const Quaternion& a = s0(k, j);
            const Quaternion& b = s1(k, j);
            num += (conj(a) * b).imag();
            mid2 += norm2((a + b) * 0.5);
        }
        out.set(j, num * (1.0 / (1.0 + mid2)));
    }
}

inline AreaVector area_increment(const FlagState& s0, const FlagState& s1) {
    AreaVector out(s0.n);
    area_increment_into(s0, s1, out);
    return out;
}

/// Stratonovich sum of area increments along a path of flag states.
inline AreaVector integrate_area(std::span<const FlagState> path) {
    if (path.size() < 2) throw InvalidArgument("integrate_area: path needs at least two samples");
    const std::size_t n = path.front().n;
    AreaVector total(n), inc(n);
    for (std::size_t k = 1; k < path.size(); ++k) {
        area_increment_into(path[k - 1], path[k], inc);
        if (!inc.all_finite()) throw NumericalError("integrate_area: non-finite increment", k);
        total += inc;
    }
    return total;
}

/// Midpoint increment of eta_j = 1/2 sum_k (conj(q_kj) dq_kj - conj(dq_kj) q_kj)
/// between U and U_next; reduces to Im((U* U_next)_jj).
inline void eta_increment_into(const QMatrix& u, const QMatrix& u_next, AreaVector& out) {
    const std::size_t n = u.size();
    if (u_next.size() != n) throw DimensionError("eval_eta_increment: size mismatch");
    if (out.n != n) out = AreaVector(n);
    for (std::size_t j = 0; j < n; ++j) {
        Quaternion s{};
        for (std::size_t k = 0; k < n; ++k) s += conj(u(k, j)) * u_next(k, j);
        out.set(j, s.imag());
    }
}

inline std::vector<ImagQuaternion> eval_eta_increment(const SpnMatrix& u, const SpnMatrix& u_next) {
    AreaVector a(u.size());
    eta_increment_into(u.matrix(), u_next.matrix(), a);
    std::vector<ImagQuaternion> out(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) out[j] = a[j];
    return out;
}

/// Sum of eta increments along a group path.
inline AreaVector integrate_eta(std::span<const SpnMatrix> path) {
    if (path.empty()) throw InvalidArgument("integrate_eta: empty path");
    const std::size_t n = path.front().size();
    AreaVector total(n), inc(n);
    for (std::size_t k = 1; k < path.size(); ++k) {
        eta_increment_into(path[k - 1].matrix(), path[k].matrix(), inc);
        total += inc;
    }
    return total;
}

// ------------------------------------------------------------------ fiber

struct FiberState {
    std::vector<Quaternion> theta;

    FiberState() = default;
    explicit FiberState(std::size_t n) : theta(n, Quaternion::one()) {}
    explicit FiberState(std::vector<Quaternion> t) : theta(std::move(t)) {}
    std::size_t size() const noexcept { return theta.size(); }
};

/// Theta_j = q_nj / |q_nj|.
inline FiberState theta_of(const QMatrix& u, double floor = kDomainFloor) {
    const std::size_t n = u.size();
    FiberState f(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double m = norm(u(n - 1, j));
        if (!(m > floor)) throw DomainExitError(j, m);
        f.theta[j] = u(n - 1, j) * (1.0 / m);
    }
    return f;
}

inline FiberState theta_of(const SpnMatrix& u, double floor = kDomainFloor) { return theta_of(u.matrix(), floor); }

/// Theta_j <- exp_imag(-d a_j) Theta_j.
inline void theta_step(FiberState& theta, const AreaVector& da) {
    for (std::size_t j = 0; j < theta.size(); ++j) theta.theta[j] = exp_imag(-da[j]) * theta.theta[j];
}

inline std::vector<FiberState> evolve_theta(std::span<const AreaVector> increments, const FiberState& theta0) {
    check_unit_vector(theta0.theta, "evolve_theta");
    std::vector<FiberState> out;
    out.reserve(increments.size() + 1);
    out.push_back(theta0);
    FiberState cur = theta0;
    for (const auto& da : increments) {
        if (da.n != cur.size()) throw DimensionError("evolve_theta: increment size mismatch");
        theta_step(cur, da);
        out.push_back(cur);
    }
    return out;
}

/// Psi(Theta, w) without validation, into `out`.
inline void assemble_into(std::span<const Quaternion> theta, const FlagState& f, QMatrix& out) {
    const std::size_t n = f.n;
    for (std::size_t j = 0; j < n; ++j) {
        const double s = 1.0 / std::sqrt(1.0 + column_norm2(f, j));
        const Quaternion th = theta[j] * s;
        for (std::size_t i = 0; i + 1 < n; ++i) out(i, j) = f(i, j) * th;
        out(n - 1, j) = th;
    }
}

inline constexpr double kOrthogonalityTolerance = 1e-8;

inline SpnMatrix assemble(const FiberState& theta, const FlagState& f) {
    if (theta.size() != f.n) throw DimensionError("assemble: fiber and flag sizes differ");
    check_unit_vector(theta.theta, "assemble");
    const FlagDefects d = flag_defects(f);
    if (!(d.consistency <= 1e-10) || !(d.orthogonality <= kOrthogonalityTolerance))
        throw InvalidArgument("assemble: flag state violates the orthogonality relations (defect " +
                              std::to_string(std::max(d.consistency, d.orthogonality)) + ")");
    QMatrix m(f.n);
    assemble_into(theta.theta, f, m);
    return SpnMatrix(std::move(m), kOrthogonalityTolerance);
}

/// Area increment expressed through the group path: with Theta = theta_of(U)
/// on both ends and d = log(Theta_1 Theta_0^{-1}),
///   da_j = Theta_mid d eta_j Theta_mid^{-1} - d,   Theta_mid = exp(d/2) Theta_0.
/// Agrees with area_increment on the projected path to second order.
inline void gauge_area_increment_into(const QMatrix& u0, const QMatrix& u1, AreaVector& out) {
    const std::size_t n = u0.size();
    AreaVector eta(n);
    eta_increment_into(u0, u1, eta);
    const FiberState t0 = theta_of(u0), t1 = theta_of(u1);
    if (out.n != n) out = AreaVector(n);
    for (std::size_t j = 0; j < n; ++j) {
        const ImagQuaternion d = log_unit(t1.theta[j] * conj(t0.theta[j]));
        const Quaternion mid = exp_imag(0.5 * d) * t0.theta[j];
        const ImagQuaternion rot = (mid * eta[j].quaternion() * conj(mid)).imag();
        out.set(j, rot - d);
    }
}

// ------------------------------------------------------------------ skew product

/// Rate of the fiber Brownian motion beta in the skew product: the diagonal
/// generators sqrt(2) E_jj e_a move each Sp(1) factor at twice the unit rate.
inline constexpr double kFiberRate = 2.0;

/// Skew-product construction of an Sp(n) Brownian motion: a horizontal path
/// supplies w(t), areas drive Theta, an independent beta with generator
/// 1/2 sum (H^(a)_j)^2 supplies the vertical part, U = Psi(Theta beta, w).
/// visit(k, t_k, U_{k-1}, U_k, w_k, area_increment_k).
template <class Visitor>
void drive_skew_product(const SimConfig& cfg, const QMatrix& u0, std::uint64_t path, Visitor&& visit) {
    const std::size_t n = cfg.n;
    if (u0.size() != n) throw DimensionError("skew_product_bm: U0 size does not match cfg.n");
    FlagState w_prev = project_affine(u0), w_next(n);
    FiberState theta = theta_of(u0);
    std::vector<Quaternion> fiber(n);
    QMatrix u_prev = u0, u_next(n);
    AreaVector da(n);

    std::vector<Quaternion> beta_now(n, Quaternion::one());
    // beta runs on its own substream, step-locked with the horizontal path
    const TimeGrid grid = time_grid(cfg);
    NormalStream fiber_rng(cfg.seed, path, substream::fiber);
    const double sd = std::sqrt(kFiberRate * grid.h);

    drive_group_bm(cfg, u0, path, GroupNoise::horizontal,
                   [&](std::size_t k, double t, const QMatrix&, const QMatrix& x, std::span<const double>) {
                       project_affine_into(x, w_next);
                       area_increment_into(w_prev, w_next, da);
                       if (!da.all_finite()) throw NumericalError("skew_product_bm: non-finite area increment", k);
                       theta_step(theta, da);
                       for (std::size_t j = 0; j < n; ++j) {
                           const double g1 = fiber_rng(), g2 = fiber_rng(), g3 = fiber_rng();
                           beta_now[j] = beta_now[j] * exp_imag(ImagQuaternion{sd * g1, sd * g2, sd * g3});
                           fiber[j] = theta.theta[j] * beta_now[j];
                       }
                       assemble_into(fiber, w_next, u_next);
                       visit(k, t, static_cast<const QMatrix&>(u_prev), static_cast<const QMatrix&>(u_next),
                             static_cast<const FlagState&>(w_next), static_cast<const AreaVector&>(da));
                       std::swap(u_prev, u_next);
                       std::swap(w_prev, w_next);
                   });
}

/// Materialized skew-product path; `increments` is left empty because the
/// driving noise is split between the horizontal and fiber streams.
inline GroupPath skew_product_bm(const SimConfig& cfg, const SpnMatrix& u0, std::uint64_t path = 0) {
    GroupPath out;
    out.times = time_grid(cfg).times();
    out.states.reserve(out.times.size());
    out.states.push_back(u0);
    drive_skew_product(cfg, u0.matrix(), path,
                       [&](std::size_t, double, const QMatrix&, const QMatrix& u, const FlagState&, const AreaVector&) {
                           out.states.push_back(SpnMatrix::unchecked(u));
                       });
    return out;
}

}  // namespace qflag
