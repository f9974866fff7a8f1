#pragma once

// The compact symplectic group Sp(n) = { U in H^{n x n} : U*U = I } and its Lie
// algebra sp(n) of skew-adjoint quaternion matrices.
//
// Metric: <X, Y> = 1/2 Re Tr(X* Y). The orthonormal basis used throughout is
//
//   X^(a)_jk = E_jk e_a - E_kj conj(e_a)   (j < k, a = 0..3)
//   H^(a)_j  = sqrt(2) E_jj e_a            (a = 1..3)
//
// in this fixed order: off-diagonal generators with (j, k) lexicographic and a
// innermost, then diagonal generators with j outer and a inner. TangentCoeffs
// indexes real coefficients in exactly that order.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qflag/error.hpp"
#include "qflag/quat.hpp"

namespace qflag {

/// Dense n x n quaternion matrix, row major.
class QMatrix {
public:
    QMatrix() = default;
    explicit QMatrix(std::size_t n) : n_(n), a_(n * n) {}

    static QMatrix identity(std::size_t n) {
        QMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Quaternion::one();
        return m;
    }

    std::size_t size() const noexcept { return n_; }
    Quaternion& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const Quaternion& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    std::span<Quaternion> entries() noexcept { return a_; }
    std::span<const Quaternion> entries() const noexcept { return a_; }

    QMatrix& operator+=(const QMatrix& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }
    QMatrix& operator-=(const QMatrix& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
        return *this;
    }
    QMatrix& operator*=(double s) {
        for (auto& q : a_) q *= s;
        return *this;
    }

    bool all_finite() const {
        for (const auto& q : a_) {
            if (!std::isfinite(q.t) || !std::isfinite(q.x) || !std::isfinite(q.y) ||
                !std::isfinite(q.z))
                return false;
        }
        return true;
    }

    friend bool operator==(const QMatrix&, const QMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<Quaternion> a_;
};

inline QMatrix operator+(QMatrix a, const QMatrix& b) { return a += b; }
inline QMatrix operator-(QMatrix a, const QMatrix& b) { return a -= b; }
inline QMatrix operator*(double s, QMatrix a) { return a *= s; }

namespace detail {

template <bool AdjointLeft>
inline void multiply_kernel(std::size_t n, const Quaternion* a, const Quaternion* b, Quaternion* c) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Quaternion acc{};
            for (std::size_t k = 0; k < n; ++k) {
                if constexpr (AdjointLeft)
                    acc += conj(a[k * n + i]) * b[k * n + j];
                else
                    acc += a[i * n + k] * b[k * n + j];
            }
            c[i * n + j] = acc;
        }
    }
}

// Small sizes get a compile-time trip count so the loops unroll.
template <bool AdjointLeft>
inline void multiply_dispatch(std::size_t n, const Quaternion* a, const Quaternion* b, Quaternion* c) {
    switch (n) {
        case 2: return multiply_kernel<AdjointLeft>(2, a, b, c);
        case 3: return multiply_kernel<AdjointLeft>(3, a, b, c);
        case 4: return multiply_kernel<AdjointLeft>(4, a, b, c);
        default: return multiply_kernel<AdjointLeft>(n, a, b, c);
    }
}

}  // namespace detail

/// out = a * b. out must not alias a or b.
inline void multiply_into(const QMatrix& a, const QMatrix& b, QMatrix& out) {
    detail::multiply_dispatch<false>(a.size(), a.entries().data(), b.entries().data(),
                                     out.entries().data());
}

/// out = a* b. out must not alias a or b.
inline void adjoint_multiply_into(const QMatrix& a, const QMatrix& b, QMatrix& out) {
    detail::multiply_dispatch<true>(a.size(), a.entries().data(), b.entries().data(),
                                    out.entries().data());
}

inline QMatrix operator*(const QMatrix& a, const QMatrix& b) {
    if (a.size() != b.size()) throw DimensionError("QMatrix product: size mismatch");
    QMatrix out(a.size());
    multiply_into(a, b, out);
    return out;
}

inline QMatrix adjoint(const QMatrix& a) {
    const std::size_t n = a.size();
    QMatrix out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = conj(a(j, i));
    return out;
}

inline double frobenius_norm(const QMatrix& a) {
    double s = 0.0;
    for (const auto& q : a.entries()) s += norm2(q);
    return std::sqrt(s);
}

/// ||U*U - I||_F, reusing `scratch` for U*U.
inline double unitarity_defect(const QMatrix& u, QMatrix& scratch) {
    adjoint_multiply_into(u, u, scratch);
    double s = 0.0;
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Quaternion d = scratch(i, j);
            if (i == j) d.t -= 1.0;
            s += norm2(d);
        }
    }
    return std::sqrt(s);
}

inline double unitarity_defect(const QMatrix& u) {
    QMatrix scratch(u.size());
    return unitarity_defect(u, scratch);
}

inline constexpr double kDefaultUnitaryTolerance = 1e-10;
inline constexpr double kRetractTarget = 1e-13;
inline constexpr double kRetractMaxDefect = 0.5;

/// Element of Sp(n); the constructor certifies ||U*U - I||_F <= tolerance.
class SpnMatrix {
public:
    SpnMatrix() = default;
    explicit SpnMatrix(QMatrix m, double tolerance = kDefaultUnitaryTolerance) : m_(std::move(m)) {
        if (!m_.all_finite()) throw NumericalError("SpnMatrix: non-finite entries");
        const double d = unitarity_defect(m_);
        if (!(d <= tolerance)) {
            throw InvalidArgument("SpnMatrix: unitarity defect " + std::to_string(d) +
                                  " exceeds tolerance");
        }
    }

    static SpnMatrix identity(std::size_t n) { return SpnMatrix(QMatrix::identity(n), 0.0); }

    /// Wraps without checking; for hot loops that retract every step.
    static SpnMatrix unchecked(QMatrix m) {
        SpnMatrix u;
        u.m_ = std::move(m);
        return u;
    }

    std::size_t size() const noexcept { return m_.size(); }
    const QMatrix& matrix() const noexcept { return m_; }
    const Quaternion& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

    friend bool operator==(const SpnMatrix&, const SpnMatrix&) = default;

private:
    QMatrix m_;
};

/// Element of sp(n); skew-adjoint by construction.
class SpnAlgebraElement {
public:
    SpnAlgebraElement() = default;
    explicit SpnAlgebraElement(std::size_t n) : m_(n) {}

    /// Validates X* = -X exactly.
    static SpnAlgebraElement from_matrix(QMatrix m) {
        const std::size_t n = m.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (!(m(i, j) == -conj(m(j, i))))
                    throw InvalidArgument("SpnAlgebraElement: matrix is not skew-adjoint");
        SpnAlgebraElement x;
        x.m_ = std::move(m);
        return x;
    }

    std::size_t size() const noexcept { return m_.size(); }
    const QMatrix& matrix() const noexcept { return m_; }
    const Quaternion& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

    SpnAlgebraElement operator-() const {
        SpnAlgebraElement r = *this;
        r.m_ *= -1.0;
        return r;
    }
    SpnAlgebraElement& operator*=(double s) {
        m_ *= s;
        return *this;
    }
    friend SpnAlgebraElement operator*(double s, SpnAlgebraElement x) { return x *= s; }

private:
    friend SpnAlgebraElement from_coeffs_unchecked(std::size_t, std::span<const double>);
    QMatrix m_;
};

inline std::size_t algebra_dimension(std::size_t n) { return n * (2 * n + 1); }
inline std::size_t offdiag_count(std::size_t n) { return 4 * (n * (n - 1) / 2); }

/// Index of the pair (j, k), j < k, in lexicographic order.
inline std::size_t pair_index(std::size_t n, std::size_t j, std::size_t k) {
    return j * (2 * n - j - 1) / 2 + (k - j - 1);
}

/// Real coordinates of an sp(n) element over the orthonormal basis.
class TangentCoeffs {
public:
    TangentCoeffs() = default;
    explicit TangentCoeffs(std::size_t n) : n_(n), c_(algebra_dimension(n), 0.0) {}
    TangentCoeffs(std::size_t n, std::vector<double> values) : n_(n), c_(std::move(values)) {
        if (c_.size() != algebra_dimension(n))
            throw DimensionError("TangentCoeffs: expected " + std::to_string(algebra_dimension(n)) +
                                 " coefficients, got " + std::to_string(c_.size()));
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return c_.size(); }
    std::span<double> values() noexcept { return c_; }
    std::span<const double> values() const noexcept { return c_; }
    double& operator[](std::size_t p) { return c_[p]; }
    double operator[](std::size_t p) const { return c_[p]; }

    static std::size_t offdiag_index(std::size_t n, std::size_t j, std::size_t k, int a) {
        return 4 * pair_index(n, j, k) + static_cast<std::size_t>(a);
    }
    static std::size_t diag_index(std::size_t n, std::size_t j, int a) {
        return offdiag_count(n) + 3 * j + static_cast<std::size_t>(a - 1);
    }

    double& offdiag(std::size_t j, std::size_t k, int a) { return c_[offdiag_index(n_, j, k, a)]; }
    double offdiag(std::size_t j, std::size_t k, int a) const { return c_[offdiag_index(n_, j, k, a)]; }
    double& diag(std::size_t j, int a) { return c_[diag_index(n_, j, a)]; }
    double diag(std::size_t j, int a) const { return c_[diag_index(n_, j, a)]; }

    friend bool operator==(const TangentCoeffs&, const TangentCoeffs&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> c_;
};

// ------------------------------------------------------------------ basis

inline void check_dimension(std::size_t n) {
    if (n == 0) throw DimensionError("Sp(n): dimension n must be positive");
}

/// Writes sum_p c_p B_p into x (size n), overwriting it.
inline void from_coeffs_into(std::size_t n, std::span<const double> c, QMatrix& x) {
    for (auto& q : x.entries()) q = Quaternion{};
    std::size_t p = 0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) {
            Quaternion z{c[p], c[p + 1], c[p + 2], c[p + 3]};
            x(j, k) = z;
            x(k, j) = -conj(z);
            p += 4;
        }
    }
    constexpr double r2 = std::numbers::sqrt2;
    for (std::size_t j = 0; j < n; ++j) {
        x(j, j) = Quaternion{0.0, r2 * c[p], r2 * c[p + 1], r2 * c[p + 2]};
        p += 3;
    }
}

inline SpnAlgebraElement from_coeffs_unchecked(std::size_t n, std::span<const double> c) {
    SpnAlgebraElement x(n);
    from_coeffs_into(n, c, x.m_);
    return x;
}

inline SpnAlgebraElement from_coeffs(const TangentCoeffs& c) {
    if (c.size() != algebra_dimension(c.n()))
        throw DimensionError("from_coeffs: coefficient length does not match n(2n+1)");
    check_dimension(c.n());
    return from_coeffs_unchecked(c.n(), c.values());
}

/// The orthonormal basis of sp(n) in the documented order.
inline std::vector<SpnAlgebraElement> basis(std::size_t n) {
    check_dimension(n);
    const std::size_t dim = algebra_dimension(n);
    std::vector<SpnAlgebraElement> out;
    out.reserve(dim);
    std::vector<double> c(dim, 0.0);
    for (std::size_t p = 0; p < dim; ++p) {
        c[p] = 1.0;
        out.push_back(from_coeffs_unchecked(n, c));
        c[p] = 0.0;
    }
    return out;
}

/// <X, Y> = 1/2 Re Tr(X* Y).
inline double hs_inner(const QMatrix& x, const QMatrix& y) {
    if (x.size() != y.size()) throw DimensionError("hs_inner: size mismatch");
    double s = 0.0;
    auto xe = x.entries();
    auto ye = y.entries();
    for (std::size_t i = 0; i < xe.size(); ++i) s += inner(xe[i], ye[i]);
    return 0.5 * s;
}

inline double hs_inner(const SpnAlgebraElement& x, const SpnAlgebraElement& y) {
    return hs_inner(x.matrix(), y.matrix());
}

// ------------------------------------------------------------------ expm

/// Scratch buffers for expm / retract so hot loops do not allocate.
struct SpnWorkspace {
    explicit SpnWorkspace(std::size_t n = 0)
        : x2(n), x3(n), x4(n), b(n), t1(n), t2(n) {}
    QMatrix x2, x3, x4, b, t1, t2;
};

namespace detail {

inline constexpr double kInvFactorial[13] = {
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
};

// b = c0 I + c1 x + c2 x2 + c3 x3 (+ c4 x4)
inline void combine(QMatrix& b, const QMatrix& x, const QMatrix& x2, const QMatrix& x3,
                    const QMatrix* x4, const double* c) {
    const std::size_t n = x.size();
    auto be = b.entries();
    auto xe = x.entries();
    auto x2e = x2.entries();
    auto x3e = x3.entries();
    for (std::size_t i = 0; i < be.size(); ++i) {
        Quaternion q = xe[i] * c[1];
        q += x2e[i] * c[2];
        q += x3e[i] * c[3];
        if (x4) q += x4->entries()[i] * c[4];
        be[i] = q;
    }
    for (std::size_t i = 0; i < n; ++i) b(i, i).t += c[0];
}

}  // namespace detail

inline constexpr double kExpmScalingThreshold = 0.5;

/// exp(x) into out: scaling and squaring around a degree-12 Taylor polynomial
/// evaluated with the Paterson-Stockmeyer split in powers of x^4.
inline void expm_into(const QMatrix& x_in, QMatrix& out, SpnWorkspace& ws) {
    const std::size_t n = x_in.size();
    if (!x_in.all_finite()) throw NumericalError("expm: non-finite entries");
    const double nrm = frobenius_norm(x_in);
    int squarings = 0;
    if (nrm > kExpmScalingThreshold)
        squarings = static_cast<int>(std::ceil(std::log2(nrm / kExpmScalingThreshold)));

    const QMatrix* x = &x_in;
    if (squarings > 0) {
        ws.t2 = x_in;
        ws.t2 *= std::ldexp(1.0, -squarings);
        x = &ws.t2;
    }
    multiply_into(*x, *x, ws.x2);
    multiply_into(ws.x2, *x, ws.x3);
    multiply_into(ws.x2, ws.x2, ws.x4);

    const double* c = detail::kInvFactorial;
    // inner = B2 = c8 I + c9 x + c10 x2 + c11 x3 + c12 x4
    detail::combine(ws.b, *x, ws.x2, ws.x3, &ws.x4, c + 8);
    multiply_into(ws.x4, ws.b, ws.t1);
    detail::combine(ws.b, *x, ws.x2, ws.x3, nullptr, c + 4);
    ws.t1 += ws.b;
    multiply_into(ws.x4, ws.t1, out);
    detail::combine(ws.b, *x, ws.x2, ws.x3, nullptr, c);
    out += ws.b;

    for (int s = 0; s < squarings; ++s) {
        multiply_into(out, out, ws.t1);
        std::swap(out, ws.t1);
    }
    (void)n;
}

inline SpnMatrix expm(const SpnAlgebraElement& x) {
    SpnWorkspace ws(x.size());
    QMatrix out(x.size());
    expm_into(x.matrix(), out, ws);
    return SpnMatrix::unchecked(std::move(out));
}

// ------------------------------------------------------------------ retraction

/// Newton iteration U <- 1/2 U (3I - U*U) toward the nearest unitary matrix,
/// in place. Returns the number of Newton steps taken (0 if already within the
/// target defect).
inline int retract_in_place(QMatrix& u, SpnWorkspace& ws, double target = kRetractTarget) {
    const std::size_t n = u.size();
    double defect = unitarity_defect(u, ws.t1);
    if (!std::isfinite(defect) || defect >= kRetractMaxDefect)
        throw DivergenceError("retract: unitarity defect too large; reduce the step size", defect);
    int iters = 0;
    while (defect > target) {
        if (++iters > 60) throw DivergenceError("retract: Newton iteration did not converge", defect);
        // ws.t1 holds U*U; form 3I - U*U
        for (auto& q : ws.t1.entries()) q *= -1.0;
        for (std::size_t i = 0; i < n; ++i) ws.t1(i, i).t += 3.0;
        multiply_into(u, ws.t1, ws.t2);
        ws.t2 *= 0.5;
        std::swap(u, ws.t2);
        defect = unitarity_defect(u, ws.t1);
    }
    return iters;
}

inline SpnMatrix retract(const QMatrix& u) {
    SpnWorkspace ws(u.size());
    QMatrix m = u;
    retract_in_place(m, ws);
    return SpnMatrix::unchecked(std::move(m));
}

inline SpnMatrix retract(const SpnMatrix& u) { return retract(u.matrix()); }

// ------------------------------------------------------------------ Casimir

/// c(n) with sum_p B_p^2 = -2 c(n) I, obtained by summing the squared basis.
inline double casimir_rate(std::size_t n) {
    check_dimension(n);
    QMatrix sum(n);
    for (const auto& b : basis(n)) sum += b.matrix() * b.matrix();
    const double c = -0.5 * sum(0, 0).t;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Quaternion d = sum(i, j);
            if (i == j) d.t += 2.0 * c;
            if (norm(d) > 1e-12)
                throw NumericalError("casimir_rate: sum of squared basis is not scalar");
        }
    }
    return c;
}

}  // namespace qflag
