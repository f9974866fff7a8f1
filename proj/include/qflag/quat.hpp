#pragma once

// Real quaternions t + x i + y j + z k and the sp(1) = Im(H) identification.

#include <cmath>
#include <numbers>
#include <ostream>

#include "qflag/error.hpp"

namespace qflag {

template <class T>
struct BasicImagQuaternion;

template <class T>
struct BasicQuaternion {
    T t{}, x{}, y{}, z{};

    constexpr BasicQuaternion() = default;
    constexpr BasicQuaternion(T t_, T x_, T y_, T z_) : t(t_), x(x_), y(y_), z(z_) {}
    constexpr explicit BasicQuaternion(T real) : t(real) {}

    static constexpr BasicQuaternion one() { return {T(1), T(0), T(0), T(0)}; }
    static constexpr BasicQuaternion i() { return {T(0), T(1), T(0), T(0)}; }
    static constexpr BasicQuaternion j() { return {T(0), T(0), T(1), T(0)}; }
    static constexpr BasicQuaternion k() { return {T(0), T(0), T(0), T(1)}; }

    /// e_0 = 1, e_1 = i, e_2 = j, e_3 = k.
    static constexpr BasicQuaternion unit(int a) {
        switch (a) {
            case 0: return one();
            case 1: return i();
            case 2: return j();
            default: return k();
        }
    }

    constexpr T real() const { return t; }
    constexpr BasicImagQuaternion<T> imag() const { return {x, y, z}; }
    constexpr T operator[](int a) const { return a == 0 ? t : a == 1 ? x : a == 2 ? y : z; }

    constexpr BasicQuaternion& operator+=(const BasicQuaternion& o) {
        t += o.t; x += o.x; y += o.y; z += o.z;
        return *this;
    }
    constexpr BasicQuaternion& operator-=(const BasicQuaternion& o) {
        t -= o.t; x -= o.x; y -= o.y; z -= o.z;
        return *this;
    }
    constexpr BasicQuaternion& operator*=(T s) {
        t *= s; x *= s; y *= s; z *= s;
        return *this;
    }

    friend constexpr bool operator==(const BasicQuaternion&, const BasicQuaternion&) = default;
};

template <class T>
struct BasicImagQuaternion {
    T x{}, y{}, z{};

    constexpr T operator[](int a) const { return a == 0 ? x : a == 1 ? y : z; }
    constexpr BasicQuaternion<T> quaternion() const { return {T(0), x, y, z}; }

    constexpr BasicImagQuaternion& operator+=(const BasicImagQuaternion& o) {
        x += o.x; y += o.y; z += o.z;
        return *this;
    }
    constexpr BasicImagQuaternion& operator-=(const BasicImagQuaternion& o) {
        x -= o.x; y -= o.y; z -= o.z;
        return *this;
    }

    friend constexpr bool operator==(const BasicImagQuaternion&, const BasicImagQuaternion&) = default;
};

using Quaternion = BasicQuaternion<double>;
using ImagQuaternion = BasicImagQuaternion<double>;

// ---------------------------------------------------------------- arithmetic

template <class T>
constexpr BasicQuaternion<T> operator+(BasicQuaternion<T> p, const BasicQuaternion<T>& q) {
    return p += q;
}
template <class T>
constexpr BasicQuaternion<T> operator-(BasicQuaternion<T> p, const BasicQuaternion<T>& q) {
    return p -= q;
}
template <class T>
constexpr BasicQuaternion<T> operator-(const BasicQuaternion<T>& q) {
    return {-q.t, -q.x, -q.y, -q.z};
}
template <class T>
constexpr BasicQuaternion<T> operator*(BasicQuaternion<T> q, T s) {
    return q *= s;
}
template <class T>
constexpr BasicQuaternion<T> operator*(T s, BasicQuaternion<T> q) {
    return q *= s;
}

/// Hamilton product: i j = k = -j i, j k = i, k i = j.
template <class T>
constexpr BasicQuaternion<T> operator*(const BasicQuaternion<T>& p, const BasicQuaternion<T>& q) {
    return {p.t * q.t - p.x * q.x - p.y * q.y - p.z * q.z,
            p.t * q.x + p.x * q.t + p.y * q.z - p.z * q.y,
            p.t * q.y - p.x * q.z + p.y * q.t + p.z * q.x,
            p.t * q.z + p.x * q.y - p.y * q.x + p.z * q.t};
}

template <class T>
constexpr BasicQuaternion<T> mul(const BasicQuaternion<T>& p, const BasicQuaternion<T>& q) {
    return p * q;
}

template <class T>
constexpr BasicQuaternion<T> conj(const BasicQuaternion<T>& q) {
    return {q.t, -q.x, -q.y, -q.z};
}

/// Euclidean inner product on R^4, equal to Re(p conj(q)).
template <class T>
constexpr T inner(const BasicQuaternion<T>& p, const BasicQuaternion<T>& q) {
    return p.t * q.t + p.x * q.x + p.y * q.y + p.z * q.z;
}

template <class T>
constexpr T norm2(const BasicQuaternion<T>& q) {
    return inner(q, q);
}

template <class T>
T norm(const BasicQuaternion<T>& q) {
    using std::sqrt;
    return sqrt(norm2(q));
}

template <class T>
BasicQuaternion<T> inverse(const BasicQuaternion<T>& q) {
    const T n2 = norm2(q);
    return conj(q) * (T(1) / n2);
}

template <class T>
BasicQuaternion<T> normalized(const BasicQuaternion<T>& q) {
    return q * (T(1) / norm(q));
}

template <class T>
constexpr BasicImagQuaternion<T> operator+(BasicImagQuaternion<T> p, const BasicImagQuaternion<T>& q) {
    return p += q;
}
template <class T>
constexpr BasicImagQuaternion<T> operator-(BasicImagQuaternion<T> p, const BasicImagQuaternion<T>& q) {
    return p -= q;
}
template <class T>
constexpr BasicImagQuaternion<T> operator-(const BasicImagQuaternion<T>& v) {
    return {-v.x, -v.y, -v.z};
}
template <class T>
constexpr BasicImagQuaternion<T> operator*(T s, const BasicImagQuaternion<T>& v) {
    return {s * v.x, s * v.y, s * v.z};
}
template <class T>
constexpr BasicImagQuaternion<T> operator*(const BasicImagQuaternion<T>& v, T s) {
    return s * v;
}

template <class T>
constexpr T dot(const BasicImagQuaternion<T>& p, const BasicImagQuaternion<T>& q) {
    return p.x * q.x + p.y * q.y + p.z * q.z;
}

template <class T>
T norm(const BasicImagQuaternion<T>& v) {
    using std::sqrt;
    return sqrt(dot(v, v));
}

/// Lie bracket pq - qp on sp(1); twice the cross product.
template <class T>
constexpr BasicImagQuaternion<T> commutator(const BasicImagQuaternion<T>& p,
                                            const BasicImagQuaternion<T>& q) {
    return {T(2) * (p.y * q.z - p.z * q.y), T(2) * (p.z * q.x - p.x * q.z),
            T(2) * (p.x * q.y - p.y * q.x)};
}

// ---------------------------------------------------------------- exp / log

/// Unit quaternion cos|v| + (v/|v|) sin|v|, renormalized.
inline Quaternion exp_imag(const ImagQuaternion& v) {
    const double th2 = dot(v, v);
    double c, sinc;
    if (th2 < 1e-8) {
        // |v| < 1e-4
        c = 1.0 - th2 / 2.0 + th2 * th2 / 24.0;
        sinc = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
    } else {
        const double th = std::sqrt(th2);
        c = std::cos(th);
        sinc = std::sin(th) / th;
    }
    return normalized(Quaternion{c, sinc * v.x, sinc * v.y, sinc * v.z});
}

inline constexpr double kUnitTolerance = 1e-10;
inline constexpr double kAntipodalMargin = 1e-9;

/// Principal logarithm of a unit quaternion; |result| <= pi.
inline ImagQuaternion log_unit(const Quaternion& q) {
    const double n = norm(q);
    if (!(std::abs(n - 1.0) <= kUnitTolerance)) {
        throw InvalidArgument("log_unit: argument is not a unit quaternion (|q| = " +
                              std::to_string(n) + ")");
    }
    if (q.t <= -1.0 + kAntipodalMargin) {
        throw BranchError("log_unit: argument is antipodal to 1, branch is ambiguous");
    }
    const ImagQuaternion v = q.imag();
    const double s = norm(v);
    double factor;
    if (s < 1e-8) {
        factor = 1.0 / q.t;
    } else {
        factor = std::atan2(s, q.t) / s;
    }
    return factor * v;
}

template <class T>
std::ostream& operator<<(std::ostream& os, const BasicQuaternion<T>& q) {
    return os << '(' << q.t << ' ' << q.x << "i " << q.y << "j " << q.z << "k)";
}

}  // namespace qflag
