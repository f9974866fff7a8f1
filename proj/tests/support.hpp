#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qflag/quat.hpp"
#include "qflag/spn.hpp"

namespace qtest {

inline std::mt19937_64& rng() {
    static std::mt19937_64 g(20240611);
    return g;
}

inline double gauss() {
    static std::normal_distribution<double> d;
    return d(rng());
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

inline qflag::Quaternion random_quaternion() { return {gauss(), gauss(), gauss(), gauss()}; }

inline qflag::Quaternion random_unit() { return qflag::normalized(random_quaternion()); }

inline qflag::ImagQuaternion random_imag(double scale = 1.0) { return {scale * gauss(), scale * gauss(), scale * gauss()}; }

inline std::vector<double> random_coeffs(std::size_t n, double scale) {
    std::vector<double> c(qflag::algebra_dimension(n));
    for (auto& v : c) v = scale * gauss();
    return c;
}

inline qflag::SpnAlgebraElement random_algebra(std::size_t n, double scale) {
    return qflag::from_coeffs(qflag::TangentCoeffs(n, random_coeffs(n, scale)));
}

/// A Haar-ish random group element: product of exponentials of random algebra elements.
inline qflag::SpnMatrix random_group(std::size_t n) {
    qflag::QMatrix u = qflag::QMatrix::identity(n);
    for (int i = 0; i < 4; ++i) u = u * qflag::expm(random_algebra(n, 0.8)).matrix();
    return qflag::retract(u);
}

inline double max_entry_diff(const qflag::QMatrix& a, const qflag::QMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, qflag::norm(a(i, j) - b(i, j)));
    return m;
}

}  // namespace qtest
