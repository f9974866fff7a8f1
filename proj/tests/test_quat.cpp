#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>

#include "qflag/quat.hpp"
#include "support.hpp"

using namespace qflag;
using Catch::Approx;

namespace {

// Multiplication table oracle: e_a e_b = sign[a][b] e_{index[a][b]}.
constexpr std::array<std::array<int, 4>, 4> kIndex = {{{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}}};
constexpr std::array<std::array<int, 4>, 4> kSign = {{{1, 1, 1, 1}, {1, -1, 1, -1}, {1, -1, -1, 1}, {1, 1, -1, -1}}};

Quaternion table_product(const Quaternion& p, const Quaternion& q) {
    std::array<double, 4> out{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) out[kIndex[a][b]] += kSign[a][b] * p[a] * q[b];
    return {out[0], out[1], out[2], out[3]};
}

// exp by truncated power series of the quaternion itself
Quaternion series_exp(const ImagQuaternion& v, int terms = 40) {
    Quaternion sum = Quaternion::one(), term = Quaternion::one();
    for (int k = 1; k < terms; ++k) {
        term = term * v.quaternion() * (1.0 / k);
        sum += term;
    }
    return sum;
}

double qdist(const Quaternion& a, const Quaternion& b) { return norm(a - b); }

}  // namespace

TEST_CASE("Hamilton relations") {
    const auto i = Quaternion::i(), j = Quaternion::j(), k = Quaternion::k();
    CHECK(i * j == k);
    CHECK(j * i == -k);
    CHECK(j * k == i);
    CHECK(k * i == j);
    CHECK(i * i == -Quaternion::one());
    CHECK(i * j * k == -Quaternion::one());
}

TEST_CASE("unit element and (1+i)(1-i)") {
    const Quaternion q{0.3, -1.2, 2.5, 0.7};
    CHECK(Quaternion::one() * q == q);
    CHECK(q * Quaternion::one() == q);
    const Quaternion a{1, 1, 0, 0}, b{1, -1, 0, 0};
    CHECK(a * b == table_product(a, b));
    CHECK(a * b == Quaternion{2, 0, 0, 0});
}

TEST_CASE("product agrees with the multiplication table") {
    for (int r = 0; r < 1000; ++r) {
        const auto p = qtest::random_quaternion(), q = qtest::random_quaternion();
        CHECK(qdist(mul(p, q), table_product(p, q)) <= 1e-14 * (1 + norm(p) * norm(q)));
    }
}

TEST_CASE("product is associative") {
    for (int r = 0; r < 1000; ++r) {
        const auto p = qtest::random_quaternion(), q = qtest::random_quaternion(), s = qtest::random_quaternion();
        CHECK(qdist((p * q) * s, p * (q * s)) <= 1e-12 * (1 + norm(p) * norm(q) * norm(s)));
    }
}

TEST_CASE("inner product") {
    const Quaternion q{0.5, -2, 1, 3};
    CHECK(inner(q, q) == Approx(norm(q) * norm(q)).epsilon(1e-15));
    CHECK(inner(Quaternion::i(), Quaternion::j()) == 0.0);
    const Quaternion a{1, 2, 0, 0}, b{3, 0, 0, 1};
    const double oracle = a.t * b.t + a.x * b.x + a.y * b.y + a.z * b.z;
    CHECK(inner(a, b) == oracle);
    CHECK(inner(a, b) == 3.0);
    for (int r = 0; r < 200; ++r) {
        const auto p = qtest::random_quaternion(), s = qtest::random_quaternion();
        CHECK(inner(p, s) == Approx((p * conj(s)).t).margin(1e-13));
    }
}

TEST_CASE("norm is multiplicative") {
    double worst = 0.0;
    for (int r = 0; r < 10000; ++r) {
        const auto p = qtest::random_quaternion(), q = qtest::random_quaternion();
        worst = std::max(worst, std::abs(norm(p * q) - norm(p) * norm(q)));
    }
    CHECK(worst <= 1e-12);
    for (int r = 0; r < 100; ++r) {
        const auto q = qtest::random_quaternion();
        CHECK(norm(q * conj(q)) == Approx(norm2(q)).epsilon(1e-14));
    }
}

TEST_CASE("conjugation reverses products") {
    double worst = 0.0;
    for (int r = 0; r < 10000; ++r) {
        const auto p = qtest::random_quaternion(), q = qtest::random_quaternion();
        const Quaternion d = conj(p * q) - conj(q) * conj(p);
        worst = std::max({worst, std::abs(d.t), std::abs(d.x), std::abs(d.y), std::abs(d.z)});
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("real part is the symmetrization") {
    for (int r = 0; r < 100; ++r) {
        const auto q = qtest::random_quaternion();
        const Quaternion s = (q + conj(q)) * 0.5;
        CHECK(s.t == Approx(q.real()).margin(1e-15));
        CHECK(s.x == 0.0);
        CHECK(s.y == 0.0);
        CHECK(s.z == 0.0);
    }
}

TEST_CASE("commutator of imaginary quaternions") {
    for (int r = 0; r < 100; ++r) {
        const auto p = qtest::random_imag(), q = qtest::random_imag();
        const Quaternion full = p.quaternion() * q.quaternion() - q.quaternion() * p.quaternion();
        const ImagQuaternion c = commutator(p, q);
        CHECK(full.t == Approx(0.0).margin(1e-13));
        CHECK(qdist(full, c.quaternion()) <= 1e-13);
    }
}

TEST_CASE("exp_imag") {
    CHECK(exp_imag({0, 0, 0}) == Quaternion::one());
    const ImagQuaternion v{std::numbers::pi / 2, 0, 0};
    const Quaternion e = exp_imag(v);
    CHECK(qdist(e, series_exp(v)) <= 1e-14);
    CHECK(qdist(e, Quaternion::i()) <= 1e-15);
    for (int r = 0; r < 1000; ++r) {
        const auto w = qtest::random_imag(2.0);
        const Quaternion q = exp_imag(w);
        CHECK(norm(q) == Approx(1.0).margin(1e-15));
        CHECK(qdist(q, series_exp(w, 60)) <= 1e-12);
    }
}

TEST_CASE("exp_imag near the origin") {
    // both sides of the series switch
    for (double s : {1e-9, 3e-5, 9.9e-5, 1.01e-4, 1e-3}) {
        const ImagQuaternion v{0.6 * s, -0.8 * s, 0.0};
        CHECK(qdist(exp_imag(v), series_exp(v)) <= 4.5e-16);
    }
}

TEST_CASE("log_unit") {
    const ImagQuaternion zero = log_unit(Quaternion::one());
    CHECK(zero.x == 0.0);
    CHECK(zero.y == 0.0);
    CHECK(zero.z == 0.0);
    const ImagQuaternion li = log_unit(Quaternion::i());
    CHECK(li.x == Approx(std::numbers::pi / 2).epsilon(1e-15));
    CHECK(li.y == 0.0);
    CHECK(li.z == 0.0);
    for (int r = 0; r < 1000; ++r) {
        ImagQuaternion v = qtest::random_imag();
        const double s = norm(v);
        const double target = qtest::uniform(0.0, std::numbers::pi / 2 - 1e-6);
        v = (target / s) * v;
        const ImagQuaternion back = log_unit(exp_imag(v));
        CHECK(norm(back - v) <= 1e-13);
    }
    for (int r = 0; r < 1000; ++r) {
        const auto q = qtest::random_unit();
        if (q.t <= -1.0 + 1e-6) continue;
        const ImagQuaternion l = log_unit(q);
        CHECK(norm(l) <= std::numbers::pi);
        CHECK(qdist(exp_imag(l), q) <= 1e-12);
    }
}

TEST_CASE("log_unit rejects antipodal and non-unit input") {
    CHECK_THROWS_AS(log_unit(-Quaternion::one()), BranchError);
    CHECK_THROWS_AS(log_unit(Quaternion{-1.0 + 1e-12, 0, 0, std::sqrt(2e-12)}), BranchError);
    CHECK_THROWS_AS(log_unit(Quaternion{2, 0, 0, 0}), InvalidArgument);
}
