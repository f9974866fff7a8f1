#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "qflag/sde.hpp"
#include "qflag/stats.hpp"
#include "support.hpp"

using namespace qflag;
using Catch::Approx;

namespace {

SimConfig config(std::size_t n, double t, double dt, std::uint64_t seed = 11) {
    SimConfig c;
    c.n = n;
    c.t_final = t;
    c.dt = dt;
    c.seed = seed;
    return c;
}

std::vector<Quaternion> start_vector(std::size_t n, double lam1) {
    std::vector<Quaternion> x(n);
    x[0] = Quaternion{0.0, std::sqrt(lam1), 0.0, 0.0};
    const double rest = std::sqrt((1.0 - lam1) / static_cast<double>(n - 1));
    for (std::size_t j = 1; j < n; ++j) x[j] = Quaternion{rest * 0.6, 0.0, rest * 0.8, 0.0};
    return x;
}

}  // namespace

TEST_CASE("time grid") {
    const auto g = time_grid(config(2, 1.0, 0.3));
    CHECK(g.steps == 4);
    CHECK(g.h == Approx(0.25));
    CHECK(time_grid(config(2, 1.0, 0.25)).steps == 4);
    CHECK(time_grid(config(2, 0.0, 0.1)).steps == 0);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(validate(config(0, 1.0, 0.1)), DimensionError);
    CHECK_THROWS_AS(validate(config(2, 1.0, 0.0)), InvalidArgument);
    CHECK_THROWS_AS(validate(config(2, -1.0, 0.1)), InvalidArgument);
    CHECK_THROWS_AS(validate(config(2, 0.1, 0.5)), InvalidArgument);
    auto c = config(2, 1.0, 0.1);
    c.n_paths = 0;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
}

TEST_CASE("t = 0 paths hold only the start") {
    const auto u0 = qtest::random_group(2);
    const auto g = sample_spn_bm(config(2, 0.0, 0.1), u0);
    REQUIRE(g.states.size() == 1);
    CHECK(g.states[0] == u0);
    CHECK(g.increments.empty());
    const auto x0 = start_vector(2, 0.5);
    CHECK(sample_sphere_bm(config(2, 0.0, 0.1), x0).states.size() == 1);
    CHECK(sample_jacobi_simplex(config(2, 0.0, 0.1), SimplexState({0.5, 0.5})).states.size() == 1);
}

TEST_CASE("group paths stay on Sp(n)") {
    const auto g = sample_spn_bm(config(3, 1.0, 0.01), qtest::random_group(3), 4);
    REQUIRE(g.states.size() == 101);
    for (const auto& u : g.states) CHECK(unitarity_defect(u.matrix()) <= 1e-12);
}

TEST_CASE("horizontal increments leave the diagonal at zero") {
    const auto g = sample_horizontal_bm(config(3, 0.1, 0.01), SpnMatrix::identity(3));
    for (const auto& inc : g.increments) {
        for (std::size_t j = 0; j < 3; ++j)
            for (int a = 1; a <= 3; ++a) CHECK(inc.diag(j, a) == 0.0);
        CHECK(inc.offdiag(0, 1, 0) != 0.0);
    }
}

TEST_CASE("samplers are deterministic in (seed, path)") {
    const auto u0 = qtest::random_group(2);
    const auto a = sample_spn_bm(config(2, 0.1, 0.01), u0, 3);
    const auto b = sample_spn_bm(config(2, 0.1, 0.01), u0, 3);
    const auto c = sample_spn_bm(config(2, 0.1, 0.01), u0, 4);
    CHECK(a.states.back() == b.states.back());
    CHECK(!(a.states.back() == c.states.back()));
}

TEST_CASE("Sp(2) Brownian motion mean decays at rate 5") {
    const SpnMatrix u0 = qtest::random_group(2);
    const double t = 0.1;
    const std::size_t N = 3000;
    std::vector<std::vector<double>> entry(4, std::vector<double>(N));
    for (std::size_t p = 0; p < N; ++p) {
        const auto g = sample_spn_bm(config(2, t, 0.005), u0, p);
        const QMatrix& u = g.states.back().matrix();
        entry[0][p] = u(0, 0).t;
        entry[1][p] = u(0, 1).x;
        entry[2][p] = u(1, 0).y;
        entry[3][p] = u(1, 1).z;
    }
    const double d = std::exp(-5.0 * t);
    const double target[4] = {d * u0(0, 0).t, d * u0(0, 1).x, d * u0(1, 0).y, d * u0(1, 1).z};
    for (int i = 0; i < 4; ++i) {
        const auto m = mean_estimate(entry[static_cast<std::size_t>(i)]);
        CHECK(std::abs(m.scalar() - target[i]) <= 4.0 * m.se() + 2e-3);
    }
}

TEST_CASE("Sp(1) Brownian motion mean is exp(-3t/2)") {
    const std::vector<Quaternion> b0{Quaternion::one(), normalized(Quaternion{1, 2, 3, 4})};
    const double t = 0.5;
    const std::size_t N = 4000;
    std::vector<double> r0(N), r1(N);
    for (std::size_t p = 0; p < N; ++p) {
        const auto path = sample_sp1n_bm(config(2, t, 0.01), b0, p);
        const auto& b = path.states.back();
        for (const auto& q : b) REQUIRE(std::abs(norm(q) - 1.0) <= 1e-12);
        r0[p] = b[0].t;
        r1[p] = b[1].z;
    }
    const auto m0 = mean_estimate(r0), m1 = mean_estimate(r1);
    CHECK(std::abs(m0.scalar() - std::exp(-0.75)) <= 4.0 * m0.se() + 1e-3);
    CHECK(std::abs(m1.scalar() - std::exp(-0.75) * b0[1].z) <= 4.0 * m1.se() + 1e-3);
}

TEST_CASE("Sp(1) rates scale time") {
    const std::vector<Quaternion> b0{Quaternion::one()};
    const std::vector<double> rates{0.0};
    const auto path = sample_sp1n_bm(config(1, 0.5, 0.1), b0, 0, rates);
    CHECK(path.states.back()[0] == Quaternion::one());
    CHECK_THROWS_AS(sample_sp1n_bm(config(1, 0.5, 0.1), std::vector<Quaternion>{Quaternion{2, 0, 0, 0}}),
                    InvalidArgument);
}

TEST_CASE("symplectic completion keeps x as the last row") {
    for (std::size_t n = 1; n <= 4; ++n) {
        std::vector<Quaternion> x(n);
        for (auto& q : x) q = qtest::random_quaternion();
        const double s = vector_norm(x);
        for (auto& q : x) q *= 1.0 / s;
        const SpnMatrix u = complete_to_symplectic(x);
        for (std::size_t j = 0; j < n; ++j) CHECK(norm(u(n - 1, j) - x[j]) == 0.0);
        CHECK(unitarity_defect(u.matrix()) <= 1e-12);
    }
    const std::vector<Quaternion> bad{Quaternion{2, 0, 0, 0}};
    CHECK_THROWS_AS(complete_to_symplectic(bad), InvalidArgument);
}

TEST_CASE("sphere paths keep unit norm") {
    for (auto scheme : {SphereScheme::last_row, SphereScheme::intrinsic}) {
        auto c = config(3, 0.2, 0.01);
        c.sphere_scheme = scheme;
        const auto p = sample_sphere_bm(c, start_vector(3, 0.5), 1);
        for (const auto& x : p.states) CHECK(std::abs(vector_norm(x) - 1.0) <= 1e-12);
    }
}

TEST_CASE("sphere radial means follow the mean ODE in both schemes") {
    const double t = 0.1, lam1 = 0.9;
    const std::size_t N = 4000;
    for (auto scheme : {SphereScheme::last_row, SphereScheme::intrinsic}) {
        auto c = config(2, t, 1e-3, 3);
        c.sphere_scheme = scheme;
        std::vector<double> l(N);
        for (std::size_t p = 0; p < N; ++p) {
            const auto path = sample_sphere_bm(c, start_vector(2, lam1), p);
            l[p] = norm2(path.states.back()[0]);
        }
        const auto m = mean_estimate(l);
        CHECK(std::abs(m.scalar() - radial_mean(2, lam1, t)) <= 4.0 * m.se() + 5e-3);
    }
}

TEST_CASE("uniform start is stationary for the radial mean") {
    // a Gaussian vector normalized is uniform on the sphere, with E[lambda_j] = 1/n
    const std::size_t N = 3000;
    std::vector<double> l(N);
    auto c = config(3, 0.05, 5e-3, 8);
    c.sphere_scheme = SphereScheme::intrinsic;
    for (std::size_t p = 0; p < N; ++p) {
        std::vector<Quaternion> x(3);
        for (auto& q : x) q = qtest::random_quaternion();
        const double s = vector_norm(x);
        for (auto& q : x) q *= 1.0 / s;
        l[p] = norm2(sample_sphere_bm(c, x, p).states.back()[1]);
    }
    const auto m = mean_estimate(l);
    CHECK(std::abs(m.scalar() - 1.0 / 3.0) <= 4.0 * m.se());
}

TEST_CASE("last row lambda") {
    const SpnMatrix u = qtest::random_group(3);
    const auto l = last_row_lambda(u.matrix());
    CHECK(std::accumulate(l.begin(), l.end(), 0.0) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simplex paths stay on the simplex") {
    const auto p = sample_jacobi_simplex(config(3, 1.0, 1e-3), SimplexState({0.2, 0.3, 0.5}), 2);
    for (const auto& s : p.states) {
        CHECK(std::accumulate(s.lambda.begin(), s.lambda.end(), 0.0) == Approx(1.0).epsilon(1e-12));
        for (double v : s.lambda) CHECK(v >= 0.0);
    }
    CHECK_THROWS_AS(sample_jacobi_simplex(config(2, 1.0, 0.1), SimplexState({1.0, 0.0})), InvalidArgument);
    CHECK_THROWS_AS(sample_jacobi_simplex(config(2, 1.0, 0.1), SimplexState({0.6, 0.6})), InvalidArgument);
    CHECK_THROWS_AS(sample_jacobi_simplex(config(3, 1.0, 0.1), SimplexState({0.5, 0.5})), DimensionError);
}

TEST_CASE("simplex drift") {
    const std::vector<double> l{0.25, 0.25, 0.5};
    const auto d = jacobi_simplex_drift(l);
    CHECK(d[0] == Approx(1.0));
    CHECK(d[2] == Approx(-2.0));
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == Approx(0.0).margin(1e-14));
    const std::vector<double> c(4, 0.25);
    for (double v : jacobi_simplex_drift(c)) CHECK(v == Approx(0.0).margin(1e-15));
}

TEST_CASE("simplex means follow the mean ODE") {
    const double t = 0.1;
    const std::size_t N = 4000;
    std::vector<double> l(N);
    for (std::size_t p = 0; p < N; ++p)
        l[p] = sample_jacobi_simplex(config(2, t, 1e-3, 5), SimplexState({0.9, 0.1}), p).states.back()[0];
    const auto m = mean_estimate(l);
    CHECK(std::abs(m.scalar() - radial_mean(2, 0.9, t)) <= 4.0 * m.se() + 5e-3);
}
