#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "qflag/polynomial.hpp"
#include "qflag/quadrature.hpp"

using namespace qflag;
using Catch::Approx;

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST_CASE("graded exponents") {
    const auto e = graded_exponents(2, 2);
    const std::vector<Exponent> expect{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    CHECK(e == expect);
    for (std::size_t v = 1; v <= 3; ++v)
        for (int d = 0; d <= 6; ++d)
            CHECK(graded_exponents(v, d).size() == static_cast<std::size_t>(binomial(static_cast<int>(v) + d, d)));
    CHECK(graded_exponents(0, 3).size() == 1);
}

TEST_CASE("polynomial arithmetic") {
    const auto x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
    const auto one = Polynomial::constant(2, 1.0);
    const Polynomial p = (x + y) * (x - y);
    CHECK(p.coefficient({2, 0}) == 1.0);
    CHECK(p.coefficient({1, 1}) == 0.0);
    CHECK(p.coefficient({0, 2}) == -1.0);
    CHECK(p.terms().size() == 2);
    CHECK(p.degree() == 2);
    CHECK((p - p).is_zero());
    CHECK((p - p).degree() == -1);
    CHECK((0.0 * p).is_zero());
    const std::vector<double> pt{0.5, 2.0};
    CHECK(p(std::span<const double>(pt)) == Approx(0.25 - 4.0));
    CHECK((one + x)(std::span<const double>(pt)) == Approx(1.5));
    CHECK_THROWS_AS(p + Polynomial::variable(3, 0), DimensionError);
}

TEST_CASE("derivatives") {
    Polynomial p(2);
    p.add_term({3, 1}, 2.0);
    p.add_term({0, 2}, -1.0);
    const Polynomial dx = p.derivative(0), dy = p.derivative(1);
    CHECK(dx.coefficient({2, 1}) == 6.0);
    CHECK(dx.terms().size() == 1);
    CHECK(dy.coefficient({3, 0}) == 2.0);
    CHECK(dy.coefficient({0, 1}) == -2.0);
    CHECK(Polynomial::constant(2, 4.0).derivative(0).is_zero());
}

TEST_CASE("restriction to the simplex") {
    const Polynomial p = Polynomial::variable(2, 0) * Polynomial::variable(2, 1);
    const Polynomial r = p.restrict_to_simplex();
    CHECK(r.variables() == 1);
    CHECK(r.coefficient({1}) == 1.0);
    CHECK(r.coefficient({2}) == -1.0);
    // agrees with evaluation at (x, 1 - x)
    Polynomial q(3);
    q.add_term({1, 0, 2}, 0.7);
    q.add_term({0, 1, 1}, -1.3);
    q.add_term({0, 0, 3}, 2.0);
    const Polynomial qr = q.restrict_to_simplex();
    const std::vector<double> full{0.2, 0.3, 0.5}, head{0.2, 0.3};
    CHECK(qr(std::span<const double>(head)) == Approx(q(std::span<const double>(full))).epsilon(1e-14));
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    for (int order : {1, 2, 5, 8, 16}) {
        const GaussRule g = gauss_legendre_unit(order);
        REQUIRE(g.nodes.size() == static_cast<std::size_t>(order));
        for (int k = 0; k < 2 * order; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * std::pow(g.nodes[i], k);
            CHECK(s == Approx(1.0 / (k + 1)).epsilon(1e-13));
        }
    }
    CHECK_THROWS_AS(gauss_legendre_unit(0), InvalidArgument);
}

TEST_CASE("simplex quadrature of monomials") {
    // int_{simplex} x^a y^b = a! b! / (a + b + 2)!
    for (int a = 0; a <= 4; ++a) {
        for (int b = 0; b <= 4; ++b) {
            const auto r = integrate_simplex(2, [&](std::span<const double> x) {
                return std::pow(x[0], a) * std::pow(x[1], b);
            });
            CHECK(r.value == Approx(factorial(a) * factorial(b) / factorial(a + b + 2)).epsilon(1e-12));
        }
    }
    const auto vol3 = integrate_simplex(3, [](std::span<const double>) { return 1.0; });
    CHECK(vol3.value == Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(integrate_simplex(0, [](std::span<const double>) { return 2.5; }).value == 2.5);
}

TEST_CASE("simplex quadrature reports non-convergence") {
    QuadratureOptions opt;
    opt.rel_tol = 1e-14;
    opt.max_order = 32;
    CHECK_THROWS_AS(integrate_simplex(1, [](std::span<const double> x) { return std::pow(x[0], -0.9); }, opt),
                    QuadratureError);
}
