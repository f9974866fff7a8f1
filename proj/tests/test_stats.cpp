#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "qflag/stats.hpp"

using namespace qflag;
using Catch::Approx;

namespace {

std::mt19937_64& gen() {
    static std::mt19937_64 g(99);
    return g;
}

double gauss() {
    static std::normal_distribution<double> d;
    return d(gen());
}

}  // namespace

TEST_CASE("pairwise sum") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    CHECK(pairwise_sum(v) == 499500.0);
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
    std::vector<double> w(12345);
    for (auto& x : w) x = gauss();
    CHECK(pairwise_sum(w) == pairwise_sum(w));
}

TEST_CASE("mean estimate") {
    const std::vector<double> x{1, 2, 3, 4};
    const McEstimate m = mean_estimate(x);
    CHECK(m.scalar() == 2.5);
    CHECK(m.se() == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(m.n_samples == 4);
    CHECK_THROWS_AS(mean_estimate(std::vector<double>{1.0}), SampleSizeError);
}

TEST_CASE("standard errors have nominal coverage") {
    const int reps = 2000, n = 100;
    int covered = 0;
    std::vector<double> x(n);
    for (int r = 0; r < reps; ++r) {
        for (auto& v : x) v = 0.7 + 2.0 * gauss();
        const McEstimate m = mean_estimate(x);
        if (std::abs(m.scalar() - 0.7) <= 1.96 * m.se()) ++covered;
    }
    CHECK(static_cast<double>(covered) / reps == Approx(0.95).margin(0.02));
}

TEST_CASE("covariance of constant samples") {
    const std::vector<std::vector<double>> s(10, std::vector<double>{1.0, -2.0, 3.0});
    const McEstimate c = cov_estimate(s);
    CHECK(c.rows == 3);
    for (double v : c.value) CHECK(v == 0.0);
    for (double v : c.std_error) CHECK(v == 0.0);
    CHECK_THROWS_AS(cov_estimate(std::vector<std::vector<double>>(2, {1.0})), SampleSizeError);
    CHECK_THROWS_AS(cov_estimate(std::vector<std::vector<double>>{{1.0}, {1.0, 2.0}, {1.0}}), DimensionError);
}

TEST_CASE("covariance of Gaussian pairs") {
    std::vector<std::vector<double>> s(100000);
    for (auto& v : s) v = {gauss(), gauss()};
    const McEstimate c = cov_estimate(s);
    RealMatrix id(2, 2);
    id(0, 0) = id(1, 1) = 1.0;
    for (const auto& r : compare_matrix("cov", c, id)) CHECK(r.pass);
    CHECK(c.se(0, 0) == Approx(std::sqrt(2.0 / 1e5)).epsilon(0.05));
    CHECK(c.se(0, 1) == Approx(std::sqrt(1.0 / 1e5)).epsilon(0.05));
}

TEST_CASE("jackknife standard errors match brute-force leave-one-out") {
    const std::size_t N = 30;
    std::vector<std::vector<double>> s(N);
    for (auto& v : s) {
        const double a = gauss(), b = gauss();
        v = {a, 0.5 * a + b, b * b};
    }
    const McEstimate c = cov_estimate(s);
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            std::vector<double> loo(N);
            for (std::size_t i = 0; i < N; ++i) {
                double ma = 0, mb = 0;
                for (std::size_t k = 0; k < N; ++k)
                    if (k != i) ma += s[k][a], mb += s[k][b];
                ma /= N - 1.0;
                mb /= N - 1.0;
                double acc = 0;
                for (std::size_t k = 0; k < N; ++k)
                    if (k != i) acc += (s[k][a] - ma) * (s[k][b] - mb);
                loo[i] = acc / (N - 2.0);
            }
            double mean = 0;
            for (double v : loo) mean += v;
            mean /= N;
            double ss = 0;
            for (double v : loo) ss += (v - mean) * (v - mean);
            CHECK(c.se(a, b) == Approx(std::sqrt((N - 1.0) / N * ss)).epsilon(1e-10));

            double ma = 0, mb = 0;
            for (const auto& v : s) ma += v[a], mb += v[b];
            ma /= N;
            mb /= N;
            double full = 0;
            for (const auto& v : s) full += (v[a] - ma) * (v[b] - mb);
            CHECK(c(a, b) == Approx(full / (N - 1.0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("empirical characteristic function") {
    std::vector<AreaVector> s(200, AreaVector(2));
    for (auto& a : s)
        for (auto& v : a.a) v = gauss();
    const CfEstimate z = empirical_cf(s, FrequencyVector(2));
    CHECK(z.real.scalar() == 1.0);
    CHECK(z.real.se() == 0.0);
    CHECK(z.imag.scalar() == 0.0);
    const std::vector<AreaVector> zeros(200, AreaVector(2));
    const FrequencyVector u(2, {1, 2, 3, 4, 5, 6});
    CHECK(empirical_cf(zeros, u).real.scalar() == 1.0);
    CHECK_THROWS_AS(empirical_cf(std::vector<AreaVector>(50, AreaVector(2)), u), SampleSizeError);
    CHECK_THROWS_AS(empirical_cf(zeros, FrequencyVector(3)), DimensionError);
}

TEST_CASE("empirical characteristic function of Gaussian data") {
    std::vector<AreaVector> s(20000, AreaVector(1));
    for (auto& a : s)
        for (auto& v : a.a) v = gauss();
    const FrequencyVector u(1, {0.5, -0.5, 1.0});
    const CfEstimate c = empirical_cf(s, u);
    CHECK(std::abs(c.real.scalar() - std::exp(-0.5 * 1.5)) <= 3.0 * c.real.se());
    CHECK(std::abs(c.imag.scalar()) <= 3.0 * c.imag.se());
}

TEST_CASE("ergodic averages") {
    const double dt = 0.01;
    const std::vector<std::vector<double>> flat(2000, std::vector<double>{0.25, 0.75});
    const McEstimate e = ergodic_check(flat, dt);
    CHECK(e.value[0] == Approx(3.0));
    CHECK(e.value[1] == Approx(1.0 / 3.0));
    CHECK(e.std_error[0] == Approx(0.0).margin(1e-14));
    CHECK_THROWS_AS(ergodic_check(std::vector<std::vector<double>>(100, {0.5, 0.5}), dt), SampleSizeError);
    auto holes = flat;
    holes[7] = {0.0, 1.0};
    CHECK(ergodic_check(holes, dt).excluded == 1);
}

TEST_CASE("stationary ratio integral") {
    CHECK(stationary_ratio_integral(2) == Approx(2.0).epsilon(1e-12));
    CHECK(stationary_ratio_integral(3) == Approx(4.0).epsilon(1e-12));
    CHECK(stationary_ratio_integral(5) == Approx(8.0).epsilon(1e-12));
    CHECK_THROWS_AS(stationary_ratio_integral(1), DimensionError);
}

TEST_CASE("comparison rows") {
    const CheckRow a = compare("q", "0", 1.2, 0.1, 1.0);
    CHECK(a.z == Approx(2.0));
    CHECK(a.pass);
    CHECK_FALSE(compare("q", "0", 1.4, 0.1, 1.0).pass);
    CHECK(compare("q", "0", 1.4, 0.1, 1.0, 3.0, 0.2).pass);
    const CheckRow d = compare("q", "0", 1.0 + 1e-12, 0.0, 1.0, 3.0, 1e-10);
    CHECK(d.z == 0.0);
    CHECK(d.pass);
    const CheckRow t = compare_two("q", "0", 1.0, 0.3, 1.5, 0.4);
    CHECK(t.se == Approx(0.5));
    CHECK(t.z == Approx(-1.0));
    const std::vector<CheckRow> rows{a, t};
    CHECK(all_pass(rows));
    CHECK(max_abs_z(rows) == Approx(2.0));
}

TEST_CASE("compare_matrix labels") {
    McEstimate e;
    e.rows = e.cols = 2;
    e.value = {1, 2, 3, 4};
    e.std_error = {1, 1, 1, 1};
    RealMatrix t(2, 2);
    const auto rows = compare_matrix("m", e, t);
    REQUIRE(rows.size() == 4);
    CHECK(rows[1].index == "0,1");
    CHECK(rows[2].value == 3.0);
    CHECK_THROWS_AS(compare_matrix("m", e, RealMatrix(3, 3)), DimensionError);
}

TEST_CASE("mean ODE check") {
    CHECK(radial_mean(2, 0.9, 0.0) == 0.9);
    CHECK(radial_mean(2, 0.9, 100.0) == Approx(0.5));
    const std::vector<double> times{0.0, 0.1, 0.5};
    const std::vector<double> lam0{1.0 / 3, 1.0 / 3, 1.0 / 3};
    std::vector<std::vector<std::vector<double>>> s(1000, std::vector<std::vector<double>>(3, lam0));
    const MeanOdeReport r = mean_ode_check(times, s, lam0, 0.0);
    CHECK(r.pass);
    CHECK(r.rows.size() == 9);
    CHECK(r.rows[4].index == "t=0.1,j=2");
    CHECK(r.max_abs_z == 0.0);
    s.resize(999);
    CHECK_THROWS_AS(mean_ode_check(times, s, lam0, 0.0), SampleSizeError);
}
