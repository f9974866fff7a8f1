#pragma once

// Closed-form side: Dirichlet densities and moments on the simplex, Jacobi
// polynomials, the Jacobi operator and its heat kernel, the characteristic
// function of the stochastic areas, and the limit covariances.
//
// Points of the simplex Sigma_{n-1} = { x in R^{n-1} : x >= 0, sum x <= 1 } are
// passed as their n - 1 free coordinates; the n-th is 1 - sum x.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "qflag/error.hpp"
#include "qflag/polynomial.hpp"
#include "qflag/quadrature.hpp"
#include "qflag/real_matrix.hpp"
#include "qflag/sde.hpp"

namespace qflag {

/// Working precision for the moment Gram matrices. Degree-40 monomial Gram
/// matrices have condition numbers near 1e62, so double is hopeless.
using HighReal = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<120>>;

inline constexpr int kHighDigits = 120;

// ------------------------------------------------------------------ index

class JacobiIndex {
public:
    JacobiIndex() = default;
    explicit JacobiIndex(std::vector<double> kappa) : kappa_(std::move(kappa)) {
        if (kappa_.size() < 2) throw DimensionError("JacobiIndex: need at least two parameters");
        for (double k : kappa_)
            if (!(k > -0.5) || !std::isfinite(k)) throw InvalidArgument("JacobiIndex: each kappa_j must exceed -1/2");
    }

    static JacobiIndex uniform(std::size_t n, double value) { return JacobiIndex(std::vector<double>(n, value)); }

    /// (3/2 + mu_1, ..., 3/2 + mu_n)
    static JacobiIndex shifted(std::span<const double> mu) {
        std::vector<double> k(mu.size());
        for (std::size_t j = 0; j < mu.size(); ++j) k[j] = 1.5 + mu[j];
        return JacobiIndex(std::move(k));
    }

    std::size_t n() const noexcept { return kappa_.size(); }
    std::size_t variables() const noexcept { return kappa_.size() - 1; }
    const std::vector<double>& kappa() const noexcept { return kappa_; }
    double operator[](std::size_t j) const { return kappa_[j]; }
    double total() const {
        double s = 0.0;
        for (double k : kappa_) s += k;
        return s;
    }

    friend bool operator==(const JacobiIndex&, const JacobiIndex&) = default;
    friend auto operator<=>(const JacobiIndex& a, const JacobiIndex& b) { return a.kappa_ <=> b.kappa_; }

private:
    std::vector<double> kappa_;
};

/// -m (m + |kappa| + (n - 2)/2)
inline double jacobi_eigenvalue(const JacobiIndex& kappa, int m) {
    const double md = static_cast<double>(m);
    return -md * (md + kappa.total() + (static_cast<double>(kappa.n()) - 2.0) / 2.0);
}

// ------------------------------------------------------------------ Dirichlet

namespace detail {

inline double last_coordinate(std::span<const double> x) {
    double s = 1.0;
    for (double v : x) s -= v;
    return s;
}

inline void check_point(const JacobiIndex& kappa, std::span<const double> x, const char* who) {
    if (x.size() != kappa.variables())
        throw DimensionError(std::string(who) + ": point must have n - 1 coordinates");
}

}  // namespace detail

inline double dirichlet_log_normalizer(const JacobiIndex& kappa) {
    double s = std::lgamma(kappa.total() + 0.5 * static_cast<double>(kappa.n()));
    for (double k : kappa.kappa()) s -= std::lgamma(k + 0.5);
    return s;
}

/// W^(kappa)(x) = Gamma(|kappa| + n/2) / prod Gamma(kappa_j + 1/2) prod_j x_j^{kappa_j - 1/2}.
inline double dirichlet_density(const JacobiIndex& kappa, std::span<const double> x) {
    detail::check_point(kappa, x, "dirichlet_density");
    const double xn = detail::last_coordinate(x);
    for (double v : x)
        if (v < 0.0) throw InvalidArgument("dirichlet_density: point outside the simplex");
    if (xn < -1e-15) throw InvalidArgument("dirichlet_density: point outside the simplex");
    double v = std::exp(dirichlet_log_normalizer(kappa));
    for (std::size_t j = 0; j < x.size(); ++j) v *= std::pow(x[j], kappa[j] - 0.5);
    v *= std::pow(std::max(xn, 0.0), kappa[kappa.n() - 1] - 0.5);
    return v;
}

inline constexpr int kMaxMomentDegree = 2000;

namespace detail {

inline void check_alpha(const JacobiIndex& kappa, std::span<const int> alpha) {
    if (alpha.size() != kappa.variables() && alpha.size() != kappa.n())
        throw DimensionError("dirichlet_moment: exponent must have n - 1 or n entries");
    int total = 0;
    for (int a : alpha) {
        if (a < 0) throw InvalidArgument("dirichlet_moment: exponents must be non-negative");
        total += a;
    }
    if (total > kMaxMomentDegree)
        throw InvalidArgument("dirichlet_moment: total degree " + std::to_string(total) + " exceeds the cap " +
                              std::to_string(kMaxMomentDegree));
}

// prod_j (kappa_j + 1/2)_{alpha_j} / (|kappa| + n/2)_{|alpha|}, interleaving
// numerator and denominator factors so every partial product stays bounded.
template <class Real>
Real moment_product(const JacobiIndex& kappa, std::span<const int> alpha) {
    const Real base = Real(kappa.total()) + Real(static_cast<double>(kappa.n())) / 2;
    Real v(1);
    int d = 0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        const Real a = Real(kappa[j]) + Real(1) / 2;
        for (int i = 0; i < alpha[j]; ++i, ++d) v *= (a + i) / (base + d);
    }
    return v;
}

}  // namespace detail

/// E[x^alpha] under W^(kappa); alpha has n - 1 entries (alpha_n = 0) or n.
inline double dirichlet_moment(const JacobiIndex& kappa, std::span<const int> alpha) {
    detail::check_alpha(kappa, alpha);
    int total = 0;
    for (int a : alpha) total += a;
    if (total <= 300) return detail::moment_product<double>(kappa, alpha);
    const double nd = static_cast<double>(kappa.n());
    double s = std::lgamma(kappa.total() + nd / 2) - std::lgamma(kappa.total() + nd / 2 + total);
    for (std::size_t j = 0; j < alpha.size(); ++j) s += std::lgamma(kappa[j] + 0.5 + alpha[j]) - std::lgamma(kappa[j] + 0.5);
    return std::exp(s);
}

inline HighReal dirichlet_moment_high(const JacobiIndex& kappa, std::span<const int> alpha) {
    detail::check_alpha(kappa, alpha);
    return detail::moment_product<HighReal>(kappa, alpha);
}

// ------------------------------------------------------------------ generator

/// sum_j x_j(1-x_j) d_jj + sum_j [(kappa_j + 1/2) - (|kappa| + n/2) x_j] d_j
///   - sum_{j != l} x_j x_l d_jl, with j, l over the polynomial's variables.
template <class Real>
BasicPolynomial<Real> jacobi_operator(const JacobiIndex& kappa, const BasicPolynomial<Real>& p) {
    const std::size_t v = p.variables();
    const Real drift_scale = Real(kappa.total()) + Real(static_cast<double>(kappa.n())) / 2;
    BasicPolynomial<Real> out(v);
    std::vector<BasicPolynomial<Real>> d1(v);
    for (std::size_t j = 0; j < v; ++j) d1[j] = p.derivative(j);
    for (std::size_t j = 0; j < v; ++j) {
        const auto xj = BasicPolynomial<Real>::variable(v, j);
        const auto one = BasicPolynomial<Real>::constant(v, Real(1));
        out += (xj * (one - xj)) * d1[j].derivative(j);
        const Real c = Real(kappa[j]) + Real(1) / 2;
        out += (BasicPolynomial<Real>::constant(v, c) - drift_scale * xj) * d1[j];
        for (std::size_t l = 0; l < v; ++l) {
            if (l == j) continue;
            out -= (xj * BasicPolynomial<Real>::variable(v, l)) * d1[j].derivative(l);
        }
    }
    return out;
}

/// The Jacobi operator on Sigma_{n-1}; p has n - 1 variables.
template <class Real>
BasicPolynomial<Real> apply_generator(const JacobiIndex& kappa, const BasicPolynomial<Real>& p) {
    if (p.variables() != kappa.variables())
        throw DimensionError("apply_generator: polynomial must have n - 1 variables");
    return jacobi_operator(kappa, p);
}

/// Its lift to T_n; p has n variables.
template <class Real>
BasicPolynomial<Real> apply_lifted_generator(const JacobiIndex& kappa, const BasicPolynomial<Real>& p) {
    if (p.variables() != kappa.n()) throw DimensionError("apply_lifted_generator: polynomial must have n variables");
    return jacobi_operator(kappa, p);
}

// ------------------------------------------------------------------ polynomials

struct SimplexPolynomial {
    Exponent tau;                       ///< exponent of the leading monomial
    Polynomial poly;                    ///< coefficients rounded to double
    BasicPolynomial<HighReal> precise;  ///< working-precision coefficients

    int degree() const { return total_degree(tau); }
    double operator()(std::span<const double> x) const { return static_cast<double>(precise(x)); }
};

/// Orthonormal Jacobi polynomials up to a total degree: Cholesky factor of the
/// exact moment Gram matrix over monomials in graded order, which is graded
/// Gram-Schmidt done in one pass.
class JacobiBasis {
public:
    JacobiBasis(JacobiIndex kappa, int max_degree) : kappa_(std::move(kappa)), max_degree_(max_degree) {
        if (max_degree < 0) throw InvalidArgument("jacobi_polynomials: degree must be non-negative");
        const std::size_t v = kappa_.variables();
        exps_ = graded_exponents(v, max_degree);
        const std::size_t m = exps_.size();

        std::map<Exponent, HighReal> moments;
        auto moment = [&](const Exponent& a, const Exponent& b) -> const HighReal& {
            Exponent s(v);
            for (std::size_t i = 0; i < v; ++i) s[i] = a[i] + b[i];
            auto it = moments.find(s);
            if (it == moments.end()) it = moments.emplace(s, dirichlet_moment_high(kappa_, s)).first;
            return it->second;
        };

        // Cholesky G = L L^T, row by row
        std::vector<std::vector<HighReal>> L(m);
        const HighReal floor = pow(HighReal(10), -(kHighDigits - 40));
        for (std::size_t i = 0; i < m; ++i) {
            L[i].assign(i + 1, HighReal(0));
            for (std::size_t j = 0; j <= i; ++j) {
                HighReal s = moment(exps_[i], exps_[j]);
                for (std::size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
                if (j < i) {
                    L[i][j] = s / L[j][j];
                } else {
                    const HighReal g = moment(exps_[i], exps_[i]);
                    if (!(s > floor * g)) {
                        throw ConditioningError("jacobi_polynomials: moment Gram matrix is numerically singular at degree " +
                                                    std::to_string(total_degree(exps_[i])),
                                                total_degree(exps_[i]) - 1);
                    }
                    L[i][i] = sqrt(s);
                }
            }
        }
        // C = L^{-1}, lower triangular
        coeffs_.assign(m, {});
        for (std::size_t i = 0; i < m; ++i) {
            coeffs_[i].assign(i + 1, HighReal(0));
            coeffs_[i][i] = HighReal(1) / L[i][i];
            for (std::size_t j = 0; j < i; ++j) {
                HighReal s(0);
                for (std::size_t k = j; k < i; ++k) s += L[i][k] * coeffs_[k][j];
                coeffs_[i][j] = -s / L[i][i];
            }
        }
        shell_.resize(m);
        for (std::size_t i = 0; i < m; ++i) shell_[i] = total_degree(exps_[i]);
    }

    const JacobiIndex& kappa() const noexcept { return kappa_; }
    int max_degree() const noexcept { return max_degree_; }
    std::size_t size() const noexcept { return exps_.size(); }
    const Exponent& tau(std::size_t i) const { return exps_[i]; }
    int shell(std::size_t i) const { return shell_[i]; }

    SimplexPolynomial polynomial(std::size_t i) const {
        SimplexPolynomial p;
        p.tau = exps_[i];
        p.precise = BasicPolynomial<HighReal>(kappa_.variables());
        for (std::size_t k = 0; k <= i; ++k) p.precise.add_term(exps_[k], coeffs_[i][k]);
        p.poly = p.precise.convert<double>();
        return p;
    }

    /// P_i(x) for every i, in working precision.
    std::vector<HighReal> evaluate(std::span<const double> x) const {
        const std::size_t v = kappa_.variables();
        if (x.size() != v) throw DimensionError("JacobiBasis: point must have n - 1 coordinates");
        std::vector<std::vector<HighReal>> powers(v);
        for (std::size_t i = 0; i < v; ++i) {
            powers[i].resize(static_cast<std::size_t>(max_degree_) + 1);
            powers[i][0] = 1;
            for (int d = 1; d <= max_degree_; ++d) powers[i][d] = powers[i][d - 1] * HighReal(x[i]);
        }
        const std::size_t m = exps_.size();
        std::vector<HighReal> mono(m);
        for (std::size_t k = 0; k < m; ++k) {
            HighReal t(1);
            for (std::size_t i = 0; i < v; ++i) t *= powers[i][static_cast<std::size_t>(exps_[k][i])];
            mono[k] = t;
        }
        std::vector<HighReal> out(m);
        for (std::size_t i = 0; i < m; ++i) {
            HighReal s(0);
            for (std::size_t k = 0; k <= i; ++k) s += coeffs_[i][k] * mono[k];
            out[i] = s;
        }
        return out;
    }

private:
    JacobiIndex kappa_;
    int max_degree_;
    std::vector<Exponent> exps_;
    std::vector<int> shell_;
    std::vector<std::vector<HighReal>> coeffs_;
};

/// Shared, immutable bases keyed by (kappa, degree).
inline std::shared_ptr<const JacobiBasis> jacobi_basis(const JacobiIndex& kappa, int max_degree) {
    static std::mutex mtx;
    static std::map<std::pair<std::vector<double>, int>, std::shared_ptr<const JacobiBasis>> cache;
    const auto key = std::make_pair(kappa.kappa(), max_degree);
    {
        std::lock_guard<std::mutex> lock(mtx);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto basis = std::make_shared<const JacobiBasis>(kappa, max_degree);
    std::lock_guard<std::mutex> lock(mtx);
    if (cache.size() > 256) cache.clear();
    return cache.emplace(key, basis).first->second;
}

inline std::vector<SimplexPolynomial> jacobi_polynomials(const JacobiIndex& kappa, int max_total_degree) {
    const auto basis = jacobi_basis(kappa, max_total_degree);
    std::vector<SimplexPolynomial> out;
    out.reserve(basis->size());
    for (std::size_t i = 0; i < basis->size(); ++i) out.push_back(basis->polynomial(i));
    return out;
}

/// <p, q> under W^(kappa), computed from exact moments in working precision.
inline HighReal dirichlet_inner(const JacobiIndex& kappa, const BasicPolynomial<HighReal>& p,
                                const BasicPolynomial<HighReal>& q) {
    HighReal s(0);
    const std::size_t v = kappa.variables();
    Exponent e(v);
    for (const auto& [ep, cp] : p.terms()) {
        for (const auto& [eq, cq] : q.terms()) {
            for (std::size_t i = 0; i < v; ++i) e[i] = ep[i] + eq[i];
            s += cp * cq * dirichlet_moment_high(kappa, e);
        }
    }
    return s;
}

// ------------------------------------------------------------------ heat kernel

inline int default_kernel_degree(std::size_t n) { return n <= 2 ? 40 : 20; }

struct HeatKernelValue {
    double value = 0.0;
    double tail_bound = 0.0;  ///< magnitude of the last retained shell
    bool accurate = true;     ///< tail_bound <= kernel_tolerance * max(1, |value|)
};

inline constexpr double kKernelTolerance = 1e-10;

/// q_t(x, y) = sum_tau exp(lambda_|tau| t) P_tau(x) P_tau(y), the transition
/// density of exp(t G_kappa) with respect to W^(kappa).
class JacobiHeatKernel {
public:
    JacobiHeatKernel(const JacobiIndex& kappa, int max_degree) : basis_(jacobi_basis(kappa, max_degree)) {}

    const JacobiBasis& basis() const { return *basis_; }

    HeatKernelValue operator()(double t, std::span<const double> x, std::span<const double> y) const {
        if (!(t > 0.0)) throw InvalidArgument("heat_kernel: t must be positive");
        return combine(t, basis_->evaluate(x), basis_->evaluate(y));
    }

    /// Same sum with P(x) precomputed, for integrating over y.
    HeatKernelValue with_left(double t, const std::vector<HighReal>& px, std::span<const double> y) const {
        return combine(t, px, basis_->evaluate(y));
    }

    std::vector<HighReal> evaluate(std::span<const double> x) const { return basis_->evaluate(x); }

private:
    HeatKernelValue combine(double t, const std::vector<HighReal>& px, const std::vector<HighReal>& py) const {
        const JacobiBasis& b = *basis_;
        const int d = b.max_degree();
        std::vector<HighReal> shell(static_cast<std::size_t>(d) + 1, HighReal(0));
        for (std::size_t i = 0; i < b.size(); ++i) shell[static_cast<std::size_t>(b.shell(i))] += px[i] * py[i];
        HighReal total(0);
        for (int m = 0; m <= d; ++m)
            shell[static_cast<std::size_t>(m)] *= exp(HighReal(jacobi_eigenvalue(b.kappa(), m)) * HighReal(t));
        for (int m = 0; m <= d; ++m) total += shell[static_cast<std::size_t>(m)];
        HeatKernelValue r;
        r.value = static_cast<double>(total);
        r.tail_bound = d > 0 ? std::abs(static_cast<double>(shell[static_cast<std::size_t>(d)])) : 0.0;
        r.accurate = r.tail_bound <= kKernelTolerance * std::max(1.0, std::abs(r.value));
        return r;
    }

    std::shared_ptr<const JacobiBasis> basis_;
};

inline HeatKernelValue heat_kernel(const JacobiIndex& kappa, double t, std::span<const double> x,
                                   std::span<const double> y, int max_degree) {
    detail::check_point(kappa, x, "heat_kernel");
    detail::check_point(kappa, y, "heat_kernel");
    return JacobiHeatKernel(kappa, max_degree)(t, x, y);
}

// ------------------------------------------------------------------ characteristic function

/// u_j^a for j = 1..n, a = 1..3, stored as u[3 j + a - 1].
struct FrequencyVector {
    std::size_t n = 0;
    std::vector<double> u;

    FrequencyVector() = default;
    explicit FrequencyVector(std::size_t n_) : n(n_), u(3 * n_, 0.0) {}
    FrequencyVector(std::size_t n_, std::vector<double> values) : n(n_), u(std::move(values)) {
        if (u.size() != 3 * n) throw DimensionError("FrequencyVector: expected 3n entries");
    }

    double norm2(std::size_t j) const { return u[3 * j] * u[3 * j] + u[3 * j + 1] * u[3 * j + 1] + u[3 * j + 2] * u[3 * j + 2]; }
    double dot(std::size_t j, std::size_t l) const {
        return u[3 * j] * u[3 * l] + u[3 * j + 1] * u[3 * l + 1] + u[3 * j + 2] * u[3 * l + 2];
    }

    /// mu_j = sqrt(1 + |u_j|^2) - 1, written to avoid cancellation.
    double mu(std::size_t j) const {
        const double s = norm2(j);
        return s / (std::sqrt(1.0 + s) + 1.0);
    }
    std::vector<double> mus() const {
        std::vector<double> m(n);
        for (std::size_t j = 0; j < n; ++j) m[j] = mu(j);
        return m;
    }
};

/// -(2n-2) sum mu_j t - 1/2 sum_{j != l} (u_j . u_l + mu_j mu_l) t
inline double cf_exponent(double t, const FrequencyVector& u) {
    const std::size_t n = u.n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s -= (2.0 * static_cast<double>(n) - 2.0) * u.mu(j);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l)
            if (j != l) s -= 0.5 * (u.dot(j, l) + u.mu(j) * u.mu(l));
    return s * t;
}

struct CfValue {
    double value = 0.0;
    double tail_bound = 0.0;
    bool accurate = true;
    int quadrature_order = 0;
};

namespace detail {

inline void check_cf_args(std::size_t n, double t, std::span<const double> lam0, const FrequencyVector& u) {
    if (n < 2) throw DimensionError("characteristic function: n must be at least 2");
    if (!(t > 0.0)) throw InvalidArgument("characteristic function: t must be positive");
    if (lam0.size() != n || u.n != n) throw DimensionError("characteristic function: argument sizes must match n");
    check_simplex(lam0, true, "characteristic function");
}

}  // namespace detail

/// E[exp(i sum u_j^a a_j^a(t)) | lambda(t) = lam].
inline CfValue cf_conditional(std::size_t n, double t, std::span<const double> lam0, std::span<const double> lam,
                              const FrequencyVector& u, int max_degree) {
    detail::check_cf_args(n, t, lam0, u);
    if (lam.size() != n) throw DimensionError("cf_conditional: lambda must have n entries");
    check_simplex(lam, true, "cf_conditional");
    const std::vector<double> mu = u.mus();
    const JacobiIndex base = JacobiIndex::uniform(n, 1.5);
    const JacobiIndex shifted = JacobiIndex::shifted(mu);
    const std::span<const double> x0 = lam0.first(n - 1), x = lam.first(n - 1);

    const HeatKernelValue qs = JacobiHeatKernel(shifted, max_degree)(2.0 * t, x0, x);
    const HeatKernelValue qb = JacobiHeatKernel(base, max_degree)(2.0 * t, x0, x);
    double v = std::exp(cf_exponent(t, u));
    for (std::size_t j = 0; j < n; ++j) v *= std::pow(lam0[j] / lam[j], mu[j] / 2.0);
    v *= qs.value / qb.value;
    v *= dirichlet_density(shifted, x) / dirichlet_density(base, x);
    CfValue r;
    r.value = v;
    r.tail_bound = std::max(qs.tail_bound, qb.tail_bound);
    r.accurate = qs.accurate && qb.accurate;
    return r;
}

/// E[exp(i sum u_j^a a_j^a(t))] started from lam0, integrating the conditional
/// formula against the law of lambda(t).
inline CfValue cf_unconditional(std::size_t n, double t, std::span<const double> lam0, const FrequencyVector& u,
                                int max_degree, const QuadratureOptions& opt = {}) {
    detail::check_cf_args(n, t, lam0, u);
    const std::vector<double> mu = u.mus();
    const JacobiIndex shifted = JacobiIndex::shifted(mu);
    const JacobiHeatKernel kernel(shifted, max_degree);
    const std::vector<HighReal> p0 = kernel.evaluate(lam0.first(n - 1));
    double tail = 0.0;
    bool accurate = true;
    std::vector<double> full(n);
    auto integrand = [&](std::span<const double> x) {
        const double xn = detail::last_coordinate(x);
        if (xn <= 0.0) return 0.0;
        for (double v : x)
            if (v <= 0.0) return 0.0;
        std::copy(x.begin(), x.end(), full.begin());
        full[n - 1] = xn;
        double w = 1.0;
        for (std::size_t j = 0; j < n; ++j) w *= std::pow(lam0[j] / full[j], mu[j] / 2.0);
        const HeatKernelValue q = kernel.with_left(2.0 * t, p0, x);
        tail = std::max(tail, q.tail_bound);
        accurate = accurate && q.accurate;
        return w * q.value * dirichlet_density(shifted, x);
    };
    const QuadratureResult integral = integrate_simplex(n - 1, integrand, opt);
    CfValue r;
    r.value = std::exp(cf_exponent(t, u)) * integral.value;
    r.tail_bound = tail;
    r.accurate = accurate;
    r.quadrature_order = integral.order;
    return r;
}

/// lim_{t -> oo} log E[exp(i u . a(t) / sqrt(t))]
///   = -(n-1) sum_j |u_j|^2 - 1/2 sum_{j != l} u_j . u_l.
inline double cf_clt_log_limit(const FrequencyVector& u) {
    const std::size_t n = u.n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s -= (static_cast<double>(n) - 1.0) * u.norm2(j);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l)
            if (j != l) s -= 0.5 * u.dot(j, l);
    return s;
}

// ------------------------------------------------------------------ covariances

/// Sigma (x) I_3 with Sigma_jj = 2n - 2, Sigma_jl = 1.
inline RealMatrix limit_covariance(std::size_t n) {
    if (n < 2) throw DimensionError("limit_covariance: n must be at least 2");
    RealMatrix m(3 * n, 3 * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t a = 0; a < 3; ++a) m(3 * j + a, 3 * l + a) = j == l ? 2.0 * static_cast<double>(n) - 2.0 : 1.0;
    return m;
}

struct WindingCandidates {
    RealMatrix linear;     ///< Sigma + diag(mu_j I_3), candidate A
    RealMatrix quadratic;  ///< Sigma + diag(mu_j^2 I_3), candidate B
};

inline WindingCandidates winding_covariance(std::size_t n, std::span<const double> mu) {
    if (mu.size() != n) throw DimensionError("winding_covariance: need one weight per component");
    for (double m : mu)
        if (!(m >= 0.0)) throw InvalidArgument("winding_covariance: weights must be non-negative");
    WindingCandidates c{limit_covariance(n), limit_covariance(n)};
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t a = 0; a < 3; ++a) {
            c.linear(3 * j + a, 3 * j + a) += mu[j];
            c.quadratic(3 * j + a, 3 * j + a) += mu[j] * mu[j];
        }
    }
    return c;
}

}  // namespace qflag
