#pragma once

// Sparse multivariate polynomials with real coefficients, just enough calculus
// for differential operators with polynomial coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "qflag/error.hpp"

namespace qflag {

using Exponent = std::vector<int>;

inline int total_degree(const Exponent& e) {
    int s = 0;
    for (int v : e) s += v;
    return s;
}

/// All exponents in `vars` variables with total degree <= max_degree, in graded
/// lexicographic order: by total degree, then lexicographically descending
/// (x1^2 before x1 x2 before x2^2).
inline std::vector<Exponent> graded_exponents(std::size_t vars, int max_degree) {
    std::vector<Exponent> out;
    Exponent e(vars, 0);
    for (int d = 0; d <= max_degree; ++d) {
        if (vars == 0) {
            if (d == 0) out.push_back(e);
            continue;
        }
        // enumerate compositions of d into `vars` parts, first part descending
        std::vector<Exponent> shell;
        auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
            if (pos + 1 == vars) {
                e[pos] = left;
                shell.push_back(e);
                return;
            }
            for (int v = left; v >= 0; --v) {
                e[pos] = v;
                self(self, pos + 1, left - v);
            }
        };
        rec(rec, 0, d);
        out.insert(out.end(), shell.begin(), shell.end());
    }
    return out;
}

template <class Real>
class BasicPolynomial {
public:
    using Terms = std::map<Exponent, Real>;

    BasicPolynomial() = default;
    explicit BasicPolynomial(std::size_t vars) : vars_(vars) {}

    static BasicPolynomial constant(std::size_t vars, Real c) {
        BasicPolynomial p(vars);
        if (c != Real(0)) p.terms_[Exponent(vars, 0)] = c;
        return p;
    }
    static BasicPolynomial monomial(Exponent e, Real c = Real(1)) {
        BasicPolynomial p(e.size());
        if (c != Real(0)) p.terms_[std::move(e)] = c;
        return p;
    }
    /// x_i
    static BasicPolynomial variable(std::size_t vars, std::size_t i) {
        Exponent e(vars, 0);
        e[i] = 1;
        return monomial(std::move(e));
    }

    std::size_t variables() const noexcept { return vars_; }
    const Terms& terms() const noexcept { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    Real coefficient(const Exponent& e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? Real(0) : it->second;
    }

    void add_term(const Exponent& e, const Real& c) {
        if (e.size() != vars_) throw DimensionError("Polynomial: exponent length mismatch");
        if (c == Real(0)) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == Real(0)) terms_.erase(it);
        }
    }

    int degree() const {
        int d = -1;
        for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
        return d;
    }

    BasicPolynomial& operator+=(const BasicPolynomial& o) {
        check_same(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    BasicPolynomial& operator-=(const BasicPolynomial& o) {
        check_same(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }
    BasicPolynomial& operator*=(const Real& s) {
        if (s == Real(0)) {
            terms_.clear();
            return *this;
        }
        for (auto& [e, c] : terms_) c *= s;
        return *this;
    }

    friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
    friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
    friend BasicPolynomial operator*(const Real& s, BasicPolynomial a) { return a *= s; }
    friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
        a.check_same(b);
        BasicPolynomial out(a.vars_);
        Exponent e(a.vars_);
        for (const auto& [ea, ca] : a.terms_) {
            for (const auto& [eb, cb] : b.terms_) {
                for (std::size_t i = 0; i < a.vars_; ++i) e[i] = ea[i] + eb[i];
                out.add_term(e, ca * cb);
            }
        }
        return out;
    }

    /// d/dx_i
    BasicPolynomial derivative(std::size_t i) const {
        BasicPolynomial out(vars_);
        for (const auto& [e, c] : terms_) {
            if (e[i] == 0) continue;
            Exponent d = e;
            --d[i];
            out.add_term(d, c * Real(e[i]));
        }
        return out;
    }

    template <class X>
    Real operator()(std::span<const X> x) const {
        if (x.size() != vars_) throw DimensionError("Polynomial: evaluation point has wrong dimension");
        Real s(0);
        for (const auto& [e, c] : terms_) {
            Real m = c;
            for (std::size_t i = 0; i < vars_; ++i)
                for (int k = 0; k < e[i]; ++k) m *= Real(x[i]);
            s += m;
        }
        return s;
    }

    /// Substitute x_last = 1 - sum_{i < last} x_i; the result has one variable fewer.
    BasicPolynomial restrict_to_simplex() const {
        if (vars_ == 0) throw DimensionError("restrict_to_simplex: no variables");
        const std::size_t m = vars_ - 1;
        BasicPolynomial one_minus = constant(m, Real(1));
        for (std::size_t i = 0; i < m; ++i) one_minus -= variable(m, i);
        std::vector<BasicPolynomial> powers{constant(m, Real(1))};
        BasicPolynomial out(m);
        for (const auto& [e, c] : terms_) {
            while (static_cast<int>(powers.size()) <= e[m]) powers.push_back(powers.back() * one_minus);
            Exponent head(e.begin(), e.end() - 1);
            out += monomial(head, c) * powers[static_cast<std::size_t>(e[m])];
        }
        return out;
    }

    template <class Other>
    BasicPolynomial<Other> convert() const {
        BasicPolynomial<Other> out(vars_);
        for (const auto& [e, c] : terms_) out.add_term(e, static_cast<Other>(c));
        return out;
    }

    /// max |coefficient|
    Real max_abs_coefficient() const {
        Real m(0);
        for (const auto& [e, c] : terms_) {
            using std::abs;
            m = std::max<Real>(m, abs(c));
        }
        return m;
    }

private:
    void check_same(const BasicPolynomial& o) const {
        if (o.vars_ != vars_) throw DimensionError("Polynomial: variable count mismatch");
    }

    std::size_t vars_ = 0;
    Terms terms_;
};

using Polynomial = BasicPolynomial<double>;

/// max_e |a_e - b_e|
template <class Real>
Real max_coefficient_difference(const BasicPolynomial<Real>& a, const BasicPolynomial<Real>& b) {
    return (a - b).max_abs_coefficient();
}

}  // namespace qflag
