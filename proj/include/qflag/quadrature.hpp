#pragma once

// Tensor Gauss-Legendre quadrature on the cube and, through the Duffy map, on
// the simplex { x >= 0, sum x <= 1 }, with order doubling.

#include <cmath>
#include <span>
#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "qflag/error.hpp"

namespace qflag {

/// Gauss-Legendre nodes and weights on [0, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre_unit(int order) {
    if (order < 1) throw InvalidArgument("gauss_legendre_unit: order must be positive");
    static std::mutex mtx;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    if (auto it = cache.find(order); it != cache.end()) return it->second;

    // boost returns the non-negative zeros of P_order, ascending
    const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(order);
    std::vector<double> x, w;
    for (double z : zeros) {
        const double d = boost::math::legendre_p_prime(order, z);
        const double wz = 2.0 / ((1.0 - z * z) * d * d);
        if (z == 0.0) {
            x.push_back(0.0);
            w.push_back(wz);
        } else {
            x.push_back(z);
            w.push_back(wz);
            x.push_back(-z);
            w.push_back(wz);
        }
    }
    GaussRule r;
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.nodes.push_back(0.5 * (x[i] + 1.0));
        r.weights.push_back(0.5 * w[i]);
    }
    cache.emplace(order, r);
    return r;
}

struct QuadratureResult {
    double value = 0.0;
    double change = 0.0;  ///< |I(order) - I(order / 2)|, the error proxy
    int order = 0;
};

struct QuadratureOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-300;
    int start_order = 8;
    int max_order = 1024;
};

/// One tensor-rule evaluation of f on the simplex of dimension `dim` via
/// x_k = s_k prod_{i<k}(1 - s_i), Jacobian prod_k prod_{i<k}(1 - s_i).
template <class F>
double simplex_rule(std::size_t dim, F& f, int order) {
    const GaussRule g = gauss_legendre_unit(order);
    const std::size_t m = g.nodes.size();
    std::vector<std::size_t> idx(dim, 0);
    std::vector<double> x(dim);
    double total = 0.0;
    if (dim == 0) return f(std::span<const double>(x));
    while (true) {
        double rest = 1.0, jac = 1.0, wt = 1.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double s = g.nodes[idx[k]];
            x[k] = rest * s;
            jac *= rest;
            rest *= 1.0 - s;
            wt *= g.weights[idx[k]];
        }
        total += wt * jac * f(std::span<const double>(x));
        std::size_t k = 0;
        while (k < dim && ++idx[k] == m) idx[k++] = 0;
        if (k == dim) break;
    }
    return total;
}

/// Integral of f over the simplex, doubling the order until the relative
/// change drops below rel_tol.
template <class F>
QuadratureResult integrate_simplex(std::size_t dim, F&& f, const QuadratureOptions& opt = {}) {
    int order = opt.start_order;
    double prev = simplex_rule(dim, f, order);
    while (true) {
        order *= 2;
        if (order > opt.max_order)
            throw QuadratureError("integrate_simplex: no convergence up to order " + std::to_string(opt.max_order));
        const double cur = simplex_rule(dim, f, order);
        const double change = std::abs(cur - prev);
        if (change <= opt.rel_tol * std::abs(cur) || change <= opt.abs_tol) return {cur, change, order};
        prev = cur;
    }
}

}  // namespace qflag
