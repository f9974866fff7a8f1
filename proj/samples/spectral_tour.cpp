// Jacobi polynomials on the simplex, their eigenvalues, and the
// characteristic function of the stochastic areas at a few frequencies.

#include <cstdio>
#include <vector>

#include "qflag/spectral.hpp"

int main() {
    using namespace qflag;
    const JacobiIndex kappa = JacobiIndex::uniform(2, 1.5);
    const auto polys = jacobi_polynomials(kappa, 3);
    for (const auto& p : polys) {
        std::printf("P_%d  eigenvalue %g  coefficients:", p.degree(), jacobi_eigenvalue(kappa, p.degree()));
        for (const auto& [e, c] : p.poly.terms()) std::printf("  %+.6f x^%d", c, e[0]);
        std::printf("\n");
    }

    const std::vector<double> lam0{0.5, 0.5};
    for (double s : {0.0, 0.5, 1.0, 1.5}) {
        const FrequencyVector u(2, {s, 0, 0, 0, 0, 0});
        const CfValue cf = cf_unconditional(2, 0.5, lam0, u, 40);
        std::printf("t = 0.5, u = (%.1f i, 0): E exp(i u.a) = %.10f  (tail %.1e)\n", s, cf.value, cf.tail_bound);
    }
    std::printf("Sigma for n = 3:\n");
    const RealMatrix sigma = limit_covariance(3);
    for (std::size_t i = 0; i < 9; i += 3) {
        for (std::size_t j = 0; j < 9; j += 3) std::printf(" %g", sigma(i, j));
        std::printf("\n");
    }
}
