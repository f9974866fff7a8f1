// Stochastic areas of the flag Brownian motion, sampled directly with the
// library's building blocks: a horizontal Sp(n) Brownian motion projected to
// affine coordinates, with the area form summed along the way.
//
//   sample_area_covariance [n] [t] [paths]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "qflag/flag.hpp"
#include "qflag/parallel.hpp"
#include "qflag/spectral.hpp"
#include "qflag/stats.hpp"

int main(int argc, char** argv) {
    using namespace qflag;
    SimConfig cfg;
    cfg.n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2;
    cfg.t_final = argc > 2 ? std::atof(argv[2]) : 10.0;
    cfg.n_paths = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 2000;
    cfg.dt = 2e-3;
    cfg.seed = 7;

    const std::vector<Quaternion> x0(cfg.n, Quaternion{1.0 / std::sqrt(double(cfg.n)), 0, 0, 0});
    const SpnMatrix u0 = complete_to_symplectic(x0);
    const double scale = 1.0 / std::sqrt(cfg.t_final);

    const auto samples = parallel_map(cfg.n_paths, resolve_workers(0), [&](std::size_t p) {
        FlagState prev = project_affine(u0), next(cfg.n);
        AreaVector total(cfg.n), inc(cfg.n);
        drive_group_bm(cfg, u0.matrix(), p, GroupNoise::horizontal,
                       [&](std::size_t, double, const QMatrix&, const QMatrix& u, std::span<const double>) {
                           project_affine_into(u, next);
                           area_increment_into(prev, next, inc);
                           total += inc;
                           std::swap(prev, next);
                       });
        for (double& v : total.a) v *= scale;
        return total.a;
    });

    const McEstimate cov = cov_estimate(samples);
    const RealMatrix target = limit_covariance(cfg.n);
    std::printf("Cov(a(t)/sqrt t), n = %zu, t = %g, %zu paths (first coordinate of each block)\n", cfg.n, cfg.t_final,
                cfg.n_paths);
    for (std::size_t j = 0; j < cfg.n; ++j) {
        for (std::size_t l = 0; l < cfg.n; ++l)
            std::printf("  %7.3f +- %5.3f (%g)", cov(3 * j, 3 * l), cov.se(3 * j, 3 * l), target(3 * j, 3 * l));
        std::printf("\n");
    }
}
