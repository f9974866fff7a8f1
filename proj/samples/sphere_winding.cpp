// Brownian motion on S^7 with a canonical variation metric and the
// quaternionic windings of its two components.

#include <cstdio>
#include <vector>

#include "qflag/winding.hpp"

int main() {
    using namespace qflag;
    SimConfig cfg;
    cfg.n = 2;
    cfg.t_final = 2.0;
    cfg.dt = 1e-3;
    cfg.seed = 42;
    const CanonicalVariation mu(std::vector<double>{2.0, 1.0});
    const auto x0 = balanced_start(2);

    const SpherePath path = sample_variation_bm(cfg, mu, x0);
    for (std::size_t k = 0; k < path.states.size(); k += 400) {
        const auto& x = path.states[k];
        std::printf("t = %.2f  |x1|^2 = %.4f  |x2|^2 = %.4f\n", path.times[k], norm2(x[0]), norm2(x[1]));
    }
    const AreaVector eta = accumulate_winding(path);
    for (std::size_t j = 0; j < 2; ++j) {
        const ImagQuaternion v = eta[j];
        std::printf("eta_%zu(t) = %.4f i %+.4f j %+.4f k\n", j + 1, v.x, v.y, v.z);
    }
}
