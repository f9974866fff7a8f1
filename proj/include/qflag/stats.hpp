#pragma once

// Monte Carlo estimators with standard errors, and the comparison rows every
// experiment reports.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "qflag/error.hpp"
#include "qflag/flag.hpp"
#include "qflag/quadrature.hpp"
#include "qflag/real_matrix.hpp"
#include "qflag/spectral.hpp"

namespace qflag {

inline constexpr double kDefaultZThreshold = 3.0;

/// Pairwise summation with a fixed split (halves, leaves of 8 summed left to right).
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t h = x.size() / 2;
    return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

/// Value and standard error; scalar or row-major matrix shaped.
struct McEstimate {
    std::vector<double> value;
    std::vector<double> std_error;
    std::size_t rows = 1, cols = 1;
    std::size_t n_samples = 0;
    std::size_t excluded = 0;

    double scalar() const { return value.at(0); }
    double se() const { return std_error.at(0); }
    double operator()(std::size_t i, std::size_t j) const { return value[i * cols + j]; }
    double se(std::size_t i, std::size_t j) const { return std_error[i * cols + j]; }
};

/// Sample mean and its standard error sd / sqrt(N).
inline McEstimate mean_estimate(std::span<const double> x) {
    if (x.size() < 2) throw SampleSizeError("mean_estimate: need at least two samples");
    const double n = static_cast<double>(x.size());
    const double m = pairwise_sum(x) / n;
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - m) * (x[i] - m);
    const double var = pairwise_sum(d) / (n - 1.0);
    McEstimate e;
    e.value = {m};
    e.std_error = {std::sqrt(var / n)};
    e.n_samples = x.size();
    return e;
}

// ------------------------------------------------------------------ characteristic function

struct CfEstimate {
    McEstimate real;  ///< mean of cos(u . a)
    McEstimate imag;  ///< mean of sin(u . a); zero in law by a -> -a symmetry
};

inline constexpr std::size_t kMinCfSamples = 100;

inline CfEstimate empirical_cf(std::span<const AreaVector> samples, const FrequencyVector& u) {
    if (samples.size() < kMinCfSamples)
        throw SampleSizeError("empirical_cf: need at least " + std::to_string(kMinCfSamples) + " samples");
    std::vector<double> c(samples.size()), s(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const AreaVector& a = samples[i];
        if (a.n != u.n) throw DimensionError("empirical_cf: sample and frequency sizes differ");
        double phase = 0.0;
        for (std::size_t p = 0; p < a.a.size(); ++p) phase += u.u[p] * a.a[p];
        c[i] = std::cos(phase);
        s[i] = std::sin(phase);
    }
    return {mean_estimate(c), mean_estimate(s)};
}

// ------------------------------------------------------------------ covariance

/// Unbiased sample covariance with per-entry jackknife standard errors, using
/// the closed form of the leave-one-out estimates
///   S_{-i} = (A - N/(N-1) d_i d_i^T) / (N - 2),   A = sum_k d_k d_k^T.
inline McEstimate cov_estimate(std::span<const std::vector<double>> samples) {
    const std::size_t N = samples.size();
    if (N < 3) throw SampleSizeError("cov_estimate: need at least three samples");
    const std::size_t d = samples.front().size();
    for (const auto& s : samples)
        if (s.size() != d) throw DimensionError("cov_estimate: samples have different lengths");
    const double nd = static_cast<double>(N);

    std::vector<double> mean(d), col(N);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t i = 0; i < N; ++i) col[i] = samples[i][a];
        mean[a] = pairwise_sum(col) / nd;
    }
    McEstimate e;
    e.rows = e.cols = d;
    e.value.assign(d * d, 0.0);
    e.std_error.assign(d * d, 0.0);
    e.n_samples = N;
    std::vector<double> p(N);
    const double c = nd / (nd - 1.0);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            for (std::size_t i = 0; i < N; ++i) p[i] = (samples[i][a] - mean[a]) * (samples[i][b] - mean[b]);
            const double A = pairwise_sum(p);
            const double pbar = A / nd;
            for (std::size_t i = 0; i < N; ++i) col[i] = (p[i] - pbar) * (p[i] - pbar);
            const double ss = pairwise_sum(col);
            const double var = (nd - 1.0) / nd * (c / (nd - 2.0)) * (c / (nd - 2.0)) * ss;
            e.value[a * d + b] = e.value[b * d + a] = A / (nd - 1.0);
            e.std_error[a * d + b] = e.std_error[b * d + a] = std::sqrt(var);
        }
    }
    return e;
}

// ------------------------------------------------------------------ ergodic averages

inline constexpr double kErgodicMinTime = 20.0;

/// Time averages of (1 - lambda_j) / lambda_j over an equally spaced path
/// (samples after time 0, spacing dt), with batch-means standard errors.
/// Samples with lambda_j <= 0 are skipped and counted in `excluded`.
inline McEstimate ergodic_check(std::span<const std::vector<double>> lambda_path, double dt, std::size_t batches = 20) {
    if (lambda_path.empty()) throw SampleSizeError("ergodic_check: empty path");
    const double t = dt * static_cast<double>(lambda_path.size());
    if (t < kErgodicMinTime * (1.0 - 1e-9))
        throw SampleSizeError("ergodic_check: path shorter than t = " + std::to_string(kErgodicMinTime));
    if (batches < 2 || batches > lambda_path.size()) throw InvalidArgument("ergodic_check: bad batch count");
    const std::size_t n = lambda_path.front().size();
    const std::size_t len = lambda_path.size() / batches;
    McEstimate e;
    e.rows = 1;
    e.cols = n;
    e.value.assign(n, 0.0);
    e.std_error.assign(n, 0.0);
    e.n_samples = len * batches;
    std::vector<double> bm(batches), vals;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t b = 0; b < batches; ++b) {
            vals.clear();
            for (std::size_t k = b * len; k < (b + 1) * len; ++k) {
                const double l = lambda_path[k][j];
                if (!(l > 0.0)) {
                    ++e.excluded;
                    continue;
                }
                vals.push_back((1.0 - l) / l);
            }
            bm[b] = vals.empty() ? 0.0 : pairwise_sum(vals) / static_cast<double>(vals.size());
        }
        const McEstimate m = mean_estimate(bm);
        e.value[j] = m.scalar();
        e.std_error[j] = m.se();
    }
    return e;
}

/// Integral of ((1 - l)/l) (2n-1)(2n-2) l (1 - l)^{2n-3} over [0, 1] by quadrature.
inline double stationary_ratio_integral(std::size_t n) {
    if (n < 2) throw DimensionError("stationary_ratio_integral: n must be at least 2");
    const double a = 2.0 * static_cast<double>(n) - 1.0, b = 2.0 * static_cast<double>(n) - 2.0;
    auto f = [&](std::span<const double> x) {
        const double l = x[0];
        return (1.0 - l) * a * b * std::pow(1.0 - l, 2.0 * static_cast<double>(n) - 3.0);
    };
    return integrate_simplex(1, f, {1e-13, 1e-300, 4, 1024}).value;
}

// ------------------------------------------------------------------ comparisons

/// One line of a report: estimate vs target with its tolerance.
struct CheckRow {
    std::string quantity;
    std::string index;
    double value = 0.0;
    double se = 0.0;
    double target = 0.0;
    double z = 0.0;
    double bias_budget = 0.0;
    bool pass = false;
};

/// Passes when |value - target| <= z_threshold * se + bias_budget. Rows with
/// se = 0 are deterministic tolerance checks and carry z = 0.
inline CheckRow compare(std::string quantity, std::string index, double value, double se, double target,
                        double z_threshold = kDefaultZThreshold, double bias_budget = 0.0) {
    CheckRow r;
    r.quantity = std::move(quantity);
    r.index = std::move(index);
    r.value = value;
    r.se = se;
    r.target = target;
    r.bias_budget = bias_budget;
    const double diff = value - target;
    r.z = se > 0.0 ? diff / se : 0.0;
    r.pass = std::abs(diff) <= z_threshold * se + bias_budget;
    return r;
}

/// Two independent estimates: z = (a - b) / sqrt(se_a^2 + se_b^2).
inline CheckRow compare_two(std::string quantity, std::string index, double a, double se_a, double b, double se_b,
                            double z_threshold = kDefaultZThreshold, double bias_budget = 0.0) {
    return compare(std::move(quantity), std::move(index), a, std::sqrt(se_a * se_a + se_b * se_b), b, z_threshold,
                   bias_budget);
}

/// Mean-ODE comparison for the radial process.
struct MeanOdeReport {
    std::vector<CheckRow> rows;
    double max_abs_z = 0.0;
    bool pass = true;
};

/// 1/n + (lambda_j(0) - 1/n) e^{-4 n t}
inline double radial_mean(std::size_t n, double lam0, double t) {
    const double inv = 1.0 / static_cast<double>(n);
    return inv + (lam0 - inv) * std::exp(-4.0 * static_cast<double>(n) * t);
}

inline constexpr std::size_t kMinOdePaths = 1000;

/// samples[p][g][j] = lambda_j of path p at times[g].
inline MeanOdeReport mean_ode_check(std::span<const double> times,
                                    std::span<const std::vector<std::vector<double>>> samples,
                                    std::span<const double> lam0, double bias_budget,
                                    double z_threshold = kDefaultZThreshold) {
    if (samples.size() < kMinOdePaths)
        throw SampleSizeError("mean_ode_check: need at least " + std::to_string(kMinOdePaths) + " paths");
    const std::size_t n = lam0.size();
    MeanOdeReport rep;
    std::vector<double> col(samples.size());
    for (std::size_t g = 0; g < times.size(); ++g) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t p = 0; p < samples.size(); ++p) col[p] = samples[p][g][j];
            const McEstimate m = mean_estimate(col);
            char label[64];
            std::snprintf(label, sizeof label, "t=%.10g,j=%zu", times[g], j + 1);
            CheckRow r = compare("mean_lambda", label,
                                 m.scalar(), m.se(), radial_mean(n, lam0[j], times[g]), z_threshold, bias_budget);
            rep.max_abs_z = std::max(rep.max_abs_z, std::abs(r.z));
            rep.pass = rep.pass && r.pass;
            rep.rows.push_back(std::move(r));
        }
    }
    return rep;
}

/// Entrywise comparison of a matrix estimate with a target.
inline std::vector<CheckRow> compare_matrix(const std::string& quantity, const McEstimate& est, const RealMatrix& target,
                                            double z_threshold = kDefaultZThreshold, double bias_budget = 0.0) {
    if (est.rows != target.rows || est.cols != target.cols) throw DimensionError("compare_matrix: shape mismatch");
    std::vector<CheckRow> rows;
    for (std::size_t i = 0; i < est.rows; ++i)
        for (std::size_t j = 0; j < est.cols; ++j)
            rows.push_back(compare(quantity, std::to_string(i) + "," + std::to_string(j), est(i, j), est.se(i, j),
                                   target(i, j), z_threshold, bias_budget));
    return rows;
}

inline bool all_pass(std::span<const CheckRow> rows) {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return true;
}

inline double max_abs_z(std::span<const CheckRow> rows) {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.z));
    return m;
}

}  // namespace qflag
