#pragma once

// Test-only Monte Carlo oracles. These deliberately avoid the library's
// posterior / kernel / moment-assembly routines: everything is built from the
// forward-process definition (alpha, sigma arrays) plus Bayes' rule, so they
// can stand as independent ground truth for those code paths.

#include "gms/common.hpp"
#include "gms/mixture.hpp"
#include "gms/schedule.hpp"

#include <cmath>
#include <vector>

namespace gms::test {

struct WeightedMoments {
    Vec m1, m2, m3;  // self-normalized raw moments, per dimension
};

// Stratified importance-sampling draws of x_0 given x_t: x_0 proposed from the
// prior mixture component by component, weighted by the forward likelihood
// q(x_t | x_0).
struct PosteriorDraws {
    Mat x0;       // n x D
    Vec log_w;    // n, un-normalized
};

inline PosteriorDraws posterior_draws(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                      const Vec& x_t, int t, int n, std::uint64_t seed) {
    const int c = dist.components();
    const int d = dist.dim();
    const double at = sched.alpha[t];
    const double st2 = sched.sigma[t] * sched.sigma[t];

    PosteriorDraws draws;
    draws.x0.resize(n, d);
    draws.log_w.resize(n);
    Rng rng(seed);

    // allocate draw counts proportional to the prior weights
    std::vector<int> counts(c);
    int assigned = 0;
    for (int i = 0; i < c; ++i) {
        counts[i] = std::max(1, static_cast<int>(std::floor(dist.weights[i] * n + 0.5)));
        assigned += counts[i];
    }
    counts[c - 1] += n - assigned;
    if (counts[c - 1] < 1) throw std::invalid_argument("posterior_draws: n too small");

    int row = 0;
    for (int i = 0; i < c; ++i) {
        // stratified weight: prior mass over draws in this stratum
        const double log_prior = std::log(dist.weights[i]) - std::log(double(counts[i]));
        for (int j = 0; j < counts[i]; ++j, ++row) {
            double log_like = 0.0;
            for (int k = 0; k < d; ++k) {
                const double x0 = dist.means(i, k) + std::sqrt(dist.vars(i, k)) * rng.normal();
                draws.x0(row, k) = x0;
                const double resid = x_t[k] - at * x0;
                log_like += -0.5 * (resid * resid / st2 + std::log(2.0 * M_PI * st2));
            }
            draws.log_w[row] = log_prior + log_like;
        }
    }
    return draws;
}

inline WeightedMoments weighted_moments(const Mat& values, const Vec& log_w) {
    const Vec w = (log_w - log_w.maxCoeff()).exp();
    const double norm = w.sum();
    const int d = static_cast<int>(values.cols());
    WeightedMoments out{Vec::Zero(d), Vec::Zero(d), Vec::Zero(d)};
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        const Vec v = values.row(r).transpose().array();
        out.m1 += w[r] * v;
        out.m2 += w[r] * v * v;
        out.m3 += w[r] * v * v * v;
    }
    out.m1 /= norm;
    out.m2 /= norm;
    out.m3 /= norm;
    return out;
}

// Raw conditional moments of eps = (x_t - alpha_t x_0) / sigma_t by importance
// sampling from the prior.
inline WeightedMoments mc_noise_moments(const MixtureDistribution& dist,
                                        const NoiseSchedule& sched, const Vec& x_t, int t, int n,
                                        std::uint64_t seed) {
    const PosteriorDraws draws = posterior_draws(dist, sched, x_t, t, n, seed);
    Mat eps(draws.x0.rows(), draws.x0.cols());
    for (Eigen::Index r = 0; r < eps.rows(); ++r)
        eps.row(r) = ((x_t - sched.alpha[t] * draws.x0.row(r).transpose().array()) /
                      sched.sigma[t])
                         .matrix()
                         .transpose();
    return weighted_moments(eps, draws.log_w);
}

// Posterior raw moments of x_0 itself.
inline WeightedMoments mc_x0_moments(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                     const Vec& x_t, int t, int n, std::uint64_t seed) {
    const PosteriorDraws draws = posterior_draws(dist, sched, x_t, t, n, seed);
    return weighted_moments(draws.x0, draws.log_w);
}

// Two-stage oracle for q(x_s | x_t): importance-sample x_0, then draw x_s from
// the bridge q(x_s | x_t, x_0). The bridge parameters are derived here in
// precision form (prior N(alpha_s x_0, sigma_s^2) updated by the likelihood
// N(x_t; a_ts x_s, beta_ts)), a different algebraic route than the library's.
inline WeightedMoments mc_reverse_moments(const MixtureDistribution& dist,
                                          const NoiseSchedule& sched, const Vec& x_t, int s, int t,
                                          int n, std::uint64_t seed) {
    const PosteriorDraws draws = posterior_draws(dist, sched, x_t, t, n, mix_seed(seed, 1));
    const double as = sched.alpha[s], at = sched.alpha[t];
    const double ss2 = sched.sigma[s] * sched.sigma[s];
    const double a_ts = at / as;
    const double beta_ts = sched.sigma[t] * sched.sigma[t] - a_ts * a_ts * ss2;

    Rng rng(mix_seed(seed, 2));
    Mat x_s(draws.x0.rows(), draws.x0.cols());
    for (Eigen::Index r = 0; r < x_s.rows(); ++r) {
        for (Eigen::Index k = 0; k < x_s.cols(); ++k) {
            double mean, var;
            if (ss2 == 0.0) {  // s = 0: the bridge collapses onto x_0
                mean = draws.x0(r, k);
                var = 0.0;
            } else {
                const double prec = 1.0 / ss2 + a_ts * a_ts / beta_ts;
                var = 1.0 / prec;
                mean = var * (as * draws.x0(r, k) / ss2 + a_ts * x_t[k] / beta_ts);
            }
            x_s(r, k) = mean + std::sqrt(var) * rng.normal();
        }
    }
    return weighted_moments(x_s, draws.log_w);
}

// Unweighted sample statistics with standard errors.
struct SampleStats {
    Vec mean, var;
    Vec se_mean, se_var;
};

inline SampleStats sample_stats(const Mat& x) {
    const double n = static_cast<double>(x.rows());
    SampleStats st;
    st.mean = x.colwise().mean().transpose().array();
    st.var.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        st.var[c] = (x.col(c).array() - st.mean[c]).square().sum() / (n - 1.0);
    st.se_mean = (st.var / n).sqrt();
    st.se_var = st.var * std::sqrt(2.0 / (n - 1.0));
    return st;
}

// Biased-estimator maximum mean discrepancy with a Gaussian kernel.
inline double mmd(const Mat& x, const Mat& y, double bandwidth) {
    const auto kernel_mean = [&](const Mat& a, const Mat& b) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < b.rows(); ++j) {
                const double d2 = (a.row(i) - b.row(j)).squaredNorm();
                acc += std::exp(-d2 / (2.0 * bandwidth * bandwidth));
            }
        return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
    };
    return std::sqrt(std::max(
        kernel_mean(x, x) + kernel_mean(y, y) - 2.0 * kernel_mean(x, y), 0.0));
}

}  // namespace gms::test
