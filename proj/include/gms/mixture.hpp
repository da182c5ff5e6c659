#pragma once

#include "gms/common.hpp"
#include "gms/schedule.hpp"

namespace gms {

// Weighted mixture of axis-aligned Gaussians. A zero-variance row is a Dirac
// component; every formula below takes the v -> 0 limit without branching.
struct MixtureDistribution {
    Vec weights;  // C, positive, sums to 1
    Mat means;    // C x D, row per component
    Mat vars;     // C x D, diagonal variances >= 0

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return static_cast<int>(means.cols()); }

    void validate() const;
};

// Built-in presets: toy1d, gauss8, single_gauss.
MixtureDistribution mixture_preset(const std::string& name);

MixtureDistribution make_mixture(const Vec& weights, const Mat& means, const Mat& vars);

// Conditional raw moments of the injected noise eps = (x_t - alpha_t x_0) / sigma_t
// under q(x_0 | x_t), per dimension: m1 = E[eps], m2 = E[eps*eps], m3 = E[eps^3].
struct NoiseMoments {
    Vec m1, m2, m3;

    int order() const { return m3.size() > 0 ? 3 : (m2.size() > 0 ? 2 : 1); }
};

// i.i.d. draws, one row per sample; deterministic given seed.
Mat sample_data(const MixtureDistribution& dist, int n, std::uint64_t seed);

// x_t = alpha_t x_0 + sigma_t eps with eps ~ N(0, I).
Vec forward_sample(const NoiseSchedule& sched, const Vec& x0, int t, std::uint64_t seed);
Mat forward_sample_batch(const NoiseSchedule& sched, const Mat& x0, int t, std::uint64_t seed);

// Exact posterior q(x_0 | x_t). Component i keeps its conjugate-Gaussian update:
// weight ~ w_i N(x_t; alpha_t m_i, alpha_t^2 v_i + sigma_t^2), mean
// (alpha_t v_i x_t + sigma_t^2 m_i) / (alpha_t^2 v_i + sigma_t^2), variance
// v_i sigma_t^2 / (alpha_t^2 v_i + sigma_t^2).
MixtureDistribution posterior_mixture(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                      const Vec& x_t, int t);

// Exact mixture raw moments of eps under q(x_0 | x_t), up to `order`.
NoiseMoments oracle_noise_moments(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                  const Vec& x_t, int t, int order = 3);

// Exact reverse transition q(x_s | x_t) for mixture data: component i keeps the
// posterior weight, mean A x_t + B mu_i and variance lambda2 + B^2 v_i.
MixtureDistribution true_reverse_kernel(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                        const Vec& x_t, int s, int t);

// One draw from the mixture itself.
Vec sample_mixture(const MixtureDistribution& dist, Rng& rng);

}  // namespace gms
