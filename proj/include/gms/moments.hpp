#pragma once

#include "gms/common.hpp"
#include "gms/mixture.hpp"
#include "gms/schedule.hpp"

namespace gms {

// First three raw diagonal moments of the reverse transition kernel q(x_s | x_t),
// per dimension. M2 is stored raw; the central variance is M2 - M1*M1.
struct MomentTriple {
    Vec M1, M2, M3;
};

// Mean of x_s under q(x_s | x_t): (x_t - beta_ts / sigma_t * m1) / a_ts.
template <class D1, class D2>
Vec reverse_m1(const TransitionCoeffs& co, const Eigen::ArrayBase<D1>& x_t,
               const Eigen::ArrayBase<D2>& m1) {
    if (co.s == co.t) return x_t;
    return (x_t - (co.beta_ts / co.sigma_t) * m1) / co.a_ts;
}

// Central diagonal variance by the total-variance identity:
// lambda2 + beta_ts^2 / (sigma_t^2 a_ts^2) * (m2 - m1 * m1).
template <class D1, class D2>
Vec reverse_variance(const TransitionCoeffs& co, const Eigen::ArrayBase<D1>& m1,
                     const Eigen::ArrayBase<D2>& m2) {
    if (co.s == co.t) return Vec::Zero(m1.size());
    const double st2 = co.sigma_t * co.sigma_t;
    const double scale = co.beta_ts * co.beta_ts / (st2 * co.a_ts * co.a_ts);
    Vec var = co.lambda2 + scale * (m2 - m1 * m1);
    for (Eigen::Index i = 0; i < var.size(); ++i) {
        if (var[i] < 0.0) {
            if (var[i] < -1e-10)
                throw NumericalError("reverse_variance: negative variance at dimension " +
                                     std::to_string(i));
            var[i] = 0.0;
        }
    }
    return var;
}

// Diagonal raw posterior moments of x_0 given x_t, from noise moments via
// x_0 = (x_t - sigma_t eps) / alpha_t.
inline void posterior_x0_moments(const TransitionCoeffs& co, const Vec& x_t,
                                 const NoiseMoments& nm, Vec& mu1, Vec& mu2, Vec& mu3) {
    const double at = co.alpha_t;
    const double st = co.sigma_t;
    mu1 = (x_t - st * nm.m1) / at;
    mu2 = (x_t * x_t - 2.0 * st * x_t * nm.m1 + st * st * nm.m2) / (at * at);
    mu3 = (x_t * x_t * x_t - 3.0 * st * x_t * x_t * nm.m1 + 3.0 * st * st * x_t * nm.m2 -
           st * st * st * nm.m3) /
          (at * at * at);
}

// Third raw diagonal moment via the conditional-Gaussian identity
// E[(A x_t + B x_0)^3] + 3 lambda2 E[A x_t + B x_0], expanded in the
// posterior raw moments of x_0.
inline Vec reverse_m3(const TransitionCoeffs& co, const Vec& x_t, const NoiseMoments& nm) {
    if (nm.order() < 3) throw std::invalid_argument("reverse_m3: needs order-3 noise moments");
    if (co.s == co.t) return x_t * x_t * x_t;
    Vec mu1, mu2, mu3;
    posterior_x0_moments(co, x_t, nm, mu1, mu2, mu3);
    const double A = co.A, B = co.B;
    return A * A * A * x_t * x_t * x_t + 3.0 * A * A * B * x_t * x_t * mu1 +
           3.0 * A * B * B * x_t * mu2 + B * B * B * mu3 +
           3.0 * co.lambda2 * (A * x_t + B * mu1);
}

inline Vec reverse_m2(const TransitionCoeffs& co, const Vec& x_t, const NoiseMoments& nm) {
    if (nm.order() < 2) throw std::invalid_argument("reverse_m2: needs order-2 noise moments");
    const Vec m1 = reverse_m1(co, x_t, nm.m1);
    return reverse_variance(co, nm.m1, nm.m2) + m1 * m1;
}

inline MomentTriple reverse_moments(const TransitionCoeffs& co, const Vec& x_t,
                                    const NoiseMoments& nm) {
    MomentTriple triple;
    triple.M1 = reverse_m1(co, x_t, nm.m1);
    triple.M2 = reverse_variance(co, nm.m1, nm.m2) + triple.M1 * triple.M1;
    triple.M3 = reverse_m3(co, x_t, nm);
    return triple;
}

// Third moment a Gaussian with the same mean and variance would have:
// M_G = M1^3 + 3 M1 * var.
template <class D1, class D2>
Vec gaussian_implied_m3(const Eigen::ArrayBase<D1>& m1, const Eigen::ArrayBase<D2>& var) {
    return m1 * m1 * m1 + 3.0 * m1 * var;
}

// Per-dimension non-Gaussianity diagnostic log((M_G - M3)^2 + floor); the
// floor keeps the log finite when the kernel is exactly Gaussian.
inline Vec moment_deviation(const MomentTriple& triple) {
    constexpr double kFloor = 1e-20;
    const Vec var = triple.M2 - triple.M1 * triple.M1;
    const Vec gap = gaussian_implied_m3(triple.M1, var) - triple.M3;
    return (gap * gap + kFloor).log();
}

// Raw diagonal moments of a mixture: sum_i w_i (mu, mu^2 + v, mu^3 + 3 mu v).
inline MomentTriple mixture_moments(const MixtureDistribution& dist) {
    const int d = dist.dim();
    MomentTriple triple{Vec::Zero(d), Vec::Zero(d), Vec::Zero(d)};
    for (int i = 0; i < dist.components(); ++i) {
        const double w = dist.weights[i];
        const Vec mu = dist.means.row(i).transpose().array();
        const Vec v = dist.vars.row(i).transpose().array();
        triple.M1 += w * mu;
        triple.M2 += w * (mu * mu + v);
        triple.M3 += w * (mu * mu * mu + 3.0 * mu * v);
    }
    return triple;
}

}  // namespace gms
