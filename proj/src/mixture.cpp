#include "gms/mixture.hpp"

#include <cmath>

namespace gms {

void MixtureDistribution::validate() const {
    const int c = components();
    if (c < 1) throw std::invalid_argument("mixture: needs at least one component");
    if (means.rows() != c || vars.rows() != c)
        throw std::invalid_argument("mixture: weights/means/vars component counts differ");
    if (means.cols() != vars.cols())
        throw std::invalid_argument("mixture: means/vars dimensions differ");
    if ((weights <= 0.0).any()) throw std::invalid_argument("mixture: weights must be positive");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("mixture: weights must sum to 1");
    if ((vars.array() < 0.0).any()) throw std::invalid_argument("mixture: variances must be >= 0");
}

MixtureDistribution make_mixture(const Vec& weights, const Mat& means, const Mat& vars) {
    MixtureDistribution dist{weights, means, vars};
    dist.validate();
    return dist;
}

MixtureDistribution mixture_preset(const std::string& name) {
    if (name == "toy1d") {
        Vec w(2);
        w << 0.4, 0.6;
        Mat m(2, 1), v(2, 1);
        m << -0.4, 0.3;
        v << 0.12 * 0.12, 0.05 * 0.05;
        return make_mixture(w, m, v);
    }
    if (name == "gauss8") {
        // 8 modes equally spaced on a radius-2 circle, per-dimension variance 0.01^2
        const int c = 8;
        Vec w = Vec::Constant(c, 1.0 / c);
        Mat m(c, 2), v(c, 2);
        for (int i = 0; i < c; ++i) {
            const double angle = 2.0 * M_PI * i / c;
            m(i, 0) = 2.0 * std::cos(angle);
            m(i, 1) = 2.0 * std::sin(angle);
        }
        v.setConstant(0.01 * 0.01);
        return make_mixture(w, m, v);
    }
    if (name == "single_gauss") {
        Vec w(1);
        w << 1.0;
        Mat m(1, 1), v(1, 1);
        m << 0.0;
        v << 1.0;
        return make_mixture(w, m, v);
    }
    throw std::invalid_argument("unknown mixture preset '" + name +
                                "' (expected toy1d, gauss8 or single_gauss)");
}

Vec sample_mixture(const MixtureDistribution& dist, Rng& rng) {
    const int i = rng.categorical(dist.weights);
    const int d = dist.dim();
    Vec x(d);
    for (int k = 0; k < d; ++k)
        x[k] = dist.means(i, k) + std::sqrt(dist.vars(i, k)) * rng.normal();
    return x;
}

Mat sample_data(const MixtureDistribution& dist, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_data: n must be >= 1");
    dist.validate();
    Mat out(n, dist.dim());
    Rng rng(seed);
    for (int r = 0; r < n; ++r) out.row(r) = sample_mixture(dist, rng).transpose();
    return out;
}

Vec forward_sample(const NoiseSchedule& sched, const Vec& x0, int t, std::uint64_t seed) {
    if (t < 0 || t > sched.T) throw std::invalid_argument("forward_sample: t out of range");
    Rng rng(seed);
    return sched.alpha[t] * x0 + sched.sigma[t] * rng.normal_vec(x0.size());
}

Mat forward_sample_batch(const NoiseSchedule& sched, const Mat& x0, int t, std::uint64_t seed) {
    if (t < 0 || t > sched.T) throw std::invalid_argument("forward_sample: t out of range");
    Mat out(x0.rows(), x0.cols());
    Rng rng(seed);
    for (Eigen::Index r = 0; r < x0.rows(); ++r)
        for (Eigen::Index c = 0; c < x0.cols(); ++c)
            out(r, c) = sched.alpha[t] * x0(r, c) + sched.sigma[t] * rng.normal();
    return out;
}

MixtureDistribution posterior_mixture(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                      const Vec& x_t, int t) {
    if (t < 1 || t > sched.T)
        throw std::invalid_argument("posterior_mixture: requires 1 <= t <= T");
    if (x_t.size() != dist.dim()) throw std::invalid_argument("posterior_mixture: dimension mismatch");

    const double at = sched.alpha[t];
    const double st2 = sched.sigma[t] * sched.sigma[t];
    const int c = dist.components();
    const int d = dist.dim();

    MixtureDistribution post;
    post.weights.resize(c);
    post.means.resize(c, d);
    post.vars.resize(c, d);

    Vec logw(c);
    for (int i = 0; i < c; ++i) {
        const Vec v = dist.vars.row(i).transpose().array();
        const Vec m = dist.means.row(i).transpose().array();
        const Vec denom = at * at * v + st2;  // > 0 since t >= 1
        const Vec resid = x_t - at * m;
        logw[i] = std::log(dist.weights[i]) -
                  0.5 * (denom.log() + resid * resid / denom + std::log(2.0 * M_PI)).sum();
        post.means.row(i) = ((at * v * x_t + st2 * m) / denom).transpose();
        post.vars.row(i) = (v * st2 / denom).transpose();
    }
    const double lmax = logw.maxCoeff();
    post.weights = (logw - lmax).exp();
    post.weights /= post.weights.sum();
    return post;
}

NoiseMoments oracle_noise_moments(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                  const Vec& x_t, int t, int order) {
    if (order < 1 || order > 3) throw std::invalid_argument("oracle_noise_moments: order must be 1..3");
    const MixtureDistribution post = posterior_mixture(dist, sched, x_t, t);

    const double at = sched.alpha[t];
    const double st = sched.sigma[t];
    const int c = post.components();
    const int d = post.dim();

    NoiseMoments nm;
    nm.m1 = Vec::Zero(d);
    if (order >= 2) nm.m2 = Vec::Zero(d);
    if (order >= 3) nm.m3 = Vec::Zero(d);

    // eps | component i is Gaussian with mean e_i and variance s2_i
    for (int i = 0; i < c; ++i) {
        const double w = post.weights[i];
        const Vec mu = post.means.row(i).transpose().array();
        const Vec e = (x_t - at * mu) / st;
        const Vec s2 = (at * at / (st * st)) * post.vars.row(i).transpose().array();
        nm.m1 += w * e;
        if (order >= 2) nm.m2 += w * (e * e + s2);
        if (order >= 3) nm.m3 += w * (e * e * e + 3.0 * e * s2);
    }
    return nm;
}

MixtureDistribution true_reverse_kernel(const MixtureDistribution& dist, const NoiseSchedule& sched,
                                        const Vec& x_t, int s, int t) {
    if (s < 0 || s >= t) throw std::invalid_argument("true_reverse_kernel: requires 0 <= s < t");
    const MixtureDistribution post = posterior_mixture(dist, sched, x_t, t);
    const TransitionCoeffs co = coeffs(sched, s, t);

    MixtureDistribution kernel;
    kernel.weights = post.weights;
    kernel.means.resize(post.components(), post.dim());
    kernel.vars.resize(post.components(), post.dim());
    for (int i = 0; i < post.components(); ++i) {
        kernel.means.row(i) =
            (co.A * x_t + co.B * post.means.row(i).transpose().array()).transpose();
        kernel.vars.row(i) =
            (co.lambda2 + co.B * co.B * post.vars.row(i).transpose().array()).transpose();
    }
    return kernel;
}

}  // namespace gms
