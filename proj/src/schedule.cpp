#include "gms/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace gms {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "cosine") return ScheduleKind::cosine;
    throw std::invalid_argument("unknown schedule kind '" + s + "' (expected linear or cosine)");
}

std::string to_string(ScheduleKind kind) {
    return kind == ScheduleKind::linear ? "linear" : "cosine";
}

namespace {

// alpha_bar_t = prod_{i<=t} (1 - beta_i) from per-step variances beta_i.
NoiseSchedule from_step_betas(ScheduleKind kind, int T, const Vec& beta) {
    NoiseSchedule sched;
    sched.kind = kind;
    sched.T = T;
    sched.alpha.resize(T + 1);
    sched.sigma.resize(T + 1);
    double alpha_bar = 1.0;
    sched.alpha[0] = 1.0;
    sched.sigma[0] = 0.0;
    for (int t = 1; t <= T; ++t) {
        alpha_bar *= 1.0 - beta[t - 1];
        sched.alpha[t] = std::sqrt(alpha_bar);
        sched.sigma[t] = std::sqrt(1.0 - alpha_bar);
    }
    return sched;
}

Vec linear_betas(int T) {
    const double beta_lo = 1e-4;
    const double beta_hi = 0.02;
    Vec beta(T);
    if (T == 1) {
        beta[0] = beta_lo;
        return beta;
    }
    for (int i = 0; i < T; ++i)
        beta[i] = beta_lo + (beta_hi - beta_lo) * static_cast<double>(i) / (T - 1);
    return beta;
}

Vec cosine_betas(int T) {
    const double offset = 0.008;
    auto f = [&](double t) {
        const double x = (t / T + offset) / (1.0 + offset) * M_PI / 2.0;
        return std::cos(x) * std::cos(x);
    };
    const double f0 = f(0.0);
    Vec beta(T);
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double bar = f(static_cast<double>(t)) / f0;
        beta[t - 1] = std::min(1.0 - bar / prev, 0.999);
        prev *= 1.0 - beta[t - 1];
    }
    return beta;
}

}  // namespace

NoiseSchedule make_schedule(ScheduleKind kind, int T) {
    if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
    return from_step_betas(kind, T,
                           kind == ScheduleKind::linear ? linear_betas(T) : cosine_betas(T));
}

TransitionCoeffs coeffs(const NoiseSchedule& sched, int s, int t) {
    if (s > t) throw std::invalid_argument("coeffs: requires s <= t");
    if (s < 0 || t > sched.T) throw std::invalid_argument("coeffs: timestep out of range");
    TransitionCoeffs co;
    co.s = s;
    co.t = t;
    co.alpha_s = sched.alpha[s];
    co.sigma_s = sched.sigma[s];
    co.alpha_t = sched.alpha[t];
    co.sigma_t = sched.sigma[t];
    if (s == t) return co;  // identity transition

    const double as = sched.alpha[s], at = sched.alpha[t];
    const double ss2 = sched.sigma[s] * sched.sigma[s];
    const double st2 = sched.sigma[t] * sched.sigma[t];
    co.a_ts = at / as;
    co.beta_ts = st2 - co.a_ts * co.a_ts * ss2;
    co.lambda2 = ss2 * co.beta_ts / st2;
    co.A = co.a_ts * ss2 / st2;
    co.B = as * co.beta_ts / st2;
    return co;
}

Trajectory build_trajectory(int start, int K) {
    if (start < 1) throw std::invalid_argument("build_trajectory: start must be >= 1");
    if (K < 1 || K > start) throw std::invalid_argument("build_trajectory: requires 1 <= K <= start");
    Trajectory traj;
    traj.steps.resize(K + 1);
    for (int j = 0; j <= K; ++j) {
        const double raw = static_cast<double>(start) * (K - j) / K;
        traj.steps[j] = static_cast<int>(std::floor(raw + 0.5));  // round half-up
    }
    traj.steps.front() = start;
    traj.steps.back() = 0;
    for (int j = 1; j <= K; ++j) {
        if (traj.steps[j] >= traj.steps[j - 1]) traj.steps[j] = traj.steps[j - 1] - 1;
    }
    return traj;
}

}  // namespace gms
