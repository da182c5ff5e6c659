#pragma once

#include "gms/common.hpp"

#include <vector>

namespace gms {

enum class ScheduleKind { linear, cosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind kind);

// Discrete variance-preserving forward process q(x_t | x_0) = N(alpha_t x_0,
// sigma_t^2 I). `alpha` is the amplitude (not its square): alpha_0 = 1,
// sigma_0 = 0 and alpha_t^2 + sigma_t^2 = 1 at every step.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::linear;
    int T = 0;
    Vec alpha;  // size T+1, strictly decreasing
    Vec sigma;  // size T+1, strictly increasing

    double log_snr(int t) const {
        return std::log(alpha[t] * alpha[t] / (sigma[t] * sigma[t]));
    }
};

// Coefficients of the forward transition q(x_t | x_s) = N(a_ts x_s, beta_ts I)
// and of the conditional posterior q(x_s | x_t, x_0) = N(A x_t + B x_0,
// lambda2 I), for 0 <= s <= t <= T.
struct TransitionCoeffs {
    int s = 0;
    int t = 0;
    double a_ts = 1.0;     // alpha_t / alpha_s
    double beta_ts = 0.0;  // sigma_t^2 - a_ts^2 sigma_s^2
    double lambda2 = 0.0;  // sigma_s^2 beta_ts / sigma_t^2
    double A = 1.0;        // a_ts sigma_s^2 / sigma_t^2
    double B = 0.0;        // alpha_s beta_ts / sigma_t^2
    // endpoint schedule values, cached for the moment maps
    double alpha_s = 1.0, sigma_s = 0.0;
    double alpha_t = 1.0, sigma_t = 0.0;
};

// Strictly decreasing sampling timesteps [t_K, ..., t_1, 0]; t_K is the
// starting step (T for unconditional runs, t0 for guided ones).
struct Trajectory {
    std::vector<int> steps;

    int K() const { return static_cast<int>(steps.size()) - 1; }
    int start() const { return steps.front(); }
};

NoiseSchedule make_schedule(ScheduleKind kind, int T);

TransitionCoeffs coeffs(const NoiseSchedule& sched, int s, int t);

// K+1 steps evenly spaced over [0, start] in index space, rounded half-up,
// collisions resolved by decrementing.
Trajectory build_trajectory(int start, int K);

}  // namespace gms
