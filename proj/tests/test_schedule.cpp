#include "gms/schedule.hpp"

#include <doctest.h>

#include <cmath>

using namespace gms;

TEST_CASE("linear schedule satisfies construction invariants") {
    const NoiseSchedule sched = make_schedule(ScheduleKind::linear, 1000);
    CHECK(sched.alpha[0] == 1.0);
    CHECK(sched.sigma[0] == 0.0);
    for (int t = 1; t <= sched.T; ++t) {
        CHECK(sched.alpha[t] < sched.alpha[t - 1]);
        CHECK(sched.sigma[t] > sched.sigma[t - 1]);
        CHECK(sched.alpha[t] * sched.alpha[t] + sched.sigma[t] * sched.sigma[t] ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int t = 2; t <= sched.T; ++t) CHECK(sched.log_snr(t) < sched.log_snr(t - 1));
}

TEST_CASE("cosine schedule at T = 4000 keeps a monotone log-SNR") {
    const NoiseSchedule sched = make_schedule(ScheduleKind::cosine, 4000);
    CHECK(sched.alpha[0] == 1.0);
    for (int t = 2; t <= sched.T; ++t) CHECK(sched.log_snr(t) < sched.log_snr(t - 1));
    for (int t = 1; t <= sched.T; ++t)
        CHECK(sched.alpha[t] * sched.alpha[t] + sched.sigma[t] * sched.sigma[t] ==
              doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear alpha matches the per-step variance product") {
    // independent brute-force product of 1 - beta_i
    const int T = 10;
    double alpha_bar = 1.0;
    for (int i = 1; i <= T; ++i) {
        const double beta = 1e-4 + (0.02 - 1e-4) * (i - 1) / (T - 1);
        alpha_bar *= 1.0 - beta;
    }
    const NoiseSchedule sched = make_schedule(ScheduleKind::linear, T);
    CHECK(sched.alpha[T] * sched.alpha[T] == doctest::Approx(alpha_bar).epsilon(1e-12));
}

TEST_CASE("make_schedule rejects T < 1") {
    CHECK_THROWS_AS(make_schedule(ScheduleKind::linear, 0), std::invalid_argument);
}

TEST_CASE("log-SNR is strictly decreasing for both kinds across sizes") {
    for (const ScheduleKind kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
        for (const int T : {10, 100, 1000, 4000}) {
            const NoiseSchedule sched = make_schedule(kind, T);
            for (int t = 2; t <= T; ++t) CHECK(sched.log_snr(t) < sched.log_snr(t - 1));
        }
    }
}

TEST_CASE("transition coefficients: identity step") {
    const NoiseSchedule sched = make_schedule(ScheduleKind::linear, 100);
    const TransitionCoeffs co = coeffs(sched, 40, 40);
    CHECK(co.a_ts == 1.0);
    CHECK(co.beta_ts == 0.0);
    CHECK(co.lambda2 == 0.0);
    CHECK(co.A == 1.0);
    CHECK(co.B == 0.0);
}

TEST_CASE("transition coefficients: terminal step puts all weight on x0") {
    const NoiseSchedule sched = make_schedule(ScheduleKind::linear, 100);
    const TransitionCoeffs co = coeffs(sched, 0, 60);
    CHECK(co.lambda2 == 0.0);
    CHECK(co.A == 0.0);
    CHECK(co.B == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("transition coefficients satisfy the variance identity") {
    const NoiseSchedule sched = make_schedule(ScheduleKind::linear, 1000);
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int t = rng.uniform_int(2, 1000);
        const int s = rng.uniform_int(1, t - 1);
        const TransitionCoeffs co = coeffs(sched, s, t);
        const double lhs = sched.sigma[t] * sched.sigma[t];
        const double rhs =
            co.a_ts * co.a_ts * sched.sigma[s] * sched.sigma[s] + co.beta_ts;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(co.beta_ts >= 0.0);
        CHECK(co.lambda2 >= 0.0);
    }
    CHECK_THROWS_AS(coeffs(sched, 10, 5), std::invalid_argument);
}

TEST_CASE("forward transitions compose") {
    for (const ScheduleKind kind : {ScheduleKind::linear, ScheduleKind::cosine}) {
        const NoiseSchedule sched = make_schedule(kind, 500);
        Rng rng(kind == ScheduleKind::linear ? 3 : 4);
        for (int trial = 0; trial < 60; ++trial) {
            const int t = rng.uniform_int(3, 500);
            const int u = rng.uniform_int(2, t - 1);
            const int s = rng.uniform_int(1, u - 1);
            const TransitionCoeffs ts = coeffs(sched, s, t);
            const TransitionCoeffs tu = coeffs(sched, u, t);
            const TransitionCoeffs us = coeffs(sched, s, u);
            CHECK(ts.a_ts == doctest::Approx(tu.a_ts * us.a_ts).epsilon(1e-10));
            CHECK(ts.beta_ts ==
                  doctest::Approx(tu.beta_ts + tu.a_ts * tu.a_ts * us.beta_ts).epsilon(1e-10));
        }
    }
}

TEST_CASE("even trajectory endpoints and spacing") {
    SUBCASE("full chain") {
        const Trajectory traj = build_trajectory(1000, 1000);
        CHECK(traj.K() == 1000);
        for (int j = 0; j <= 1000; ++j) CHECK(traj.steps[j] == 1000 - j);
    }
    SUBCASE("single step") {
        const Trajectory traj = build_trajectory(1000, 1);
        CHECK(traj.steps == std::vector<int>{1000, 0});
    }
    SUBCASE("K = 10 matches the rounding rule") {
        // recompute from the stated rule: round-half-up of T * j / K
        const Trajectory traj = build_trajectory(1000, 10);
        std::vector<int> expected;
        for (int j = 10; j >= 0; --j)
            expected.push_back(static_cast<int>(std::floor(1000.0 * j / 10 + 0.5)));
        CHECK(traj.steps == expected);
    }
    SUBCASE("strictly decreasing for awkward splits") {
        for (const int K : {3, 7, 11, 77, 99}) {
            const Trajectory traj = build_trajectory(100, K);
            CHECK(traj.steps.front() == 100);
            CHECK(traj.steps.back() == 0);
            for (std::size_t j = 1; j < traj.steps.size(); ++j)
                CHECK(traj.steps[j] < traj.steps[j - 1]);
        }
    }
    SUBCASE("rejects K > T") {
        CHECK_THROWS_AS(build_trajectory(10, 11), std::invalid_argument);
    }
}
