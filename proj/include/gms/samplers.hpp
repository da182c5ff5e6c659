#pragma once

#include "gms/common.hpp"
#include "gms/gmmfit.hpp"
#include "gms/moments.hpp"
#include "gms/provider.hpp"
#include "gms/schedule.hpp"

#include <optional>
#include <vector>

namespace gms {

enum class SamplerKind { ddpm_beta, ddpm_beta_tilde, analytic_dpm, sn_ddpm, gms, ddim };

SamplerKind sampler_kind_from_string(const std::string& s);
std::string to_string(SamplerKind kind);

// Minimum noise-moment order the provider must supply.
int required_order(SamplerKind kind);

enum class DdpmVariance { beta, beta_tilde };
enum class GaussianOptimalMode { scalar_analytic, diagonal_sn };

// Per-transition optimal scalar variances (the precomputed expectation term of
// the optimal isotropic covariance), estimated once per (schedule, trajectory,
// data) and reused across runs.
struct GammaTable {
    std::vector<int> steps;        // trajectory it was built for
    std::vector<double> variance;  // one entry per transition steps[k] -> steps[k+1]

    double at(int s, int t) const;
};

GammaTable estimate_gamma_table(const NoiseSchedule& sched, const Trajectory& traj,
                                const MixtureDistribution& data, const MomentProvider& provider,
                                int n_draws, std::uint64_t seed);

struct SamplerConfig {
    OptimizerConfig gmm;           // per-step fit settings (gms only)
    bool last_step_noise = false;  // inject noise on the final transition to 0
    bool clip = false;             // clamp the implied x0 estimate
    double clip_lo = -1.0, clip_hi = 1.0;
    std::optional<GammaTable> gamma;  // required by analytic_dpm
};

// Aggregate of the per-dimension fits behind one gms step.
struct StepFitSummary {
    int t = 0, s = 0;
    double mean_objective = 0.0;
    double degenerate_fraction = 0.0;
    double infeasible_fraction = 0.0;
    double mean_mu_gap = 0.0;  // mean |mu1 - mu2|
};

struct SampleRun {
    SamplerKind kind = SamplerKind::ddpm_beta_tilde;
    Trajectory trajectory;
    std::uint64_t seed = 0;
    Mat samples;  // N x D, final batch
    std::vector<double> step_seconds;
    std::vector<StepFitSummary> fit_summaries;  // gms only
};

// ---- single transitions (batch x_t, one row per element) ---------------------

Mat step_ddpm(const TransitionCoeffs& co, const Mat& x_t, const MomentProvider& provider,
              DdpmVariance variance, std::uint64_t seed, const SamplerConfig& cfg = {});

Mat step_gaussian_optimal(const TransitionCoeffs& co, const Mat& x_t,
                          const MomentProvider& provider, GaussianOptimalMode mode,
                          std::uint64_t seed, const SamplerConfig& cfg = {});

struct GmsStepResult {
    Mat x_s;
    std::vector<FitReport> fits;  // one per batch element
};
GmsStepResult step_gms(const TransitionCoeffs& co, const Mat& x_t,
                       const MomentProvider& provider, const OptimizerConfig& fitcfg,
                       std::uint64_t seed, const SamplerConfig& cfg = {});

// Deterministic update x_s = alpha_s x0_hat + sigma_s eps_hat.
Mat step_ddim(const NoiseSchedule& sched, const Mat& x_t, const MomentProvider& provider,
              int s, int t, const SamplerConfig& cfg = {});

// ---- full runs ----------------------------------------------------------------

SampleRun run_sampler(SamplerKind kind, const NoiseSchedule& sched, const Trajectory& traj,
                      const MomentProvider& provider, int n, std::uint64_t seed,
                      const SamplerConfig& cfg = {});

struct SdeditRun {
    SampleRun run;
    Mat guide;
};

// Perturb the guide batch to time t0 with forward noise, then run the reverse
// sampler along `traj` (which must start at t0 and end at 0).
SdeditRun run_sdedit(const Mat& guide, int t0, SamplerKind kind, const NoiseSchedule& sched,
                     const Trajectory& traj, const MomentProvider& provider, std::uint64_t seed,
                     const SamplerConfig& cfg = {});

}  // namespace gms
