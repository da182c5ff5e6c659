#include "gms/samplers.hpp"

#include <chrono>
#include <cmath>

namespace gms {

SamplerKind sampler_kind_from_string(const std::string& s) {
    if (s == "ddpm-beta") return SamplerKind::ddpm_beta;
    if (s == "ddpm-beta-tilde") return SamplerKind::ddpm_beta_tilde;
    if (s == "analytic") return SamplerKind::analytic_dpm;
    if (s == "sn") return SamplerKind::sn_ddpm;
    if (s == "gms") return SamplerKind::gms;
    if (s == "ddim") return SamplerKind::ddim;
    throw std::invalid_argument(
        "unknown solver '" + s +
        "' (expected ddpm-beta, ddpm-beta-tilde, analytic, sn, gms or ddim)");
}

std::string to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::ddpm_beta: return "ddpm-beta";
        case SamplerKind::ddpm_beta_tilde: return "ddpm-beta-tilde";
        case SamplerKind::analytic_dpm: return "analytic";
        case SamplerKind::sn_ddpm: return "sn";
        case SamplerKind::gms: return "gms";
        case SamplerKind::ddim: return "ddim";
    }
    return "?";
}

int required_order(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::gms: return 3;
        case SamplerKind::sn_ddpm: return 2;
        default: return 1;
    }
}

namespace {

enum class StepVariance { beta, beta_tilde, scalar_analytic, diagonal_sn };

std::vector<Rng> element_rngs(std::uint64_t seed, Eigen::Index n) {
    std::vector<Rng> rngs;
    rngs.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) rngs.emplace_back(mix_seed(seed, i));
    return rngs;
}

// Optional clamp of the implied x0 estimate, folded back into m1.
void apply_clip(const SamplerConfig& cfg, double alpha_t, double sigma_t, const Mat& x_t,
                Mat& m1) {
    if (!cfg.clip) return;
    for (Eigen::Index r = 0; r < m1.rows(); ++r)
        for (Eigen::Index c = 0; c < m1.cols(); ++c) {
            const double x0 = (x_t(r, c) - sigma_t * m1(r, c)) / alpha_t;
            const double clipped = std::min(std::max(x0, cfg.clip_lo), cfg.clip_hi);
            if (clipped != x0) m1(r, c) = (x_t(r, c) - alpha_t * clipped) / sigma_t;
        }
}

Mat gaussian_step(const TransitionCoeffs& co, const Mat& x_t, const MomentProvider& provider,
                  StepVariance variance, const SamplerConfig& cfg, std::vector<Rng>& rngs) {
    const int order = variance == StepVariance::diagonal_sn ? 2 : 1;
    Mat m1, m2, m3;
    provider.moments(x_t, co.t, order, m1, m2, m3);
    apply_clip(cfg, co.alpha_t, co.sigma_t, x_t, m1);

    const bool noiseless = co.s == 0 && !cfg.last_step_noise;
    Mat x_s(x_t.rows(), x_t.cols());
    parallel_for(x_t.rows(), [&](Eigen::Index r) {
        const Vec mean =
            reverse_m1(co, x_t.row(r).transpose().array(), m1.row(r).transpose().array());
        Vec var;
        switch (variance) {
            case StepVariance::beta: var = Vec::Constant(x_t.cols(), co.beta_ts); break;
            case StepVariance::beta_tilde: var = Vec::Constant(x_t.cols(), co.lambda2); break;
            case StepVariance::scalar_analytic:
                var = Vec::Constant(x_t.cols(), cfg.gamma->at(co.s, co.t));
                break;
            case StepVariance::diagonal_sn:
                var = reverse_variance(co, m1.row(r).transpose().array(),
                                       m2.row(r).transpose().array());
                break;
        }
        if (noiseless) {
            x_s.row(r) = mean.matrix().transpose();
        } else {
            const Vec z = rngs[r].normal_vec(x_t.cols());
            x_s.row(r) = (mean + var.sqrt() * z).matrix().transpose();
        }
    });
    return x_s;
}

GmsStepResult gms_step(const TransitionCoeffs& co, const Mat& x_t, const MomentProvider& provider,
                       const OptimizerConfig& fitcfg, const SamplerConfig& cfg,
                       std::vector<Rng>& rngs) {
    if (provider.order() < 3)
        throw std::invalid_argument("gms step: provider must supply order-3 moments");
    Mat m1, m2, m3;
    provider.moments(x_t, co.t, 3, m1, m2, m3);
    apply_clip(cfg, co.alpha_t, co.sigma_t, x_t, m1);

    const bool noiseless = co.s == 0 && !cfg.last_step_noise;
    GmsStepResult result;
    result.x_s.resize(x_t.rows(), x_t.cols());
    result.fits.resize(x_t.rows());

    parallel_for(x_t.rows(), [&](Eigen::Index r) {
        NoiseMoments nm;
        nm.m1 = m1.row(r).transpose().array();
        nm.m2 = m2.row(r).transpose().array();
        nm.m3 = m3.row(r).transpose().array();
        const MomentTriple triple = reverse_moments(co, x_t.row(r).transpose().array(), nm);
        FitReport fit = fit_gradient(triple, FitInit::closed_form, fitcfg);

        const bool first = rngs[r].uniform() < GmKernelParams::kWeight1;
        const Vec& mu = first ? fit.params.mu1 : fit.params.mu2;
        if (noiseless) {
            result.x_s.row(r) = mu.matrix().transpose();
        } else {
            const Vec z = rngs[r].normal_vec(x_t.cols());
            result.x_s.row(r) = (mu + fit.params.var.sqrt() * z).matrix().transpose();
        }
        result.fits[r] = std::move(fit);
    });
    return result;
}

StepFitSummary summarize_fits(int t, int s, const std::vector<FitReport>& fits) {
    StepFitSummary sum;
    sum.t = t;
    sum.s = s;
    if (fits.empty()) return sum;
    double dims = 0, degen = 0, infeas = 0, gap = 0;
    for (const FitReport& fit : fits) {
        dims += static_cast<double>(fit.params.mu1.size());
        degen += static_cast<double>(fit.degenerate_mask.count());
        infeas += static_cast<double>(fit.infeasible_mask.count());
        gap += (fit.params.mu1 - fit.params.mu2).abs().sum();
        sum.mean_objective += fit.objective_value;
    }
    sum.mean_objective /= static_cast<double>(fits.size());
    sum.degenerate_fraction = degen / dims;
    sum.infeasible_fraction = infeas / dims;
    sum.mean_mu_gap = gap / dims;
    return sum;
}

// Advances `run.samples` along the trajectory, recording timings and,
// for gms, per-step fit summaries.
void advance_chain(SamplerKind kind, const NoiseSchedule& sched, const MomentProvider& provider,
                   const SamplerConfig& cfg, std::vector<Rng>& rngs, SampleRun& run) {
    const Trajectory& traj = run.trajectory;
    for (int k = 0; k < traj.K(); ++k) {
        const int t = traj.steps[k];
        const int s = traj.steps[k + 1];
        const TransitionCoeffs co = coeffs(sched, s, t);
        const auto begin = std::chrono::steady_clock::now();
        switch (kind) {
            case SamplerKind::ddpm_beta:
                run.samples = gaussian_step(co, run.samples, provider, StepVariance::beta, cfg, rngs);
                break;
            case SamplerKind::ddpm_beta_tilde:
                run.samples =
                    gaussian_step(co, run.samples, provider, StepVariance::beta_tilde, cfg, rngs);
                break;
            case SamplerKind::analytic_dpm:
                run.samples = gaussian_step(co, run.samples, provider, StepVariance::scalar_analytic,
                                            cfg, rngs);
                break;
            case SamplerKind::sn_ddpm:
                run.samples =
                    gaussian_step(co, run.samples, provider, StepVariance::diagonal_sn, cfg, rngs);
                break;
            case SamplerKind::gms: {
                GmsStepResult res = gms_step(co, run.samples, provider, cfg.gmm, cfg, rngs);
                run.samples = std::move(res.x_s);
                run.fit_summaries.push_back(summarize_fits(t, s, res.fits));
                break;
            }
            case SamplerKind::ddim:
                run.samples = step_ddim(sched, run.samples, provider, s, t, cfg);
                break;
        }
        if (!run.samples.allFinite())
            throw NumericalError("sampler: non-finite sample at step t=" + std::to_string(t));
        run.step_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count());
    }
}

void check_run_preconditions(SamplerKind kind, const MomentProvider& provider,
                             const SamplerConfig& cfg) {
    if (provider.order() < required_order(kind))
        throw std::invalid_argument("sampler: provider order too low for " + to_string(kind));
    if (kind == SamplerKind::analytic_dpm && !cfg.gamma)
        throw std::invalid_argument("sampler: analytic solver requires a precomputed gamma table");
}

}  // namespace

double GammaTable::at(int s, int t) const {
    for (std::size_t k = 0; k + 1 < steps.size(); ++k)
        if (steps[k] == t && steps[k + 1] == s) return variance[k];
    throw std::invalid_argument("gamma table: no entry for transition t=" + std::to_string(t) +
                                " -> s=" + std::to_string(s));
}

GammaTable estimate_gamma_table(const NoiseSchedule& sched, const Trajectory& traj,
                                const MixtureDistribution& data, const MomentProvider& provider,
                                int n_draws, std::uint64_t seed) {
    if (n_draws < 2) throw std::invalid_argument("estimate_gamma_table: n_draws must be >= 2");
    GammaTable table;
    table.steps = traj.steps;
    table.variance.resize(traj.K());

    const Mat x0 = sample_data(data, n_draws, mix_seed(seed, 0x6a));
    const double d = static_cast<double>(data.dim());
    for (int k = 0; k < traj.K(); ++k) {
        const int t = traj.steps[k];
        const int s = traj.steps[k + 1];
        const Mat x_t = forward_sample_batch(sched, x0, t, mix_seed(seed, 1000 + t));
        Mat m1, m2, m3;
        provider.moments(x_t, t, 1, m1, m2, m3);
        const double mean_sq = m1.array().square().rowwise().sum().mean() / d;

        const TransitionCoeffs co = coeffs(sched, s, t);
        const double st2 = co.sigma_t * co.sigma_t;
        const double at2 = co.alpha_t * co.alpha_t;
        table.variance[k] = co.lambda2 + co.B * co.B * (st2 / at2) * std::max(1.0 - mean_sq, 0.0);
    }
    return table;
}

Mat step_ddpm(const TransitionCoeffs& co, const Mat& x_t, const MomentProvider& provider,
              DdpmVariance variance, std::uint64_t seed, const SamplerConfig& cfg) {
    auto rngs = element_rngs(seed, x_t.rows());
    return gaussian_step(co, x_t, provider,
                         variance == DdpmVariance::beta ? StepVariance::beta
                                                        : StepVariance::beta_tilde,
                         cfg, rngs);
}

Mat step_gaussian_optimal(const TransitionCoeffs& co, const Mat& x_t,
                          const MomentProvider& provider, GaussianOptimalMode mode,
                          std::uint64_t seed, const SamplerConfig& cfg) {
    if (mode == GaussianOptimalMode::scalar_analytic && !cfg.gamma)
        throw std::invalid_argument("scalar-analytic step requires a precomputed gamma table");
    auto rngs = element_rngs(seed, x_t.rows());
    return gaussian_step(co, x_t, provider,
                         mode == GaussianOptimalMode::scalar_analytic
                             ? StepVariance::scalar_analytic
                             : StepVariance::diagonal_sn,
                         cfg, rngs);
}

GmsStepResult step_gms(const TransitionCoeffs& co, const Mat& x_t, const MomentProvider& provider,
                       const OptimizerConfig& fitcfg, std::uint64_t seed,
                       const SamplerConfig& cfg) {
    auto rngs = element_rngs(seed, x_t.rows());
    return gms_step(co, x_t, provider, fitcfg, cfg, rngs);
}

Mat step_ddim(const NoiseSchedule& sched, const Mat& x_t, const MomentProvider& provider, int s,
              int t, const SamplerConfig& cfg) {
    if (s > t) throw std::invalid_argument("step_ddim: requires s <= t");
    if (s == t) return x_t;
    Mat m1, m2, m3;
    provider.moments(x_t, t, 1, m1, m2, m3);
    apply_clip(cfg, sched.alpha[t], sched.sigma[t], x_t, m1);
    const Mat x0_hat = (x_t - sched.sigma[t] * m1) / sched.alpha[t];
    return sched.alpha[s] * x0_hat + sched.sigma[s] * m1;
}

SampleRun run_sampler(SamplerKind kind, const NoiseSchedule& sched, const Trajectory& traj,
                      const MomentProvider& provider, int n, std::uint64_t seed,
                      const SamplerConfig& cfg) {
    if (n < 1) throw std::invalid_argument("run_sampler: n must be >= 1");
    check_run_preconditions(kind, provider, cfg);

    const int d = provider.dim();
    auto rngs = element_rngs(seed, n);

    SampleRun run;
    run.kind = kind;
    run.trajectory = traj;
    run.seed = seed;
    run.samples.resize(n, d);
    for (int r = 0; r < n; ++r) run.samples.row(r) = rngs[r].normal_vec(d).matrix().transpose();

    advance_chain(kind, sched, provider, cfg, rngs, run);
    return run;
}

SdeditRun run_sdedit(const Mat& guide, int t0, SamplerKind kind, const NoiseSchedule& sched,
                     const Trajectory& traj, const MomentProvider& provider, std::uint64_t seed,
                     const SamplerConfig& cfg) {
    if (t0 < 1 || t0 > sched.T) throw std::invalid_argument("run_sdedit: t0 out of range");
    if (traj.start() != t0 || traj.steps.back() != 0)
        throw std::invalid_argument("run_sdedit: trajectory must start at t0 and end at 0");
    if (guide.cols() != provider.dim())
        throw std::invalid_argument("run_sdedit: guide dimension mismatch");
    check_run_preconditions(kind, provider, cfg);

    const Eigen::Index n = guide.rows();
    auto rngs = element_rngs(seed, n);

    SdeditRun out;
    out.guide = guide;
    out.run.kind = kind;
    out.run.trajectory = traj;
    out.run.seed = seed;
    out.run.samples.resize(n, guide.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
        const Vec z = rngs[r].normal_vec(guide.cols());
        out.run.samples.row(r) =
            (sched.alpha[t0] * guide.row(r).transpose().array() + sched.sigma[t0] * z)
                .matrix()
                .transpose();
    }

    advance_chain(kind, sched, provider, cfg, rngs, out.run);
    return out;
}

}  // namespace gms
