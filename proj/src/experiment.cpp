#include "gms/experiment.hpp"

#include "gms/csvio.hpp"
#include "gms/moments.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace gms {

std::vector<DiagRow> run_diagnose(const MixtureDistribution& data, const NoiseSchedule& sched,
                                  const MomentProvider& provider, const std::vector<int>& Ks,
                                  int n_draws, std::uint64_t seed) {
    std::vector<DiagRow> rows;
    const Mat x0 = sample_data(data, n_draws, mix_seed(seed, 0xd1a6));
    for (const int K : Ks) {
        const Trajectory traj = build_trajectory(sched.T, K);
        for (int k = 0; k < traj.K(); ++k) {
            const int t = traj.steps[k];
            const int s = traj.steps[k + 1];
            if (t < 1) continue;
            const Mat x_t = forward_sample_batch(sched, x0, t, mix_seed(seed, 7000 + t));
            Mat m1, m2, m3;
            provider.moments(x_t, t, 3, m1, m2, m3);
            const TransitionCoeffs co = coeffs(sched, s, t);

            Vec per_draw(n_draws);
            parallel_for(n_draws, [&](Eigen::Index r) {
                NoiseMoments nm;
                nm.m1 = m1.row(r).transpose().array();
                nm.m2 = m2.row(r).transpose().array();
                nm.m3 = m3.row(r).transpose().array();
                const MomentTriple triple =
                    reverse_moments(co, x_t.row(r).transpose().array(), nm);
                per_draw[r] = moment_deviation(triple).mean();
            });

            DiagRow row;
            row.t = t;
            row.s = s;
            row.K = K;
            row.mean_dev = per_draw.mean();
            Vec sorted = per_draw;
            std::sort(sorted.data(), sorted.data() + sorted.size());
            row.median_dev = n_draws % 2 == 1
                                 ? sorted[n_draws / 2]
                                 : 0.5 * (sorted[n_draws / 2 - 1] + sorted[n_draws / 2]);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagRow>& rows) {
    CsvWriter out(path, {"t", "s", "K", "mean_dev", "median_dev"});
    for (const DiagRow& row : rows)
        out.row({std::to_string(row.t), std::to_string(row.s), std::to_string(row.K),
                 format_double(row.mean_dev), format_double(row.median_dev)});
    out.close();
}

std::unique_ptr<MomentProvider> make_provider(const ExperimentConfig& cfg,
                                              const NoiseSchedule& sched,
                                              const std::string& net_out_path) {
    if (cfg.provider_kind == "oracle")
        return std::make_unique<OracleMomentProvider>(cfg.data(), sched);
    if (cfg.provider_kind == "net")
        return std::make_unique<NetMomentProvider>(NoiseHeads::load(cfg.provider_path));

    // provider.kind = train
    const MixtureDistribution data = cfg.data();
    NoiseHeads net = train_stage1(data, sched, cfg.hyper);
    if (cfg.provider_order >= 2) train_heads(net, 2, data, sched, cfg.hyper);
    if (cfg.provider_order >= 3) train_heads(net, 3, data, sched, cfg.hyper);
    if (!net_out_path.empty()) net.save(net_out_path);
    return std::make_unique<NetMomentProvider>(std::move(net));
}

Mat make_guides(const MixtureDistribution& data, int n, std::uint64_t seed) {
    const MomentTriple mom = mixture_moments(data);
    const Vec sd = (mom.M2 - mom.M1 * mom.M1).max(0.0).sqrt();
    const Vec lo = mom.M1 - 3.0 * sd;
    const Vec hi = mom.M1 + 3.0 * sd;
    Mat guides(n, data.dim());
    Rng rng(mix_seed(seed, 0x6e1d));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < data.dim(); ++c)
            guides(r, c) = lo[c] + (hi[c] - lo[c]) * rng.uniform();
    return guides;
}

namespace {

std::vector<std::string> sample_header(int dim) {
    std::vector<std::string> header;
    for (int c = 0; c < dim; ++c) header.push_back("x" + std::to_string(c));
    return header;
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg) {
    const auto wall_start = std::chrono::steady_clock::now();
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.output_dir + "'");
    const auto out_path = [&](const std::string& name) {
        return (fs::path(cfg.output_dir) / name).string();
    };

    const NoiseSchedule sched = make_schedule(cfg.schedule_kind, cfg.T);
    const MixtureDistribution data = cfg.data();

    const double train_begin = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - wall_start)
                                   .count();
    const std::string net_path =
        cfg.provider_kind == "train" ? out_path("noisenet.bin") : std::string();
    const std::unique_ptr<MomentProvider> provider = make_provider(cfg, sched, net_path);
    const double train_seconds = std::chrono::duration<double>(
                                     std::chrono::steady_clock::now() - wall_start)
                                     .count() -
                                 train_begin;

    SamplerConfig scfg;
    scfg.gmm = cfg.gmm;
    scfg.clip = cfg.clip;
    scfg.last_step_noise = cfg.last_step_noise;

    const bool single = cfg.Ks.size() == 1 && cfg.seeds.size() == 1;

    CsvWriter report(out_path("report.csv"),
                     {"solver", "K", "seed", "n", "L", "bandwidth", "kde_loglik"});
    double sample_seconds = 0.0, eval_seconds = 0.0;

    const Mat reference = sample_data(data, cfg.eval_L, mix_seed(cfg.seeds.front(), 0xe5a1));
    const Vec bandwidth = kde_bandwidth(reference);

    for (const int K : cfg.Ks) {
        const Trajectory traj = build_trajectory(cfg.T, K);
        if (cfg.solver == SamplerKind::analytic_dpm)
            scfg.gamma = estimate_gamma_table(sched, traj, data, *provider, 100000,
                                              mix_seed(cfg.seeds.front(), 0x6a33a));
        for (const std::uint64_t seed : cfg.seeds) {
            auto t0 = std::chrono::steady_clock::now();
            const SampleRun run = run_sampler(cfg.solver, sched, traj, *provider,
                                              cfg.n, seed, scfg);
            sample_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            const std::string samples_name =
                single ? "samples.csv"
                       : "samples_K" + std::to_string(K) + "_seed" + std::to_string(seed) + ".csv";
            write_csv(out_path(samples_name), sample_header(data.dim()), run.samples);

            t0 = std::chrono::steady_clock::now();
            const double kde = kde_loglik(run.samples, reference, bandwidth);
            eval_seconds +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            report.row({to_string(cfg.solver), std::to_string(K), std::to_string(seed),
                        std::to_string(cfg.n), std::to_string(cfg.eval_L),
                        format_double(bandwidth.mean()), format_double(kde)});
        }
    }
    report.close();

    const std::vector<int> diag_Ks = cfg.diagnose_Ks.empty() ? cfg.Ks : cfg.diagnose_Ks;
    const auto diag_begin = std::chrono::steady_clock::now();
    const std::vector<DiagRow> diag =
        run_diagnose(data, sched, *provider, diag_Ks, cfg.diagnose_draws, cfg.seeds.front());
    write_diagnostics_csv(out_path("diagnostics.csv"), diag);
    const double diag_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - diag_begin).count();

    std::ofstream manifest(out_path("run_manifest.txt"));
    if (!manifest) throw IoError("cannot write run manifest");
    manifest << "artifact_version = 1\n";
    manifest << "solver = " << to_string(cfg.solver) << "\n";
    manifest << "schedule = " << to_string(cfg.schedule_kind) << "\n";
    manifest << "T = " << cfg.T << "\n";
    manifest << "n = " << cfg.n << "\n";
    manifest << "seeds =";
    for (const std::uint64_t seed : cfg.seeds) manifest << " " << seed;
    manifest << "\nK =";
    for (const int K : cfg.Ks) manifest << " " << K;
    manifest << "\ntrain_seconds = " << train_seconds << "\n";
    manifest << "sample_seconds = " << sample_seconds << "\n";
    manifest << "eval_seconds = " << eval_seconds << "\n";
    manifest << "diagnose_seconds = " << diag_seconds << "\n";
    manifest << "\n[config]\n";
    for (const std::string& line : cfg.raw_lines) manifest << line << "\n";
    if (!manifest) throw IoError("failed writing run manifest");
}

}  // namespace gms
