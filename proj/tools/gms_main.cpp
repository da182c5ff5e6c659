// Command-line front end: train / sample / sdedit / eval / diagnose / sweep.

#include <CLI11.hpp>

#include "gms/csvio.hpp"
#include "gms/experiment.hpp"
#include "gms/metrics.hpp"
#include "gms/moments.hpp"

#include <cstdio>
#include <iostream>

namespace {

using namespace gms;

struct CommonFlags {
    std::string data = "toy1d";
    std::string schedule = "linear";
    int T = 1000;
    std::string provider = "oracle";  // oracle | net:<path>
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--data", flags.data, "data preset (toy1d, gauss8, single_gauss)");
    cmd->add_option("--schedule", flags.schedule, "noise schedule kind (linear, cosine)");
    cmd->add_option("--T", flags.T, "number of forward steps");
    cmd->add_option("--provider", flags.provider, "moment provider: oracle or net:<path>");
    cmd->add_option("--seed", flags.seed, "base seed");
}

std::unique_ptr<MomentProvider> build_provider(const CommonFlags& flags,
                                               const NoiseSchedule& sched) {
    if (flags.provider == "oracle")
        return std::make_unique<OracleMomentProvider>(mixture_preset(flags.data), sched);
    if (flags.provider.rfind("net:", 0) == 0)
        return std::make_unique<NetMomentProvider>(NoiseHeads::load(flags.provider.substr(4)));
    throw std::invalid_argument("--provider must be oracle or net:<path>");
}

std::vector<std::string> dim_header(int dim) {
    std::vector<std::string> header;
    for (int c = 0; c < dim; ++c) header.push_back("x" + std::to_string(c));
    return header;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Gaussian mixture transition-kernel samplers for diffusion models"};
    app.require_subcommand(1);

    // --- train ---
    CommonFlags train_flags;
    TrainHyper hyper;
    int train_order = 3;
    std::string train_out = "noisenet.bin";
    auto* train_cmd = app.add_subcommand("train", "train the noise network and extra heads");
    add_common(train_cmd, train_flags);
    train_cmd->add_option("--order", train_order, "train heads up to this moment order (1..3)")
        ->check(CLI::Range(1, 3));
    train_cmd->add_option("--out", train_out, "output parameter file");
    train_cmd->add_option("--iters", hyper.iters, "training iterations per stage");
    train_cmd->add_option("--batch", hyper.batch, "batch size");
    train_cmd->add_option("--lr", hyper.lr, "learning rate");
    train_cmd->add_option("--width", hyper.width, "hidden width");
    train_cmd->add_option("--depth", hyper.depth, "hidden layers");

    // --- sample ---
    CommonFlags sample_flags;
    std::string solver = "gms";
    int steps = 10, n = 2000;
    std::string sample_out = "samples.csv";
    OptimizerConfig gmm;
    bool clip = false, last_step_noise = false;
    auto* sample_cmd = app.add_subcommand("sample", "draw samples with a reverse-process solver");
    add_common(sample_cmd, sample_flags);
    sample_cmd->add_option("--solver", solver,
                           "ddpm-beta, ddpm-beta-tilde, analytic, sn, gms or ddim");
    sample_cmd->add_option("--steps", steps, "number of sampling steps K");
    sample_cmd->add_option("--n", n, "batch size");
    sample_cmd->add_option("--out", sample_out, "output CSV (one row per sample)");
    sample_cmd->add_option("--gmm-steps", gmm.steps, "per-step fit iterations");
    sample_cmd->add_option("--gmm-lr", gmm.lr, "per-step fit learning rate");
    sample_cmd->add_option("--gmm-warmup", gmm.warmup, "fit warm-up steps");
    sample_cmd->add_flag("--clip", clip, "clamp the implied x0 estimate to [-1, 1]");
    sample_cmd->add_flag("--last-step-noise", last_step_noise,
                         "inject noise on the final transition");

    // --- sdedit ---
    CommonFlags sdedit_flags;
    std::string sdedit_solver = "gms";
    int sdedit_steps = 50, sdedit_n = 1000, t0 = 300;
    std::string sdedit_out = "sdedit.csv";
    std::string guide_file, guides_out;
    auto* sdedit_cmd = app.add_subcommand("sdedit", "guide-then-denoise synthesis");
    add_common(sdedit_cmd, sdedit_flags);
    sdedit_cmd->add_option("--t0", t0, "timestep the guides are noised to")->required();
    sdedit_cmd->add_option("--solver", sdedit_solver, "reverse solver");
    sdedit_cmd->add_option("--steps", sdedit_steps, "number of reverse steps below t0");
    sdedit_cmd->add_option("--n", sdedit_n, "number of guides (when generated)");
    sdedit_cmd->add_option("--guide-file", guide_file, "CSV of guide points (default: synthetic)");
    sdedit_cmd->add_option("--out", sdedit_out, "output CSV");
    sdedit_cmd->add_option("--guides-out", guides_out, "where to write the guides used");

    // --- eval ---
    std::string eval_samples, eval_guides, eval_out = "report.csv";
    std::string eval_data = "toy1d";
    int eval_L = 10000;
    std::uint64_t eval_seed = 0;
    auto* eval_cmd = app.add_subcommand("eval", "score samples against the data distribution");
    eval_cmd->add_option("--samples", eval_samples, "samples CSV")->required();
    eval_cmd->add_option("--data", eval_data, "data preset for the reference draws");
    eval_cmd->add_option("--L", eval_L, "reference size");
    eval_cmd->add_option("--guides", eval_guides, "guides CSV for the faithfulness score");
    eval_cmd->add_option("--seed", eval_seed, "reference draw seed");
    eval_cmd->add_option("--out", eval_out, "report CSV");

    // --- diagnose ---
    CommonFlags diag_flags;
    std::vector<int> diag_Ks = {1000, 100, 10};
    int diag_draws = 256;
    std::string diag_out = "diagnostics.csv";
    auto* diag_cmd =
        app.add_subcommand("diagnose", "third-moment deviation along even trajectories");
    add_common(diag_cmd, diag_flags);
    diag_cmd->add_option("--K", diag_Ks, "trajectory step counts")->delimiter(',');
    diag_cmd->add_option("--draws", diag_draws, "x_t draws per transition");
    diag_cmd->add_option("--out", diag_out, "output CSV");

    // --- sweep ---
    std::string config_path;
    auto* sweep_cmd = app.add_subcommand("sweep", "run a config-driven experiment");
    sweep_cmd->add_option("--config", config_path, "experiment config file")->required();

    CLI11_PARSE(app, argc, argv);

    if (train_cmd->parsed()) {
        const NoiseSchedule sched =
            make_schedule(schedule_kind_from_string(train_flags.schedule), train_flags.T);
        const MixtureDistribution data = mixture_preset(train_flags.data);
        hyper.seed = train_flags.seed;
        NoiseHeads net = train_stage1(data, sched, hyper);
        if (train_order >= 2) train_heads(net, 2, data, sched, hyper);
        if (train_order >= 3) train_heads(net, 3, data, sched, hyper);
        net.save(train_out);
        std::printf("wrote %s (dim=%d, trained order %d)\n", train_out.c_str(), net.dim(),
                    net.max_trained_order());
        return 0;
    }

    if (sample_cmd->parsed()) {
        const NoiseSchedule sched =
            make_schedule(schedule_kind_from_string(sample_flags.schedule), sample_flags.T);
        const auto provider = build_provider(sample_flags, sched);
        const Trajectory traj = build_trajectory(sample_flags.T, steps);
        SamplerConfig scfg;
        scfg.gmm = gmm;
        scfg.clip = clip;
        scfg.last_step_noise = last_step_noise;
        const SamplerKind kind = sampler_kind_from_string(solver);
        if (kind == SamplerKind::analytic_dpm)
            scfg.gamma = estimate_gamma_table(sched, traj, mixture_preset(sample_flags.data),
                                              *provider, 100000, mix_seed(sample_flags.seed, 0x6a));
        const SampleRun run =
            run_sampler(kind, sched, traj, *provider, n, sample_flags.seed, scfg);
        write_csv(sample_out, dim_header(provider->dim()), run.samples);
        std::printf("wrote %s (%d samples, K=%d, %s)\n", sample_out.c_str(), n, steps,
                    solver.c_str());
        return 0;
    }

    if (sdedit_cmd->parsed()) {
        const NoiseSchedule sched =
            make_schedule(schedule_kind_from_string(sdedit_flags.schedule), sdedit_flags.T);
        const MixtureDistribution data = mixture_preset(sdedit_flags.data);
        const auto provider = build_provider(sdedit_flags, sched);
        const Mat guides = guide_file.empty() ? make_guides(data, sdedit_n, sdedit_flags.seed)
                                              : read_csv(guide_file).values;
        const int K = std::min(sdedit_steps, t0);
        const Trajectory traj = build_trajectory(t0, K);
        SamplerConfig scfg;
        const SamplerKind kind = sampler_kind_from_string(sdedit_solver);
        if (kind == SamplerKind::analytic_dpm)
            scfg.gamma = estimate_gamma_table(sched, traj, data, *provider, 100000,
                                              mix_seed(sdedit_flags.seed, 0x6a));
        const SdeditRun result =
            run_sdedit(guides, t0, kind, sched, traj, *provider, sdedit_flags.seed, scfg);
        write_csv(sdedit_out, dim_header(provider->dim()), result.run.samples);
        const std::string gpath =
            guides_out.empty() ? sdedit_out + ".guides.csv" : guides_out;
        write_csv(gpath, dim_header(provider->dim()), result.guide);
        std::printf("wrote %s and %s (t0=%d, K=%d, %s)\n", sdedit_out.c_str(), gpath.c_str(), t0,
                    K, sdedit_solver.c_str());
        return 0;
    }

    if (eval_cmd->parsed()) {
        const MixtureDistribution data = mixture_preset(eval_data);
        const Mat samples = read_csv(eval_samples).values;
        const Mat reference = sample_data(data, eval_L, mix_seed(eval_seed, 0xe5a1));
        const Vec bandwidth = kde_bandwidth(reference);
        EvalReport report;
        report.kde_loglik = kde_loglik(samples, reference, bandwidth);
        report.n_samples = static_cast<int>(samples.rows());
        report.n_reference = eval_L;
        report.bandwidth = bandwidth;
        const bool has_l2 = !eval_guides.empty();
        if (has_l2) report.l2 = l2_faithfulness(samples, read_csv(eval_guides).values);

        CsvWriter out(eval_out, {"n", "L", "bandwidth", "kde_loglik", "l2"});
        out.row({std::to_string(report.n_samples), std::to_string(report.n_reference),
                 format_double(bandwidth.mean()), format_double(report.kde_loglik),
                 has_l2 ? format_double(report.l2) : "nan"});
        out.close();
        const std::string l2_note = has_l2 ? " l2 = " + format_double(report.l2) : "";
        std::printf("kde_loglik = %.6f%s\n", report.kde_loglik, l2_note.c_str());
        return 0;
    }

    if (diag_cmd->parsed()) {
        const NoiseSchedule sched =
            make_schedule(schedule_kind_from_string(diag_flags.schedule), diag_flags.T);
        const MixtureDistribution data = mixture_preset(diag_flags.data);
        const auto provider = build_provider(diag_flags, sched);
        const std::vector<DiagRow> rows =
            run_diagnose(data, sched, *provider, diag_Ks, diag_draws, diag_flags.seed);
        write_diagnostics_csv(diag_out, rows);
        std::printf("wrote %s (%zu rows)\n", diag_out.c_str(), rows.size());
        return 0;
    }

    if (sweep_cmd->parsed()) {
        run_experiment(load_config(config_path));
        std::printf("experiment finished\n");
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
