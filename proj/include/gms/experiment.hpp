#pragma once

#include "gms/config.hpp"
#include "gms/metrics.hpp"
#include "gms/provider.hpp"
#include "gms/samplers.hpp"

#include <memory>
#include <string>
#include <vector>

namespace gms {

// One diagnostics row: non-Gaussianity of the transition t -> s on the even
// K-step trajectory, aggregated over draws of x_t (per-draw mean over
// dimensions, then mean / median over draws).
struct DiagRow {
    int t = 0, s = 0, K = 0;
    double mean_dev = 0.0;
    double median_dev = 0.0;
};

std::vector<DiagRow> run_diagnose(const MixtureDistribution& data, const NoiseSchedule& sched,
                                  const MomentProvider& provider, const std::vector<int>& Ks,
                                  int n_draws, std::uint64_t seed);

void write_diagnostics_csv(const std::string& path, const std::vector<DiagRow>& rows);

// Builds the provider named by the config (training first when asked to).
std::unique_ptr<MomentProvider> make_provider(const ExperimentConfig& cfg,
                                              const NoiseSchedule& sched,
                                              const std::string& net_out_path = "");

// Synthetic stroke-like guides: deterministic uniform draws over the data's
// mean +- 3 sigma bounding box.
Mat make_guides(const MixtureDistribution& data, int n, std::uint64_t seed);

// Full pipeline: (train ->) sample -> eval -> diagnose, with samples.csv,
// report.csv, diagnostics.csv and a run manifest under cfg.output_dir.
// Sweep behaviour falls out of multi-valued solver.K / solver.seed.
void run_experiment(const ExperimentConfig& cfg);

}  // namespace gms
