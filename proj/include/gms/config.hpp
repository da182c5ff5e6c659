#pragma once

#include "gms/common.hpp"
#include "gms/gmmfit.hpp"
#include "gms/mixture.hpp"
#include "gms/noisenet.hpp"
#include "gms/samplers.hpp"
#include "gms/schedule.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gms {

// Parsed experiment description. The on-disk format is line-oriented
// [section] blocks of `key = value` pairs; keys are reported in dotted
// `section.key` form in diagnostics. Lists use commas, mixture component
// rows are separated by ';'.
struct ExperimentConfig {
    ScheduleKind schedule_kind = ScheduleKind::linear;
    int T = 1000;

    std::string data_preset = "toy1d";
    std::optional<MixtureDistribution> data_explicit;

    std::string provider_kind = "oracle";  // oracle | net | train
    std::string provider_path;             // net parameter file (provider.kind = net)
    int provider_order = 3;                // highest head trained (provider.kind = train)
    TrainHyper hyper;

    SamplerKind solver = SamplerKind::gms;
    std::vector<int> Ks = {10};
    std::vector<std::uint64_t> seeds = {0};
    int n = 2000;

    bool clip = false;
    bool last_step_noise = false;
    OptimizerConfig gmm;

    int eval_L = 10000;
    std::vector<std::string> metrics = {"kde"};

    std::vector<int> diagnose_Ks;  // defaults to solver Ks when empty
    int diagnose_draws = 256;

    std::string output_dir = "out";

    std::vector<std::string> raw_lines;  // verbatim config echo for the manifest

    MixtureDistribution data() const {
        return data_explicit ? *data_explicit : mixture_preset(data_preset);
    }
};

ExperimentConfig load_config(const std::string& path);

// Parse from memory; `origin` is used in error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

}  // namespace gms
