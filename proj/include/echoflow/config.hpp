#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "echoflow/data.hpp"
#include "echoflow/model.hpp"
#include "echoflow/train.hpp"

namespace echoflow {

// One config file drives one reproducible experiment. Validation is
// fail-closed: unknown keys are rejected and every violation is reported.
struct ExperimentConfig {
    // dataset
    std::string dataset_path;           // CSV path, or empty when generated
    std::string generator_type;         // "lorenz" | "sine" | empty
    int gen_steps = 2000;
    double gen_dt = 0.01;
    std::array<double, 3> gen_init = {1.0, 1.0, 1.0};
    LorenzParams lorenz_params;
    int gen_channels = 1;
    std::vector<double> gen_freqs;
    double gen_noise_std = 0.0;
    bool forward_fill = false;
    std::vector<std::string> channels;  // optional channel selection

    ModelConfig model;
    TrainConfig train;
    std::string out_dir = ".";
    std::uint64_t seed = 0;

    Series load_dataset() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace echoflow
