#pragma once

// File-driven experiment configuration: one task per run, fully validated
// before any compute; reruns with identical config and seed are
// byte-identical in their CSV outputs.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "jumpwave/elliptic.hpp"

namespace jumpwave {

struct ExperimentConfig {
    nlohmann::json raw;          // echoed verbatim into the manifest
    std::uint64_t seed = 1;
    MediumSpec medium;
    GridSpec grid;
    double cfl_fraction = 0.9;
    std::string task;
    nlohmann::json params;       // task parameter block
    std::string output_dir = "out";
};

// Parse and structurally validate a config file (throws ValidationError).
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const nlohmann::json& j);

// Full task-level validation; performs no compute and writes nothing.
void validate_experiment(const ExperimentConfig& cfg);

// Execute the task, writing CSV outputs and a manifest into out_dir.
void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

std::string jumpwave_version();

}  // namespace jumpwave
