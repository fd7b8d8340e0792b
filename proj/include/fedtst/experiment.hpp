#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedtst/federated.hpp"

namespace fedtst {

/// A full simulator run: the federation settings plus where to put the
/// artifacts (metrics.csv, summary.json, figure tables, final checkpoint).
struct ExperimentConfig {
    FederationConfig federation;
    std::string out_dir = "out";

    void validate() const;
};

/// Built-in defaults (5 clients, 10 rounds, 2 local epochs, budget-split
/// privacy at epsilon 0.8 over the run).
ExperimentConfig default_experiment();

/// Applies one dotted-key setting ("dp.epsilon", "model.d_model", ...) with a
/// string value. `context` prefixes error messages (e.g. "config.txt line 4").
/// Throws ConfigError on an unknown key or unparseable value.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& context = "");

/// Every key apply_setting accepts, in canonical order, with a short note.
std::vector<std::pair<std::string, std::string>> setting_help();

/// Loads a configuration file onto the defaults. Files ending in .json hold
/// one (possibly nested) JSON object; anything else is parsed as key=value
/// lines with # comments. An empty file yields the defaults. Unknown keys
/// fail with the offending file and line. Throws IoError when unreadable.
ExperimentConfig load_config(const std::string& path);

struct ExperimentResult {
    std::vector<RoundMetrics> rounds;
    double final_global_accuracy = 0.0;
    double final_mean_local_accuracy = 0.0;
    double epsilon_cumulative = 0.0;
    std::string metrics_csv_path;
    std::string summary_json_path;
};

/// Runs the configured federation and writes all artifacts under
/// cfg.out_dir. Identical configurations produce byte-identical files.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SweepSeedOutcome {
    std::uint64_t seed = 0;
    double final_accuracy = 0.0;
    double final_loss = 0.0;
};

struct SweepPoint {
    double epsilon = 0.0;  // 0 marks the privacy-off baseline
    std::vector<SweepSeedOutcome> seeds;
    double mean_final_accuracy = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;     // ascending epsilon
    bool has_baseline = false;
    SweepPoint baseline;                // privacy off, same seeds
    std::string table_csv_path;
    std::string summary_json_path;
};

/// Fixed-epsilon sweep: every run spends the given epsilon each round. All
/// points reuse the same master seeds, so data, initialization, and noise
/// draws are shared and only the noise magnitude differs. Rejects an empty
/// epsilon list, any epsilon <= 0, and an empty seed list (ConfigError).
/// When include_baseline is set, privacy-off runs at the same seeds are
/// recorded alongside.
SweepResult sweep_epsilon(const ExperimentConfig& base, const std::vector<double>& epsilons,
                          const std::vector<std::uint64_t>& seeds,
                          bool include_baseline = true);

}  // namespace fedtst
