// Command-line front end for the federated time-series trainer.
//
//   fedtst run       one federated experiment, artifacts under --out
//   fedtst sweep     fixed-epsilon accuracy sweep across seeds
//   fedtst gen-data  write one synthetic vehicle trace as CSV
//
// Every run is fully determined by its configuration and seed: repeating a
// command reproduces its artifacts byte for byte.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedtst/errors.hpp"
#include "fedtst/experiment.hpp"
#include "fedtst/trace.hpp"

namespace {

using fedtst::ExperimentConfig;

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& sets) {
    for (const std::string& item : sets) {
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos) {
            throw fedtst::ConfigError("--set expects key=value, got '" + item + "'");
        }
        fedtst::apply_setting(cfg, item.substr(0, eq), item.substr(eq + 1), "--set " + item);
    }
}

std::string settings_reference() {
    std::string text = "Configuration keys (for config files and --set):\n";
    for (const auto& [key, note] : fedtst::setting_help()) {
        text += "  " + key;
        text.append(key.size() < 24 ? 24 - key.size() : 1, ' ');
        text += note + "\n";
    }
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale federated trainer for vehicular time-series models.\n" +
                 settings_reference()};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Run one federated experiment");
    std::string run_config;
    std::string run_out;
    std::uint64_t run_seed = 0;
    bool run_seed_given = false;
    std::vector<std::string> run_sets;
    run_cmd->add_option("--config", run_config, "Config file (.json or key=value lines)")
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run_out, "Artifact directory (default: out)");
    run_cmd->add_option("--seed", run_seed, "Master seed override (default: 42)")
        ->each([&run_seed_given](const std::string&) { run_seed_given = true; });
    run_cmd->add_option("--set", run_sets, "Extra key=value overrides (repeatable)");

    // --- sweep -------------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "Fixed-epsilon privacy/accuracy sweep");
    std::string sweep_config;
    std::string sweep_out;
    std::vector<double> sweep_eps = {0.1, 0.4, 0.8};
    std::vector<std::uint64_t> sweep_seeds = {42, 43, 44};
    bool sweep_no_baseline = false;
    std::vector<std::string> sweep_sets;
    sweep_cmd->add_option("--config", sweep_config, "Config file (.json or key=value lines)")
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out", sweep_out, "Artifact directory (default: out)");
    sweep_cmd
        ->add_option("--epsilons", sweep_eps,
                     "Per-round epsilon values (default: 0.1 0.4 0.8)")
        ->delimiter(',');
    sweep_cmd->add_option("--seeds", sweep_seeds, "Master seeds (default: 42 43 44)")
        ->delimiter(',');
    sweep_cmd->add_flag("--no-baseline", sweep_no_baseline,
                        "Skip the privacy-off baseline runs");
    sweep_cmd->add_option("--set", sweep_sets, "Extra key=value overrides (repeatable)");

    // --- gen-data ----------------------------------------------------------
    auto* gen_cmd = app.add_subcommand("gen-data", "Write one synthetic vehicle trace");
    std::uint64_t gen_seed = 42;
    std::size_t gen_steps = 120;
    std::size_t gen_client = 0;
    std::string gen_out = "trace.csv";
    gen_cmd->add_option("--seed", gen_seed, "Trace seed")->capture_default_str();
    gen_cmd->add_option("--steps", gen_steps, "Number of time steps")->capture_default_str();
    gen_cmd->add_option("--client", gen_client, "Driving profile index")
        ->capture_default_str();
    gen_cmd->add_option("--out", gen_out, "Output CSV path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            ExperimentConfig cfg = run_config.empty() ? fedtst::default_experiment()
                                                      : fedtst::load_config(run_config);
            if (run_seed_given) cfg.federation.master_seed = run_seed;
            if (!run_out.empty()) cfg.out_dir = run_out;
            apply_overrides(cfg, run_sets);

            fedtst::ExperimentResult result = fedtst::run_experiment(cfg);
            std::printf("rounds: %zu\n", result.rounds.size());
            std::printf("final global accuracy: %.4f\n", result.final_global_accuracy);
            std::printf("final mean local accuracy: %.4f\n",
                        result.final_mean_local_accuracy);
            std::printf("epsilon spent: %.6f\n", result.epsilon_cumulative);
            std::printf("metrics: %s\n", result.metrics_csv_path.c_str());
            std::printf("summary: %s\n", result.summary_json_path.c_str());
        } else if (sweep_cmd->parsed()) {
            ExperimentConfig cfg = sweep_config.empty() ? fedtst::default_experiment()
                                                        : fedtst::load_config(sweep_config);
            if (!sweep_out.empty()) cfg.out_dir = sweep_out;
            apply_overrides(cfg, sweep_sets);

            fedtst::SweepResult result =
                fedtst::sweep_epsilon(cfg, sweep_eps, sweep_seeds, !sweep_no_baseline);
            if (result.has_baseline) {
                std::printf("epsilon      off  mean accuracy %.4f\n",
                            result.baseline.mean_final_accuracy);
            }
            for (const auto& point : result.points) {
                std::printf("epsilon %8.3f  mean accuracy %.4f\n", point.epsilon,
                            point.mean_final_accuracy);
            }
            std::printf("table: %s\n", result.table_csv_path.c_str());
            std::printf("summary: %s\n", result.summary_json_path.c_str());
        } else if (gen_cmd->parsed()) {
            fedtst::RawTrace trace =
                fedtst::generate_trace(gen_seed, gen_steps, fedtst::client_profile(gen_client));
            fedtst::write_trace_csv(trace, gen_out);
            std::printf("wrote %zu steps to %s\n", trace.rows.size(), gen_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
