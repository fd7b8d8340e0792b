#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedtst/dp.hpp"
#include "fedtst/model.hpp"
#include "fedtst/params.hpp"
#include "fedtst/preprocess.hpp"
#include "fedtst/train.hpp"

namespace fedtst {

// ---------------------------------------------------------------------------
// Aggregation and evaluation primitives.
// ---------------------------------------------------------------------------

/// Elementwise unweighted mean of the client vectors. Every element's sum is
/// formed with exact accumulation before the single division, so the result
/// is identical under any permutation of the clients. Throws AggregationError
/// on an empty list or mismatched lengths.
std::vector<double> fedavg(const std::vector<std::vector<double>>& client_params);

/// local - global, elementwise; the update a client uploads. Throws
/// AggregationError on length mismatch.
std::vector<double> model_delta(std::span<const double> local, std::span<const double> global);

/// Fraction of elements with |pred - target| <= tolerance. Throws DataError
/// when empty, DimensionError on mismatched lengths, ConfigError on a
/// non-positive tolerance.
double accuracy_score(std::span<const double> pred, std::span<const double> target,
                      double tolerance);

struct EvalStats {
    double mse = 0.0;
    double mae = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;  // windows evaluated
};

/// Runs the model over the windows in inference mode and scores predictions
/// against the targets.
EvalStats evaluate_model(const TstConfig& cfg, ParamSet& params, const SequenceData& data,
                         double tolerance);

/// Composite 0-to-1 privacy indicator: high while little budget has been
/// spent, with a bonus for updates that actually hit the clipping bound.
/// 0.7 * exp(-epsilon_cumulative) + 0.3 * clip_fraction.
double privacy_score(double epsilon_cumulative, double clip_fraction);

// ---------------------------------------------------------------------------
// Device timing model.
// ---------------------------------------------------------------------------

struct LatencyParams {
    double base_compute_rate = 90000.0;  // flop per millisecond at speed factor 1
    double base_link_rate = 1200.0;      // bytes per millisecond at link factor 1

    void validate() const;  // ConfigError on non-positive rates
};

/// Work in one local training call: forward plus backward cost approximated
/// as 6 flop per parameter per input token.
double estimate_round_flops(std::size_t param_count, std::size_t windows, std::size_t seq_len,
                            std::size_t epochs);

double compute_ms(double flops, const LatencyParams& lat, double speed_factor);
double comm_ms(std::size_t bytes, const LatencyParams& lat, double link_factor);

/// Default heterogeneous device profiles, cycled by client index.
double default_speed_factor(std::size_t client_id);
double default_link_factor(std::size_t client_id);

// ---------------------------------------------------------------------------
// The federation itself.
// ---------------------------------------------------------------------------

struct FederationConfig {
    std::size_t n_clients = 5;
    std::size_t rounds = 10;
    std::uint64_t master_seed = 42;
    std::size_t trace_steps = 120;   // synthetic drive length per client
    double eval_fraction = 0.25;     // chronological tail held out per client
    double accuracy_tolerance = 0.5; // band width in scaled units
    TstConfig model;
    HybridLossConfig loss;
    PrivacySpec privacy;
    TrainOptions training;           // per-call seeds are overwritten per client/round
    LatencyParams latency;

    /// Collects every violated field into one ConfigError message.
    void validate() const;
};

struct ClientRoundMetrics {
    std::size_t client_id = 0;
    double train_loss = 0.0;       // mean loss over the local epochs
    double local_accuracy = 0.0;   // this client's model on its own held-out tail
    double clip_fraction = 0.0;
    double update_norm = 0.0;      // L2 of the uploaded delta
    double compute_ms = 0.0;
    double comm_ms = 0.0;
    std::size_t upload_bytes = 0;
    std::size_t download_bytes = 0;
};

struct RoundMetrics {
    std::size_t round = 0;  // 1-based
    double global_accuracy = 0.0;
    double global_mse = 0.0;
    double global_mae = 0.0;
    double mean_local_accuracy = 0.0;
    double mean_train_loss = 0.0;
    double mean_clip_fraction = 0.0;
    double epsilon_round = 0.0;
    double epsilon_cumulative = 0.0;
    double privacy_score = 0.0;
    double round_latency_ms = 0.0;  // slowest client (compute + transfer)
    std::size_t total_upload_bytes = 0;
    std::size_t total_download_bytes = 0;
    std::vector<ClientRoundMetrics> clients;
};

struct ClientState {
    std::size_t id = 0;
    std::uint64_t data_seed = 0;
    SequenceData train_data;
    SequenceData eval_data;
    double speed_factor = 1.0;
    double link_factor = 1.0;
};

/// Owns the global model and the simulated clients. Each round broadcasts
/// the global parameters through the quantized downlink, trains every client
/// locally under the privacy spec, averages the resulting parameter sets,
/// spends the round's budget, and evaluates.
class Federation {
public:
    explicit Federation(FederationConfig cfg);

    /// One federated round; advances the global model and the ledger.
    RoundMetrics run_round();

    /// Runs the configured number of rounds from the current state.
    std::vector<RoundMetrics> run();

    const FederationConfig& config() const { return cfg_; }
    const ParamSet& global_params() const { return global_; }
    ParamSet& global_params() { return global_; }
    const PrivacyLedger& ledger() const { return ledger_; }
    const std::vector<ClientState>& clients() const { return clients_; }
    std::size_t rounds_completed() const { return round_; }

    /// Global model scored on the union of all clients' held-out tails.
    EvalStats evaluate_global();

private:
    FederationConfig cfg_;
    ParamSet global_;
    std::vector<ClientState> clients_;
    PrivacyLedger ledger_;
    std::size_t round_ = 0;
};

}  // namespace fedtst
