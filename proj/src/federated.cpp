#include "fedtst/federated.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fedtst/errors.hpp"
#include "fedtst/exact_sum.hpp"
#include "fedtst/serialize.hpp"
#include "fedtst/tensor.hpp"
#include "fedtst/trace.hpp"

namespace fedtst {

namespace {

double l2_norm(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    return std::sqrt(sq);
}

/// Copy of windows [lo, hi) of a window set.
SequenceData slice_sequence(const SequenceData& data, std::size_t lo, std::size_t hi) {
    const std::size_t seq = data.seq_len;
    const std::size_t f_in = data.inputs.cols();
    const std::size_t f_out = data.targets.cols();
    const auto in = data.inputs.values();
    const auto tg = data.targets.values();

    SequenceData out;
    out.seq_len = seq;
    out.count = hi - lo;
    out.target_features = data.target_features;
    out.inputs = Tensor::from_data(
        {out.count, seq, f_in},
        std::vector<double>(in.begin() + static_cast<std::ptrdiff_t>(lo * seq * f_in),
                            in.begin() + static_cast<std::ptrdiff_t>(hi * seq * f_in)));
    out.targets = Tensor::from_data(
        {out.count, f_out},
        std::vector<double>(tg.begin() + static_cast<std::ptrdiff_t>(lo * f_out),
                            tg.begin() + static_cast<std::ptrdiff_t>(hi * f_out)));
    return out;
}

/// Re-throws a stage failure with the client and round attached, preserving
/// the error category.
template <typename Fn>
auto with_client_context(std::size_t client_id, std::size_t round, Fn&& fn) {
    const std::string where =
        "client " + std::to_string(client_id) + " round " + std::to_string(round) + ": ";
    try {
        return fn();
    } catch (const NumericError& e) {
        throw NumericError(where + e.what());
    } catch (const DataError& e) {
        throw DataError(where + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(where + e.what());
    } catch (const AggregationError& e) {
        throw AggregationError(where + e.what());
    }
}

}  // namespace

std::vector<double> fedavg(const std::vector<std::vector<double>>& client_params) {
    if (client_params.empty()) {
        throw AggregationError("fedavg: no client parameter sets");
    }
    const std::size_t n = client_params.front().size();
    if (n == 0) throw AggregationError("fedavg: empty parameter vectors");
    for (std::size_t c = 0; c < client_params.size(); ++c) {
        if (client_params[c].size() != n) {
            throw AggregationError("fedavg: client " + std::to_string(c) + " has " +
                                   std::to_string(client_params[c].size()) + " elements, expected " +
                                   std::to_string(n));
        }
    }
    const double inv = 1.0 / static_cast<double>(client_params.size());
    std::vector<double> mean(n);
    ExactSum acc;
    for (std::size_t i = 0; i < n; ++i) {
        acc.reset();
        for (const auto& client : client_params) acc.add(client[i]);
        mean[i] = acc.value() * inv;
    }
    return mean;
}

std::vector<double> model_delta(std::span<const double> local, std::span<const double> global) {
    if (local.size() != global.size()) {
        throw AggregationError("model_delta: size mismatch");
    }
    std::vector<double> delta(local.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = local[i] - global[i];
    return delta;
}

double accuracy_score(std::span<const double> pred, std::span<const double> target,
                      double tolerance) {
    if (pred.empty()) throw DataError("accuracy_score: no predictions");
    if (pred.size() != target.size()) {
        throw DimensionError("accuracy_score: size mismatch");
    }
    if (!(tolerance > 0.0)) throw ConfigError("accuracy_score: tolerance must be positive");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (std::fabs(pred[i] - target[i]) <= tolerance) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

EvalStats evaluate_model(const TstConfig& cfg, ParamSet& params, const SequenceData& data,
                         double tolerance) {
    if (data.count == 0) throw DataError("evaluate_model: no windows");
    const std::size_t chunk = 64;
    Rng unused(0);  // inference mode draws nothing

    EvalStats stats;
    double se = 0.0, ae = 0.0;
    std::size_t hits = 0, elements = 0;
    for (std::size_t lo = 0; lo < data.count; lo += chunk) {
        const std::size_t hi = std::min(data.count, lo + chunk);
        SequenceData part = slice_sequence(data, lo, hi);
        Tape tape(false);
        Tensor pred = forward(tape, cfg, params, part.inputs, /*training=*/false, unused);
        const auto pv = pred.values();
        const auto tv = part.targets.values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const double d = pv[i] - tv[i];
            se += d * d;
            ae += std::fabs(d);
            if (std::fabs(d) <= tolerance) ++hits;
        }
        elements += pv.size();
        stats.count += part.count;
    }
    stats.mse = se / static_cast<double>(elements);
    stats.mae = ae / static_cast<double>(elements);
    stats.accuracy = static_cast<double>(hits) / static_cast<double>(elements);
    return stats;
}

double privacy_score(double epsilon_cumulative, double clip_fraction) {
    if (!(epsilon_cumulative >= 0.0) || clip_fraction < 0.0 || clip_fraction > 1.0) {
        throw ConfigError("privacy_score: inputs out of range");
    }
    return 0.7 * std::exp(-epsilon_cumulative) + 0.3 * clip_fraction;
}

void LatencyParams::validate() const {
    if (!(base_compute_rate > 0.0) || !(base_link_rate > 0.0)) {
        throw ConfigError("LatencyParams: rates must be positive");
    }
}

double estimate_round_flops(std::size_t param_count, std::size_t windows, std::size_t seq_len,
                            std::size_t epochs) {
    return 6.0 * static_cast<double>(param_count) * static_cast<double>(windows) *
           static_cast<double>(seq_len) * static_cast<double>(epochs);
}

double compute_ms(double flops, const LatencyParams& lat, double speed_factor) {
    lat.validate();
    if (!(speed_factor > 0.0)) throw ConfigError("compute_ms: speed_factor must be positive");
    return flops / (lat.base_compute_rate * speed_factor);
}

double comm_ms(std::size_t bytes, const LatencyParams& lat, double link_factor) {
    lat.validate();
    if (!(link_factor > 0.0)) throw ConfigError("comm_ms: link_factor must be positive");
    return static_cast<double>(bytes) / (lat.base_link_rate * link_factor);
}

double default_speed_factor(std::size_t client_id) {
    return 0.85 + 0.1 * static_cast<double>(client_id % 5);
}

double default_link_factor(std::size_t client_id) {
    return 0.9 + 0.1 * static_cast<double>(client_id % 5);
}

void FederationConfig::validate() const {
    std::string problems;
    auto note = [&problems](const std::string& p) {
        if (!problems.empty()) problems += "; ";
        problems += p;
    };
    if (n_clients < 1) note("n_clients must be at least 1");
    if (rounds < 1) note("rounds must be at least 1");
    if (trace_steps < 16) note("trace_steps must be at least 16");
    if (!(eval_fraction > 0.0) || !(eval_fraction < 1.0)) {
        note("eval_fraction must lie in (0, 1)");
    }
    if (!(accuracy_tolerance > 0.0)) note("accuracy_tolerance must be positive");
    try {
        model.validate();
    } catch (const ConfigError& e) {
        note(e.what());
    }
    try {
        loss.validate();
    } catch (const ConfigError& e) {
        note(e.what());
    }
    try {
        privacy.validate();
    } catch (const ConfigError& e) {
        note(e.what());
    }
    try {
        training.validate();
    } catch (const ConfigError& e) {
        note(e.what());
    }
    try {
        latency.validate();
    } catch (const ConfigError& e) {
        note(e.what());
    }
    if (!problems.empty()) throw ConfigError("FederationConfig: " + problems);
}

Federation::Federation(FederationConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    global_ = init_params(cfg_.model, cfg_.master_seed);

    clients_.reserve(cfg_.n_clients);
    for (std::size_t i = 0; i < cfg_.n_clients; ++i) {
        ClientState client;
        client.id = i;
        client.data_seed = derive_seed({cfg_.master_seed, kStreamTrace, i});
        client.speed_factor = default_speed_factor(i);
        client.link_factor = default_link_factor(i);

        RawTrace trace = generate_trace(client.data_seed, cfg_.trace_steps, client_profile(i));
        PreprocessResult pre = preprocess_trace(trace);
        SequenceData all =
            make_sequences(pre.scaled, cfg_.model.seq_len, 1, kDefaultTargetFeatures);

        const std::size_t n_eval = std::max<std::size_t>(
            1, static_cast<std::size_t>(static_cast<double>(all.count) * cfg_.eval_fraction));
        if (all.count < n_eval + 1) {
            throw DataError("client " + std::to_string(i) +
                            ": trace too short to hold out an evaluation tail");
        }
        const std::size_t n_train = all.count - n_eval;
        client.train_data = slice_sequence(all, 0, n_train);
        client.eval_data = slice_sequence(all, n_train, all.count);
        clients_.push_back(std::move(client));
    }
}

EvalStats Federation::evaluate_global() {
    EvalStats pooled;
    double se = 0.0, ae = 0.0, hit = 0.0;
    std::size_t elements = 0;
    for (auto& client : clients_) {
        EvalStats s = evaluate_model(cfg_.model, global_, client.eval_data,
                                     cfg_.accuracy_tolerance);
        const std::size_t n = s.count * client.eval_data.targets.cols();
        se += s.mse * static_cast<double>(n);
        ae += s.mae * static_cast<double>(n);
        hit += s.accuracy * static_cast<double>(n);
        elements += n;
        pooled.count += s.count;
    }
    pooled.mse = se / static_cast<double>(elements);
    pooled.mae = ae / static_cast<double>(elements);
    pooled.accuracy = hit / static_cast<double>(elements);
    return pooled;
}

RoundMetrics Federation::run_round() {
    ++round_;
    const bool dp_off = cfg_.privacy.mode == DpMode::off;
    PrivacySpec round_spec = cfg_.privacy;
    round_spec.rounds = cfg_.rounds;
    const double eps_round = round_epsilon(round_spec);

    // Broadcast: every client trains from the decoded quantized download, so
    // the simulated link is the one the model actually experiences.
    const std::vector<double> flat_global = global_.flatten_values();
    const std::vector<std::uint8_t> broadcast = pack_update(flat_global, WireFormat::q16);
    const std::vector<double> received = unpack_update(broadcast);

    RoundMetrics metrics;
    metrics.round = round_;
    metrics.epsilon_round = dp_off ? 0.0 : eps_round;

    std::vector<std::vector<double>> aggregated;
    aggregated.reserve(clients_.size());
    double loss_sum = 0.0, clip_sum = 0.0, local_acc_sum = 0.0;

    for (auto& client : clients_) {
        ClientRoundMetrics cm;
        cm.client_id = client.id;
        cm.download_bytes = broadcast.size();

        ParamSet local = global_.clone();
        local.load_values(received);

        TrainOptions options = cfg_.training;
        options.dropout_seed =
            derive_seed({cfg_.master_seed, kStreamDropout, client.id, round_});
        options.noise_seed =
            derive_seed({cfg_.master_seed, kStreamDpNoise, client.id, round_});

        LocalStats stats = with_client_context(client.id, round_, [&] {
            return local_train(local, client.train_data, cfg_.model, cfg_.loss, round_spec,
                               eps_round, options);
        });

        EvalStats local_eval = with_client_context(client.id, round_, [&] {
            return evaluate_model(cfg_.model, local, client.eval_data,
                                  cfg_.accuracy_tolerance);
        });

        const std::vector<double> flat_local = local.flatten_values();
        std::vector<double> delta = model_delta(flat_local, received);
        cm.update_norm = l2_norm(delta);

        const std::vector<std::uint8_t> upload = pack_update(delta, WireFormat::fp32);
        const std::vector<double> delta_received = unpack_update(upload);
        cm.upload_bytes = upload.size();

        std::vector<double> reconstructed(received.size());
        for (std::size_t i = 0; i < reconstructed.size(); ++i) {
            reconstructed[i] = received[i] + delta_received[i];
        }
        aggregated.push_back(std::move(reconstructed));

        cm.train_loss = stats.mean_loss;
        cm.clip_fraction = stats.clip_fraction;
        cm.local_accuracy = local_eval.accuracy;

        const double flops = estimate_round_flops(param_count(global_), client.train_data.count,
                                                  cfg_.model.seq_len, cfg_.training.epochs);
        cm.compute_ms = compute_ms(flops, cfg_.latency, client.speed_factor);
        cm.comm_ms = comm_ms(cm.upload_bytes + cm.download_bytes, cfg_.latency,
                             client.link_factor);

        loss_sum += cm.train_loss;
        clip_sum += cm.clip_fraction;
        local_acc_sum += cm.local_accuracy;
        metrics.total_upload_bytes += cm.upload_bytes;
        metrics.total_download_bytes += cm.download_bytes;
        metrics.round_latency_ms =
            std::max(metrics.round_latency_ms, cm.compute_ms + cm.comm_ms);
        metrics.clients.push_back(std::move(cm));
    }

    global_.load_values(fedavg(aggregated));
    if (!dp_off) ledger_.record_spend(eps_round);

    const double n = static_cast<double>(clients_.size());
    metrics.mean_train_loss = loss_sum / n;
    metrics.mean_clip_fraction = clip_sum / n;
    metrics.mean_local_accuracy = local_acc_sum / n;
    metrics.epsilon_cumulative = ledger_.cumulative();
    metrics.privacy_score = privacy_score(metrics.epsilon_cumulative,
                                          metrics.mean_clip_fraction);

    EvalStats global_eval = evaluate_global();
    metrics.global_accuracy = global_eval.accuracy;
    metrics.global_mse = global_eval.mse;
    metrics.global_mae = global_eval.mae;
    return metrics;
}

std::vector<RoundMetrics> Federation::run() {
    std::vector<RoundMetrics> history;
    history.reserve(cfg_.rounds);
    for (std::size_t r = 0; r < cfg_.rounds; ++r) history.push_back(run_round());
    return history;
}

}  // namespace fedtst
