#include "fedtst/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "fedtst/errors.hpp"
#include "fedtst/serialize.hpp"

namespace fedtst {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& value, const std::string& context) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError(context + "cannot parse '" + value + "' as a number");
    }
}

std::size_t parse_size(const std::string& value, const std::string& context) {
    try {
        std::size_t used = 0;
        const long long parsed = std::stoll(value, &used);
        if (used != value.size() || parsed < 0) throw std::invalid_argument("bad count");
        return static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
        throw ConfigError(context + "cannot parse '" + value + "' as a non-negative integer");
    }
}

std::uint64_t parse_u64(const std::string& value, const std::string& context) {
    try {
        std::size_t used = 0;
        const unsigned long long parsed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::uint64_t>(parsed);
    } catch (const std::exception&) {
        throw ConfigError(context + "cannot parse '" + value + "' as an unsigned integer");
    }
}

DpMode parse_mode(const std::string& value, const std::string& context) {
    if (value == "off") return DpMode::off;
    if (value == "budget_split") return DpMode::per_round_budget;
    if (value == "fixed_epsilon") return DpMode::fixed_epsilon;
    throw ConfigError(context + "dp.mode must be one of off, budget_split, fixed_epsilon (got '" +
                      value + "')");
}

std::string mode_name(DpMode mode) {
    switch (mode) {
        case DpMode::off: return "off";
        case DpMode::per_round_budget: return "budget_split";
        case DpMode::fixed_epsilon: return "fixed_epsilon";
    }
    return "?";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

void finish_out(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

void flatten_json(const nlohmann::json& node, const std::string& prefix,
                  std::vector<std::pair<std::string, std::string>>& flat,
                  const std::string& context) {
    if (node.is_object()) {
        for (const auto& [key, value] : node.items()) {
            flatten_json(value, prefix.empty() ? key : prefix + "." + key, flat, context);
        }
        return;
    }
    if (node.is_string()) {
        flat.emplace_back(prefix, node.get<std::string>());
    } else if (node.is_number() || node.is_boolean()) {
        flat.emplace_back(prefix, node.dump());
    } else {
        throw ConfigError(context + "unsupported value type for key '" + prefix + "'");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    std::string problems;
    try {
        federation.validate();
    } catch (const ConfigError& e) {
        problems = e.what();
    }
    if (out_dir.empty()) {
        if (!problems.empty()) problems += "; ";
        problems += "out_dir must not be empty";
    }
    if (!problems.empty()) throw ConfigError(problems);
}

ExperimentConfig default_experiment() {
    return ExperimentConfig{};
}

std::vector<std::pair<std::string, std::string>> setting_help() {
    return {
        {"clients", "number of simulated vehicles (default 5)"},
        {"rounds", "federated rounds (default 10)"},
        {"epochs", "local epochs per round (default 2)"},
        {"batch_size", "local mini-batch size (default 32)"},
        {"trace_steps", "synthetic drive length per client (default 120)"},
        {"eval_fraction", "chronological tail held out per client (default 0.25)"},
        {"accuracy_tolerance", "tolerance band in scaled units (default 0.5)"},
        {"master_seed", "seed for all randomness (default 42)"},
        {"out_dir", "artifact directory (default out)"},
        {"dp.mode", "off | budget_split | fixed_epsilon (default budget_split)"},
        {"dp.epsilon", "total privacy budget (default 0.8)"},
        {"dp.delta", "privacy failure probability (default 1e-5)"},
        {"dp.clip_norm", "gradient L2 bound (default 1.5)"},
        {"dp.sensitivity_divisor", "sensitivity = clip_norm / divisor (default 1)"},
        {"model.d_model", "transformer width (default 64)"},
        {"model.n_heads", "attention heads (default 4)"},
        {"model.n_layers", "transformer blocks (default 2)"},
        {"model.d_ff", "feed-forward width (default 128)"},
        {"model.seq_len", "input window length (default 15)"},
        {"model.dropout", "dropout rate during training (default 0.1)"},
        {"loss.alpha", "MSE share of the MSE/MAE blend (default 0.5)"},
        {"loss.huber_weight", "Huber term weight (default 0.2)"},
        {"loss.huber_delta", "Huber corner (default 1.0)"},
        {"loss.w_smooth", "prediction roughness weight (default 0.05)"},
        {"loss.w_direction", "movement disagreement weight (default 0.05)"},
        {"loss.w_temporal", "movement mismatch weight (default 0.1)"},
        {"opt.lr", "AdamW base learning rate (default 0.0005)"},
        {"opt.weight_decay", "decoupled weight decay (default 0.01)"},
        {"latency.compute_rate", "device flop/ms at speed factor 1 (default 90000)"},
        {"latency.link_rate", "link bytes/ms at link factor 1 (default 1200)"},
    };
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& context) {
    const std::string ctx = context.empty() ? "" : context + ": ";
    FederationConfig& fed = cfg.federation;

    if (key == "clients") fed.n_clients = parse_size(value, ctx);
    else if (key == "rounds") {
        fed.rounds = parse_size(value, ctx);
        fed.privacy.rounds = fed.rounds;
    }
    else if (key == "epochs") fed.training.epochs = parse_size(value, ctx);
    else if (key == "batch_size") fed.training.batch_size = parse_size(value, ctx);
    else if (key == "trace_steps") fed.trace_steps = parse_size(value, ctx);
    else if (key == "eval_fraction") fed.eval_fraction = parse_double(value, ctx);
    else if (key == "accuracy_tolerance") fed.accuracy_tolerance = parse_double(value, ctx);
    else if (key == "master_seed") fed.master_seed = parse_u64(value, ctx);
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "dp.mode") fed.privacy.mode = parse_mode(value, ctx);
    else if (key == "dp.epsilon") fed.privacy.epsilon_total = parse_double(value, ctx);
    else if (key == "dp.delta") fed.privacy.delta = parse_double(value, ctx);
    else if (key == "dp.clip_norm") fed.privacy.clip_norm = parse_double(value, ctx);
    else if (key == "dp.sensitivity_divisor") {
        fed.privacy.sensitivity_divisor = parse_double(value, ctx);
    }
    else if (key == "model.d_model") fed.model.d_model = parse_size(value, ctx);
    else if (key == "model.n_heads") fed.model.n_heads = parse_size(value, ctx);
    else if (key == "model.n_layers") fed.model.n_layers = parse_size(value, ctx);
    else if (key == "model.d_ff") fed.model.d_ff = parse_size(value, ctx);
    else if (key == "model.seq_len") fed.model.seq_len = parse_size(value, ctx);
    else if (key == "model.dropout") fed.model.dropout_rate = parse_double(value, ctx);
    else if (key == "loss.alpha") fed.loss.alpha = parse_double(value, ctx);
    else if (key == "loss.huber_weight") fed.loss.huber_weight = parse_double(value, ctx);
    else if (key == "loss.huber_delta") fed.loss.huber_delta = parse_double(value, ctx);
    else if (key == "loss.w_smooth") fed.loss.w_smooth = parse_double(value, ctx);
    else if (key == "loss.w_direction") fed.loss.w_direction = parse_double(value, ctx);
    else if (key == "loss.w_temporal") fed.loss.w_temporal = parse_double(value, ctx);
    else if (key == "opt.lr") fed.training.optimizer.base_lr = parse_double(value, ctx);
    else if (key == "opt.weight_decay") {
        fed.training.optimizer.weight_decay = parse_double(value, ctx);
    }
    else if (key == "latency.compute_rate") {
        fed.latency.base_compute_rate = parse_double(value, ctx);
    }
    else if (key == "latency.link_rate") fed.latency.base_link_rate = parse_double(value, ctx);
    else throw ConfigError(ctx + "unknown key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);

    ExperimentConfig cfg = default_experiment();
    const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;

    if (is_json) {
        nlohmann::json doc;
        try {
            std::stringstream buffer;
            buffer << in.rdbuf();
            const std::string text = buffer.str();
            if (text.find_first_not_of(" \t\r\n") == std::string::npos) return cfg;
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ": invalid JSON: " + e.what());
        }
        if (!doc.is_object()) throw ConfigError(path + ": top level must be an object");
        std::vector<std::pair<std::string, std::string>> flat;
        flatten_json(doc, "", flat, path + ": ");
        for (const auto& [key, value] : flat) {
            apply_setting(cfg, key, value, path);
        }
        return cfg;
    }

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string context = path + " line " + std::to_string(line_no);
        std::string text = line;
        const std::size_t hash = text.find('#');
        if (hash != std::string::npos) text.erase(hash);
        auto trim = [](std::string s) {
            const auto begin = s.find_first_not_of(" \t\r");
            const auto end = s.find_last_not_of(" \t\r");
            return begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
        };
        text = trim(text);
        if (text.empty()) continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(context + ": expected key=value");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw ConfigError(context + ": empty key");
        apply_setting(cfg, key, value, context);
    }
    return cfg;
}

namespace {

ordered_json config_echo(const ExperimentConfig& cfg) {
    const FederationConfig& fed = cfg.federation;
    ordered_json j;
    j["clients"] = fed.n_clients;
    j["rounds"] = fed.rounds;
    j["epochs"] = fed.training.epochs;
    j["batch_size"] = fed.training.batch_size;
    j["trace_steps"] = fed.trace_steps;
    j["eval_fraction"] = fed.eval_fraction;
    j["accuracy_tolerance"] = fed.accuracy_tolerance;
    j["master_seed"] = fed.master_seed;
    j["out_dir"] = cfg.out_dir;
    j["dp"] = {{"mode", mode_name(fed.privacy.mode)},
               {"epsilon", fed.privacy.epsilon_total},
               {"delta", fed.privacy.delta},
               {"clip_norm", fed.privacy.clip_norm},
               {"sensitivity_divisor", fed.privacy.sensitivity_divisor}};
    j["model"] = {{"n_features", fed.model.n_features}, {"d_model", fed.model.d_model},
                  {"n_heads", fed.model.n_heads},       {"n_layers", fed.model.n_layers},
                  {"d_ff", fed.model.d_ff},             {"seq_len", fed.model.seq_len},
                  {"n_outputs", fed.model.n_outputs},   {"dropout", fed.model.dropout_rate}};
    j["loss"] = {{"alpha", fed.loss.alpha},
                 {"huber_weight", fed.loss.huber_weight},
                 {"huber_delta", fed.loss.huber_delta},
                 {"w_smooth", fed.loss.w_smooth},
                 {"w_direction", fed.loss.w_direction},
                 {"w_temporal", fed.loss.w_temporal}};
    j["opt"] = {{"lr", fed.training.optimizer.base_lr},
                {"weight_decay", fed.training.optimizer.weight_decay}};
    j["latency"] = {{"compute_rate", fed.latency.base_compute_rate},
                    {"link_rate", fed.latency.base_link_rate}};
    return j;
}

void write_metrics_csv(const fs::path& path, const std::vector<RoundMetrics>& rounds) {
    std::ofstream out = open_out(path);
    out << "round,scope,client_id,accuracy,mse,mae,loss,clip_fraction,update_norm,"
           "epsilon_round,epsilon_cumulative,privacy_score,upload_bytes,download_bytes,"
           "compute_ms,comm_ms,latency_ms\n";
    for (const auto& r : rounds) {
        out << r.round << ",global,," << fmt(r.global_accuracy) << ',' << fmt(r.global_mse)
            << ',' << fmt(r.global_mae) << ',' << fmt(r.mean_train_loss) << ','
            << fmt(r.mean_clip_fraction) << ",," << fmt(r.epsilon_round) << ','
            << fmt(r.epsilon_cumulative) << ',' << fmt(r.privacy_score) << ','
            << r.total_upload_bytes << ',' << r.total_download_bytes << ",,,"
            << fmt(r.round_latency_ms) << '\n';
        for (const auto& c : r.clients) {
            out << r.round << ",client," << c.client_id << ',' << fmt(c.local_accuracy)
                << ",,," << fmt(c.train_loss) << ',' << fmt(c.clip_fraction) << ','
                << fmt(c.update_norm) << ",,,," << c.upload_bytes << ',' << c.download_bytes
                << ',' << fmt(c.compute_ms) << ',' << fmt(c.comm_ms) << ','
                << fmt(c.compute_ms + c.comm_ms) << '\n';
        }
    }
    finish_out(out, path);
}

void write_figures(const fs::path& dir, const std::vector<RoundMetrics>& rounds) {
    {
        const fs::path path = dir / "accuracy_vs_round.csv";
        std::ofstream out = open_out(path);
        out << "round,global_accuracy,mean_local_accuracy\n";
        for (const auto& r : rounds) {
            out << r.round << ',' << fmt(r.global_accuracy) << ','
                << fmt(r.mean_local_accuracy) << '\n';
        }
        finish_out(out, path);
    }
    {
        const fs::path path = dir / "bytes_vs_round.csv";
        std::ofstream out = open_out(path);
        out << "round,upload_bytes,download_bytes,cumulative_bytes\n";
        std::size_t cumulative = 0;
        for (const auto& r : rounds) {
            cumulative += r.total_upload_bytes + r.total_download_bytes;
            out << r.round << ',' << r.total_upload_bytes << ',' << r.total_download_bytes
                << ',' << cumulative << '\n';
        }
        finish_out(out, path);
    }
    {
        const fs::path path = dir / "latency_per_client.csv";
        std::ofstream out = open_out(path);
        out << "client_id,compute_ms,comm_ms,total_ms\n";
        if (!rounds.empty()) {
            for (const auto& c : rounds.back().clients) {
                out << c.client_id << ',' << fmt(c.compute_ms) << ',' << fmt(c.comm_ms) << ','
                    << fmt(c.compute_ms + c.comm_ms) << '\n';
            }
        }
        finish_out(out, path);
    }
}

void write_summary_json(const fs::path& path, const ExperimentConfig& cfg,
                        const std::vector<RoundMetrics>& rounds, const Federation& fed) {
    const FederationConfig& fc = cfg.federation;
    ordered_json j;
    j["config"] = config_echo(cfg);

    ordered_json round_rows = ordered_json::array();
    ordered_json curve = ordered_json::array();
    ordered_json local_curve = ordered_json::array();
    for (const auto& r : rounds) {
        curve.push_back(r.global_accuracy);
        local_curve.push_back(r.mean_local_accuracy);
        round_rows.push_back({{"round", r.round},
                              {"global_accuracy", r.global_accuracy},
                              {"mean_local_accuracy", r.mean_local_accuracy},
                              {"global_mse", r.global_mse},
                              {"global_mae", r.global_mae},
                              {"mean_train_loss", r.mean_train_loss},
                              {"mean_clip_fraction", r.mean_clip_fraction},
                              {"epsilon_round", r.epsilon_round},
                              {"epsilon_cumulative", r.epsilon_cumulative},
                              {"privacy_score", r.privacy_score},
                              {"round_latency_ms", r.round_latency_ms},
                              {"upload_bytes", r.total_upload_bytes},
                              {"download_bytes", r.total_download_bytes}});
    }
    j["rounds"] = round_rows;

    const bool dp_off = fc.privacy.mode == DpMode::off;
    PrivacySpec spec = fc.privacy;
    spec.rounds = fc.rounds;
    const double per_round = dp_off ? 0.0 : round_epsilon(spec);
    ordered_json privacy;
    privacy["mode"] = mode_name(fc.privacy.mode);
    privacy["epsilon_total"] = fc.privacy.epsilon_total;
    privacy["delta"] = fc.privacy.delta;
    privacy["clip_norm"] = fc.privacy.clip_norm;
    privacy["per_round_epsilon"] = per_round;
    privacy["noise_sigma_per_round"] =
        dp_off ? 0.0
               : noise_scale(fc.privacy.clip_norm / fc.privacy.sensitivity_divisor, per_round,
                             fc.privacy.delta);
    privacy["spends"] = fed.ledger().spends();
    privacy["epsilon_cumulative"] = fed.ledger().cumulative();
    if (fc.privacy.mode == DpMode::per_round_budget) {
        privacy["budget_tension"] =
            "Splitting epsilon_total=" + fmt(fc.privacy.epsilon_total) + " across " +
            std::to_string(fc.rounds) + " rounds leaves " + fmt(per_round) +
            " per round; per-round noise grows as 1/epsilon_round, so adding rounds tightens "
            "composition but makes each update noisier.";
    } else if (fc.privacy.mode == DpMode::fixed_epsilon) {
        privacy["budget_tension"] =
            "Fixed per-round epsilon: the ledger total grows linearly with rounds instead of "
            "being held to a preset budget.";
    } else {
        privacy["budget_tension"] = "Privacy disabled: no budget is being spent.";
    }
    j["privacy"] = privacy;

    ordered_json accuracy;
    accuracy["global_curve"] = curve;
    accuracy["mean_local_curve"] = local_curve;
    if (!rounds.empty()) {
        accuracy["first_round_global"] = rounds.front().global_accuracy;
        accuracy["final_global"] = rounds.back().global_accuracy;
        accuracy["final_mean_local"] = rounds.back().mean_local_accuracy;
        accuracy["improvement"] =
            rounds.back().global_accuracy - rounds.front().global_accuracy;
    }
    j["accuracy"] = accuracy;

    std::size_t upload = 0, download = 0;
    for (const auto& r : rounds) {
        upload += r.total_upload_bytes;
        download += r.total_download_bytes;
    }
    const std::size_t n_params = param_count(fed.global_params());
    ordered_json comm;
    comm["model_parameters"] = n_params;
    comm["upload_bytes_per_client_per_round"] = wire_bytes(n_params, WireFormat::fp32);
    comm["download_bytes_per_client_per_round"] = wire_bytes(n_params, WireFormat::q16);
    comm["compression_ratio"] = compression_ratio(n_params);
    comm["total_upload_bytes"] = upload;
    comm["total_download_bytes"] = download;
    j["communication"] = comm;

    ordered_json latency;
    if (!rounds.empty()) {
        ordered_json per_client = ordered_json::array();
        for (const auto& c : rounds.back().clients) {
            per_client.push_back({{"client_id", c.client_id},
                                  {"compute_ms", c.compute_ms},
                                  {"comm_ms", c.comm_ms},
                                  {"total_ms", c.compute_ms + c.comm_ms}});
        }
        latency["final_round_per_client"] = per_client;
        latency["max_round_ms"] = rounds.back().round_latency_ms;
    }
    j["latency"] = latency;

    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
    finish_out(out, path);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const fs::path out_dir(cfg.out_dir);
    const fs::path fig_dir = out_dir / "figures";
    std::error_code ec;
    fs::create_directories(fig_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + fig_dir.string());

    Federation fed(cfg.federation);
    std::vector<RoundMetrics> rounds = fed.run();

    ExperimentResult result;
    result.rounds = rounds;
    result.final_global_accuracy = rounds.back().global_accuracy;
    result.final_mean_local_accuracy = rounds.back().mean_local_accuracy;
    result.epsilon_cumulative = fed.ledger().cumulative();

    const fs::path metrics_path = out_dir / "metrics.csv";
    write_metrics_csv(metrics_path, rounds);
    result.metrics_csv_path = metrics_path.string();

    const fs::path summary_path = out_dir / "summary.json";
    write_summary_json(summary_path, cfg, rounds, fed);
    result.summary_json_path = summary_path.string();

    write_figures(fig_dir, rounds);
    save_params((out_dir / "global_model.bin").string(), fed.global_params());
    return result;
}

SweepResult sweep_epsilon(const ExperimentConfig& base, const std::vector<double>& epsilons,
                          const std::vector<std::uint64_t>& seeds, bool include_baseline) {
    if (epsilons.empty()) throw ConfigError("sweep_epsilon: no epsilon values");
    for (double e : epsilons) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            throw ConfigError("sweep_epsilon: every epsilon must be positive (got " + fmt(e) +
                              "); privacy cannot be bought for free");
        }
    }
    if (seeds.empty()) throw ConfigError("sweep_epsilon: no seeds");
    base.validate();

    std::vector<double> ordered_eps = epsilons;
    std::sort(ordered_eps.begin(), ordered_eps.end());

    auto run_point = [&](double epsilon, bool off) {
        SweepPoint point;
        point.epsilon = off ? 0.0 : epsilon;
        double acc_sum = 0.0;
        for (std::uint64_t seed : seeds) {
            FederationConfig fc = base.federation;
            fc.master_seed = seed;
            if (off) {
                fc.privacy.mode = DpMode::off;
            } else {
                fc.privacy.mode = DpMode::fixed_epsilon;
                fc.privacy.epsilon_total = epsilon;
            }
            Federation fed(fc);
            std::vector<RoundMetrics> rounds = fed.run();
            SweepSeedOutcome outcome;
            outcome.seed = seed;
            outcome.final_accuracy = rounds.back().global_accuracy;
            outcome.final_loss = rounds.back().mean_train_loss;
            acc_sum += outcome.final_accuracy;
            point.seeds.push_back(outcome);
        }
        point.mean_final_accuracy = acc_sum / static_cast<double>(seeds.size());
        return point;
    };

    SweepResult result;
    for (double epsilon : ordered_eps) {
        result.points.push_back(run_point(epsilon, /*off=*/false));
    }
    if (include_baseline) {
        result.has_baseline = true;
        result.baseline = run_point(0.0, /*off=*/true);
    }

    const fs::path out_dir(base.out_dir);
    const fs::path fig_dir = out_dir / "figures";
    std::error_code ec;
    fs::create_directories(fig_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + fig_dir.string());

    {
        const fs::path path = fig_dir / "accuracy_vs_epsilon.csv";
        std::ofstream out = open_out(path);
        out << "epsilon,seed,final_accuracy,mean_final_accuracy\n";
        auto rows = [&out](const SweepPoint& p, const std::string& label) {
            for (const auto& s : p.seeds) {
                out << label << ',' << s.seed << ',' << fmt(s.final_accuracy) << ','
                    << fmt(p.mean_final_accuracy) << '\n';
            }
        };
        if (result.has_baseline) rows(result.baseline, "off");
        for (const auto& p : result.points) rows(p, fmt(p.epsilon));
        finish_out(out, path);
        result.table_csv_path = path.string();
    }
    {
        const fs::path path = out_dir / "sweep_summary.json";
        ordered_json j;
        j["epsilons"] = ordered_eps;
        j["seeds"] = seeds;
        auto point_json = [](const SweepPoint& p) {
            ordered_json pj;
            pj["epsilon"] = p.epsilon;
            ordered_json per_seed = ordered_json::array();
            for (const auto& s : p.seeds) {
                per_seed.push_back({{"seed", s.seed},
                                    {"final_accuracy", s.final_accuracy},
                                    {"final_loss", s.final_loss}});
            }
            pj["per_seed"] = per_seed;
            pj["mean_final_accuracy"] = p.mean_final_accuracy;
            return pj;
        };
        ordered_json points = ordered_json::array();
        bool monotone = true;
        for (std::size_t i = 0; i < result.points.size(); ++i) {
            points.push_back(point_json(result.points[i]));
            if (i > 0 && result.points[i].mean_final_accuracy <
                             result.points[i - 1].mean_final_accuracy) {
                monotone = false;
            }
        }
        j["points"] = points;
        if (result.has_baseline) j["baseline_privacy_off"] = point_json(result.baseline);
        j["mean_accuracy_non_decreasing_in_epsilon"] = monotone;
        std::ofstream out = open_out(path);
        out << j.dump(2) << '\n';
        finish_out(out, path);
        result.summary_json_path = path.string();
    }
    return result;
}

}  // namespace fedtst
