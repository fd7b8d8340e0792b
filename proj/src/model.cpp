#include "fedtst/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "fedtst/errors.hpp"

namespace fedtst {

namespace {

constexpr double kLayerNormEps = 1e-5;

std::string layer_name(std::size_t layer, const char* suffix) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "layer%02zu.%s", layer, suffix);
    return buf;
}

enum class Init { glorot, zero, one, feature_weights };

struct TensorSpec {
    std::string name;
    std::vector<std::size_t> shape;
    Init init;
};

std::vector<TensorSpec> tensor_specs(const TstConfig& c) {
    std::vector<TensorSpec> specs;
    const std::size_t d = c.d_model;
    specs.push_back({"feature_weights", {c.n_features}, Init::feature_weights});
    specs.push_back({"proj1.weight", {c.n_features, d}, Init::glorot});
    specs.push_back({"proj1.bias", {d}, Init::zero});
    specs.push_back({"proj2.weight", {d, d}, Init::glorot});
    specs.push_back({"proj2.bias", {d}, Init::zero});
    for (std::size_t l = 0; l < c.n_layers; ++l) {
        for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
            specs.push_back({layer_name(l, w), {d, d}, Init::glorot});
        }
        // No key bias: softmax is invariant to a constant shift of every
        // score in a row, so a key bias can never influence the output and
        // would only sit in the update as dead weight.
        for (const char* b : {"attn.bq", "attn.bv", "attn.bo"}) {
            specs.push_back({layer_name(l, b), {d}, Init::zero});
        }
        specs.push_back({layer_name(l, "ln1.gain"), {d}, Init::one});
        specs.push_back({layer_name(l, "ln1.bias"), {d}, Init::zero});
        specs.push_back({layer_name(l, "ln2.gain"), {d}, Init::one});
        specs.push_back({layer_name(l, "ln2.bias"), {d}, Init::zero});
        specs.push_back({layer_name(l, "ff1.weight"), {d, c.d_ff}, Init::glorot});
        specs.push_back({layer_name(l, "ff1.bias"), {c.d_ff}, Init::zero});
        specs.push_back({layer_name(l, "ff2.weight"), {c.d_ff, d}, Init::glorot});
        specs.push_back({layer_name(l, "ff2.bias"), {d}, Init::zero});
    }
    specs.push_back({"final_norm.gain", {d}, Init::one});
    specs.push_back({"final_norm.bias", {d}, Init::zero});
    specs.push_back({"output.weight", {d, c.n_outputs}, Init::glorot});
    specs.push_back({"output.bias", {c.n_outputs}, Init::zero});
    return specs;
}

}  // namespace

void TstConfig::validate() const {
    if (n_features == 0 || d_model == 0 || n_heads == 0 || n_layers == 0 || d_ff == 0 ||
        seq_len == 0 || n_outputs == 0) {
        throw ConfigError("model dimensions must all be at least 1");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("d_model " + std::to_string(d_model) +
                          " not divisible by n_heads " + std::to_string(n_heads));
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout_rate must be in [0, 1)");
    }
}

TstConfig payload_matched_config() {
    TstConfig c;
    c.d_model = 176;
    c.d_ff = 352;
    return c;
}

ParamSet init_params(const TstConfig& config, std::uint64_t seed) {
    config.validate();
    std::vector<TensorSpec> specs = tensor_specs(config);
    // Draw in canonical order: initialization then depends only on (config,
    // seed), not on the construction sequence above.
    std::sort(specs.begin(), specs.end(),
              [](const TensorSpec& a, const TensorSpec& b) { return a.name < b.name; });

    Rng rng(derive_seed({seed, kStreamInit}));
    ParamSet params;
    for (const TensorSpec& spec : specs) {
        Tensor t = Tensor::zeros(spec.shape);
        switch (spec.init) {
            case Init::glorot: {
                const std::size_t fan_in = spec.shape[0];
                const std::size_t fan_out = spec.shape.back();
                const double bound = std::sqrt(6.0 / double(fan_in + fan_out));
                for (double& v : t.values()) v = rng.uniform(-bound, bound);
                break;
            }
            case Init::zero:
                break;
            case Init::one:
                for (double& v : t.values()) v = 1.0;
                break;
            case Init::feature_weights:
                for (double& v : t.values()) v = rng.uniform(1.5, 2.5);
                break;
        }
        params.add(spec.name, std::move(t));
    }
    return params;
}

std::size_t param_count(const ParamSet& params) { return params.element_count(); }

Tensor positional_encoding(std::size_t seq_len, std::size_t d_model) {
    Tensor pe = Tensor::zeros({seq_len, d_model});
    auto v = pe.values();
    for (std::size_t t = 0; t < seq_len; ++t) {
        for (std::size_t i = 0; i < d_model; i += 2) {
            const double freq = std::pow(10000.0, -double(i) / double(d_model));
            v[t * d_model + i] = std::sin(double(t) * freq);
            if (i + 1 < d_model) v[t * d_model + i + 1] = std::cos(double(t) * freq);
        }
    }
    return pe;
}

Tensor attention_block(Tape& tape, const TstConfig& config, ParamSet& params,
                       std::size_t layer, const Tensor& x, std::size_t batch, bool training,
                       Rng& rng, Tensor* attn_out) {
    Tensor h = layer_norm(tape, x, params.at(layer_name(layer, "ln1.gain")),
                          params.at(layer_name(layer, "ln1.bias")), kLayerNormEps);
    Tensor q = add_bias(tape, matmul(tape, h, params.at(layer_name(layer, "attn.wq"))),
                        params.at(layer_name(layer, "attn.bq")));
    Tensor k = matmul(tape, h, params.at(layer_name(layer, "attn.wk")));
    Tensor v = add_bias(tape, matmul(tape, h, params.at(layer_name(layer, "attn.wv"))),
                        params.at(layer_name(layer, "attn.bv")));
    const std::size_t seq_len = x.rows() / batch;
    Tensor att = multihead_attention(tape, q, k, v, batch, seq_len, config.n_heads, attn_out);
    Tensor proj = add_bias(tape, matmul(tape, att, params.at(layer_name(layer, "attn.wo"))),
                           params.at(layer_name(layer, "attn.bo")));
    if (training && config.dropout_rate > 0.0) {
        proj = dropout(tape, proj, config.dropout_rate, rng);
    }
    return add(tape, x, proj);
}

Tensor forward(Tape& tape, const TstConfig& config, ParamSet& params, const Tensor& inputs,
               bool training, Rng& rng, Tensor* attn_out) {
    config.validate();
    if (inputs.rank() != 3 || inputs.shape()[1] != config.seq_len ||
        inputs.shape()[2] != config.n_features) {
        throw DimensionError("forward: expected inputs [B, " + std::to_string(config.seq_len) +
                             ", " + std::to_string(config.n_features) + "], got " +
                             shape_to_string(inputs.shape()));
    }
    for (double v : inputs.values()) {
        if (!std::isfinite(v)) throw NumericError("forward: non-finite input");
    }

    const std::size_t batch = inputs.shape()[0];
    const std::size_t rows = batch * config.seq_len;

    Tensor x = inputs.reshape({rows, config.n_features});
    x = mul_rows(tape, x, params.at("feature_weights"));
    x = add_bias(tape, matmul(tape, x, params.at("proj1.weight")), params.at("proj1.bias"));
    x = gelu(tape, x);
    x = add_bias(tape, matmul(tape, x, params.at("proj2.weight")), params.at("proj2.bias"));

    // Row r of x is (batch r / seq_len, timestep r % seq_len), so a cyclic
    // add with period seq_len applies the encoding at every batch offset.
    x = add_cyclic_rows(tape, x, positional_encoding(config.seq_len, config.d_model));

    for (std::size_t l = 0; l < config.n_layers; ++l) {
        Tensor* layer_attn = (attn_out && l + 1 == config.n_layers) ? attn_out : nullptr;
        x = attention_block(tape, config, params, l, x, batch, training, rng, layer_attn);

        Tensor h = layer_norm(tape, x, params.at(layer_name(l, "ln2.gain")),
                              params.at(layer_name(l, "ln2.bias")), kLayerNormEps);
        Tensor f = add_bias(tape, matmul(tape, h, params.at(layer_name(l, "ff1.weight"))),
                            params.at(layer_name(l, "ff1.bias")));
        f = gelu(tape, f);
        f = add_bias(tape, matmul(tape, f, params.at(layer_name(l, "ff2.weight"))),
                     params.at(layer_name(l, "ff2.bias")));
        if (training && config.dropout_rate > 0.0) {
            f = dropout(tape, f, config.dropout_rate, rng);
        }
        x = add(tape, x, f);
    }

    x = layer_norm(tape, x, params.at("final_norm.gain"), params.at("final_norm.bias"),
                   kLayerNormEps);
    Tensor pooled = mean_pool_rows(tape, x, config.seq_len);
    return add_bias(tape, matmul(tape, pooled, params.at("output.weight")),
                    params.at("output.bias"));
}

}  // namespace fedtst
