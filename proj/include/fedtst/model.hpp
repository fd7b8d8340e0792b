#pragma once

#include <cstdint>
#include <string>

#include "fedtst/params.hpp"
#include "fedtst/rng.hpp"
#include "fedtst/tensor.hpp"

namespace fedtst {

/// Architecture knobs for the time-series transformer.
struct TstConfig {
    std::size_t n_features = 10;
    std::size_t d_model = 64;
    std::size_t n_heads = 4;
    std::size_t n_layers = 2;
    std::size_t d_ff = 128;
    std::size_t seq_len = 15;
    std::size_t n_outputs = 3;
    double dropout_rate = 0.1;  // active only when forward() runs in training mode

    /// Throws ConfigError when dimensions are zero, d_model is not divisible
    /// by n_heads, or dropout_rate is outside [0, 1).
    void validate() const;
};

/// Same architecture scaled up (d_model 176, d_ff 352) so one serialized
/// float32 update lands near the 2.1 MB round payload used in the
/// communication accounting.
TstConfig payload_matched_config();

/// Fresh parameters: weight matrices Glorot-uniform, biases zero, norm gains
/// one, feature_weights uniform in [1.5, 2.5]. Tensors are drawn in canonical
/// (sorted-name) order from one generator seeded with `seed`, so the result
/// is bit-reproducible. Throws ConfigError on an invalid config.
ParamSet init_params(const TstConfig& config, std::uint64_t seed);

/// Number of trainable scalars.
std::size_t param_count(const ParamSet& params);

/// Sinusoidal position table [seq_len, d_model]; not trainable.
Tensor positional_encoding(std::size_t seq_len, std::size_t d_model);

/// One pre-norm transformer block half: norm, multihead self-attention,
/// output projection, residual. x is [B*T, d_model]. In training mode the
/// projected attention output passes through dropout fed by `rng`. If
/// attn_out is non-null it receives the [B, H, T, T] attention weights.
Tensor attention_block(Tape& tape, const TstConfig& config, ParamSet& params,
                       std::size_t layer, const Tensor& x, std::size_t batch, bool training,
                       Rng& rng, Tensor* attn_out = nullptr);

/// Full model: feature weighting, dual linear projection with activation,
/// positional encoding, n_layers x (attention block + pre-norm feedforward
/// block), final norm, mean-pool over time, output projection.
/// inputs is [B, seq_len, n_features]; the result is [B, n_outputs].
/// Throws DimensionError on a shape mismatch and NumericError if the input
/// holds non-finite values. Eval mode (training=false) never touches `rng`.
Tensor forward(Tape& tape, const TstConfig& config, ParamSet& params, const Tensor& inputs,
               bool training, Rng& rng, Tensor* attn_out = nullptr);

}  // namespace fedtst
