#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fedtst/rng.hpp"

namespace fedtst {

/// Dense row-major tensor of doubles with an optional same-shape gradient
/// buffer. Tensor is a cheap value-semantic handle: copies share storage, so
/// an op's output and a reshape of it see the same values and gradients.
/// Deep copies are explicit via clone().
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return storage_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const;

    /// Trailing dimension; rows() is everything before it. Ops that work on
    /// the last axis (softmax, bias add, layer norm) view any tensor as
    /// [rows, cols].
    std::size_t cols() const;
    std::size_t rows() const;

    /// Value of a single-element tensor.
    double item() const;

    std::span<const double> values() const;
    std::span<double> values();

    bool has_grad() const;
    void ensure_grad();
    void zero_grad();
    std::span<double> grad();
    std::span<const double> grad() const;

    /// New handle onto the same storage with a different shape (element count
    /// must match). Gradients flow through reshapes for free.
    Tensor reshape(std::vector<std::size_t> new_shape) const;

    /// Deep copy of values; the copy starts with no gradient buffer.
    Tensor clone() const;

private:
    struct Storage {
        std::vector<double> value;
        std::vector<double> grad;  // empty until ensure_grad()
    };
    std::shared_ptr<Storage> storage_;
    std::vector<std::size_t> shape_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

/// Reverse-mode gradient tape. Ops executed against a recording tape append
/// one backward step each; backward() replays the steps in reverse order
/// (which is a valid topological order because tensors are created before
/// they are consumed) and then frees the tape. A non-recording tape turns
/// every op into plain forward arithmetic — that is how evaluation and
/// finite-difference probes run at full speed.
///
/// A tape is owned by exactly one training step on one thread. Concurrent
/// clients each use their own tape and their own tensors; there is no shared
/// mutable state anywhere in this module.
class Tape {
public:
    Tape() = default;
    explicit Tape(bool recording) : recording_(recording) {}

    bool recording() const { return recording_; }
    void record(std::function<void()> step);
    std::size_t recorded_steps() const { return steps_.size(); }

    /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every tensor
    /// that participated. `loss` must hold exactly one element. The tape is
    /// cleared afterwards.
    void backward(Tensor loss);

    void clear() { steps_.clear(); }

private:
    bool recording_ = true;
    std::vector<std::function<void()>> steps_;
};

// ---------------------------------------------------------------------------
// Differentiable ops. Each op validates shapes (DimensionError), computes the
// result eagerly, and — when the tape is recording — registers one backward
// step that accumulates into its inputs' gradient buffers.
// ---------------------------------------------------------------------------

/// [m,k] x [k,n] -> [m,n].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);

/// x[rows, n] + bias[n], broadcast over rows.
Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias);

/// x[rows, n] * v[n] elementwise per row (feature weighting).
Tensor mul_rows(Tape& tape, const Tensor& x, const Tensor& v);

/// x[rows, n] + table[(row % period), n]. The table is treated as a constant
/// (no gradient) — used for sinusoidal positional encodings.
Tensor add_cyclic_rows(Tape& tape, const Tensor& x, const Tensor& table);

Tensor gelu(Tape& tape, const Tensor& x);
Tensor tanh_op(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);
Tensor abs_op(Tape& tape, const Tensor& x);
Tensor square(Tape& tape, const Tensor& x);

/// Elementwise Huber penalty: 0.5 x^2 for |x| <= delta, else delta(|x| - delta/2).
Tensor huber(Tape& tape, const Tensor& x, double delta);

/// Numerically stabilized softmax over the trailing axis; each slice sums to 1.
Tensor softmax_rows(Tape& tape, const Tensor& x);

/// Per-row normalization over the trailing axis (biased variance, 1/d), then
/// affine: gain * (x - mean)/sqrt(var + eps) + bias.
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps);

/// Scaled dot-product attention over n_heads heads. q, k, v are [B*T, d] with
/// d divisible by n_heads; the scale is 1/sqrt(d/n_heads). If attn_out is
/// non-null it receives the [B, H, T, T] attention weights (data only).
Tensor multihead_attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v,
                           std::size_t batch, std::size_t seq_len, std::size_t n_heads,
                           Tensor* attn_out = nullptr);

/// [B*T, d] -> [B, d], mean over each group of `group` consecutive rows.
Tensor mean_pool_rows(Tape& tape, const Tensor& x, std::size_t group);

/// Mean over all elements -> scalar.
Tensor mean_all(Tape& tape, const Tensor& x);

/// Copy of rows [begin, end); gradients route back to the source rows.
Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end);

/// Row-wise concatenation (equal trailing dimensions).
Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b);

/// Weighted sum of single-element tensors -> scalar.
Tensor weighted_sum(Tape& tape, const std::vector<Tensor>& terms,
                    const std::vector<double>& weights);

/// Inverted dropout: keeps each element with probability 1-rate and rescales
/// by 1/(1-rate). rate == 0 is the identity.
Tensor dropout(Tape& tape, const Tensor& x, double rate, Rng& rng);

}  // namespace fedtst
