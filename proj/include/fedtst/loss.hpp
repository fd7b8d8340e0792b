#pragma once

#include "fedtst/tensor.hpp"

namespace fedtst {

/// Weights of the composite regression objective. The pointwise part blends
/// squared and absolute error (alpha toward squared) plus a Huber penalty;
/// the sequence part penalizes prediction roughness, sign disagreement with
/// the target's step-to-step movement, and mismatch between predicted and
/// actual movement.
struct HybridLossConfig {
    double alpha = 0.5;          // MSE share of the MSE/MAE blend
    double huber_weight = 0.2;
    double huber_delta = 1.0;
    double w_smooth = 0.05;      // mean(dp^2)
    double w_direction = 0.05;   // mean(relu(-dp*dt))
    double w_temporal = 0.1;     // mean((dp - dt)^2)

    /// Throws ConfigError when alpha leaves [0,1], any weight is negative,
    /// huber_delta is not positive, or anything is non-finite.
    void validate() const;
};

/// Composite loss over a batch of predictions. pred and target must share a
/// shape. The three difference terms compare consecutive rows: dp and dt are
/// the row-to-row changes of predictions and targets. When prev_pred /
/// prev_target are null the difference terms are dropped (their weights
/// contribute zero). Providing only one of the pair is a ConfigError; shape
/// mismatches are DimensionError.
Tensor hybrid_loss(Tape& tape, const Tensor& pred, const Tensor& target,
                   const Tensor* prev_pred, const Tensor* prev_target,
                   const HybridLossConfig& cfg);

/// Rows shifted down by one with the first row duplicated, so row i of the
/// result is row i-1 of x (row 0 maps to itself). Subtracting gives
/// row-to-row differences whose first entry is exactly zero. Gradients flow
/// back through the shift.
Tensor shifted_prev_rows(Tape& tape, const Tensor& x);

}  // namespace fedtst
