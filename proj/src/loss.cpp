#include "fedtst/loss.hpp"

#include <cmath>

#include "fedtst/errors.hpp"

namespace fedtst {

void HybridLossConfig::validate() const {
    const double fields[] = {alpha, huber_weight, huber_delta, w_smooth, w_direction,
                             w_temporal};
    for (double f : fields) {
        if (!std::isfinite(f)) throw ConfigError("HybridLossConfig: non-finite field");
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw ConfigError("HybridLossConfig: alpha must lie in [0, 1]");
    }
    if (huber_weight < 0.0 || w_smooth < 0.0 || w_direction < 0.0 || w_temporal < 0.0) {
        throw ConfigError("HybridLossConfig: term weights must be non-negative");
    }
    if (!(huber_delta > 0.0)) {
        throw ConfigError("HybridLossConfig: huber_delta must be positive");
    }
}

Tensor shifted_prev_rows(Tape& tape, const Tensor& x) {
    const std::size_t n = x.rows();
    if (n == 0) throw DimensionError("shifted_prev_rows: empty tensor");
    Tensor first = slice_rows(tape, x, 0, 1);
    if (n == 1) return first;
    Tensor rest = slice_rows(tape, x, 0, n - 1);
    return concat_rows(tape, first, rest);
}

Tensor hybrid_loss(Tape& tape, const Tensor& pred, const Tensor& target,
                   const Tensor* prev_pred, const Tensor* prev_target,
                   const HybridLossConfig& cfg) {
    cfg.validate();
    if (!pred.defined() || !target.defined()) {
        throw DimensionError("hybrid_loss: undefined tensor");
    }
    if (pred.shape() != target.shape()) {
        throw DimensionError("hybrid_loss: pred shape " + shape_to_string(pred.shape()) +
                             " != target shape " + shape_to_string(target.shape()));
    }
    if ((prev_pred == nullptr) != (prev_target == nullptr)) {
        throw ConfigError("hybrid_loss: prev_pred and prev_target must be given together");
    }

    Tensor err = sub(tape, pred, target);
    std::vector<Tensor> terms = {mean_all(tape, square(tape, err)),
                                 mean_all(tape, abs_op(tape, err)),
                                 mean_all(tape, huber(tape, err, cfg.huber_delta))};
    std::vector<double> weights = {cfg.alpha, 1.0 - cfg.alpha, cfg.huber_weight};

    if (prev_pred != nullptr) {
        if (prev_pred->shape() != pred.shape() || prev_target->shape() != target.shape()) {
            throw DimensionError("hybrid_loss: prev shapes must match pred/target");
        }
        Tensor dp = sub(tape, pred, *prev_pred);
        Tensor dt = sub(tape, target, *prev_target);
        terms.push_back(mean_all(tape, square(tape, dp)));
        terms.push_back(mean_all(tape, relu(tape, scale(tape, mul(tape, dp, dt), -1.0))));
        terms.push_back(mean_all(tape, square(tape, sub(tape, dp, dt))));
        weights.push_back(cfg.w_smooth);
        weights.push_back(cfg.w_direction);
        weights.push_back(cfg.w_temporal);
    }

    return weighted_sum(tape, terms, weights);
}

}  // namespace fedtst
