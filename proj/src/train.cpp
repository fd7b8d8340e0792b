#include "fedtst/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "fedtst/errors.hpp"
#include "fedtst/tensor.hpp"

namespace fedtst {

void TrainOptions::validate() const {
    if (epochs < 1) throw ConfigError("TrainOptions: epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("TrainOptions: batch_size must be at least 1");
    if (!(lr_floor_divisor >= 1.0)) {
        throw ConfigError("TrainOptions: lr_floor_divisor must be at least 1");
    }
    optimizer.validate();
}

LocalStats local_train(ParamSet& params, const SequenceData& data, const TstConfig& model_cfg,
                       const HybridLossConfig& loss_cfg, const PrivacySpec& privacy,
                       double epsilon_round, const TrainOptions& options,
                       const TrainHooks* hooks) {
    options.validate();
    model_cfg.validate();
    loss_cfg.validate();
    privacy.validate();
    if (data.count == 0) throw DataError("local_train: no training windows");
    if (data.seq_len != model_cfg.seq_len) {
        throw DimensionError("local_train: window length does not match the model");
    }

    const bool dp_off = privacy.mode == DpMode::off;
    if (!dp_off && !(epsilon_round > 0.0)) {
        throw ConfigError("local_train: epsilon_round must be positive when privacy is on");
    }
    const double clip_bound =
        dp_off ? std::numeric_limits<double>::infinity() : privacy.clip_norm;
    const double sigma =
        dp_off ? 0.0
               : noise_scale(privacy.clip_norm / privacy.sensitivity_divisor, epsilon_round,
                             privacy.delta);

    const std::size_t n = data.count;
    const std::size_t seq = data.seq_len;
    const std::size_t f_in = model_cfg.n_features;
    const std::size_t f_out = data.target_features.size();
    const std::size_t batches_per_epoch = (n + options.batch_size - 1) / options.batch_size;
    const double min_lr = options.optimizer.base_lr / options.lr_floor_divisor;

    AdamW opt(options.optimizer, params.element_count());
    Rng dropout_rng(options.dropout_seed);
    Rng noise_rng(options.noise_seed);

    const std::span<const double> all_inputs = data.inputs.values();
    const std::span<const double> all_targets = data.targets.values();

    LocalStats stats;
    stats.sigma = sigma;
    double loss_sum = 0.0;
    std::size_t clipped = 0;
    std::size_t global_step = 0;

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        EpochStats ep;
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const std::size_t lo = b * options.batch_size;
            const std::size_t hi = std::min(n, lo + options.batch_size);
            const std::size_t rows = hi - lo;

            Tensor batch_inputs = Tensor::from_data(
                {rows, seq, f_in},
                std::vector<double>(all_inputs.begin() + static_cast<std::ptrdiff_t>(lo * seq * f_in),
                                    all_inputs.begin() + static_cast<std::ptrdiff_t>(hi * seq * f_in)));
            Tensor batch_targets = Tensor::from_data(
                {rows, f_out},
                std::vector<double>(all_targets.begin() + static_cast<std::ptrdiff_t>(lo * f_out),
                                    all_targets.begin() + static_cast<std::ptrdiff_t>(hi * f_out)));

            Tape tape(true);
            Tensor pred = forward(tape, model_cfg, params, batch_inputs, /*training=*/true,
                                  dropout_rng);
            Tensor prev_pred = shifted_prev_rows(tape, pred);
            Tensor prev_target = shifted_prev_rows(tape, batch_targets);
            Tensor loss =
                hybrid_loss(tape, pred, batch_targets, &prev_pred, &prev_target, loss_cfg);
            const double loss_value = loss.item();
            if (!std::isfinite(loss_value)) {
                throw NumericError("local_train: non-finite loss");
            }

            params.zero_grads();
            tape.backward(loss);

            std::vector<double> grads = params.flatten_grads();
            ClipResult clip = clip_gradient(grads, clip_bound);
            if (clip.was_clipped) ++clipped;
            if (hooks != nullptr && hooks->on_clip) hooks->on_clip(global_step);

            std::vector<double> noisy = add_noise(clip.vector, sigma, noise_rng);
            if (hooks != nullptr && hooks->on_noise) hooks->on_noise(global_step);

            const double lr = cosine_lr(global_step, batches_per_epoch,
                                        options.optimizer.base_lr, min_lr);
            std::vector<double> flat = params.flatten_values();
            opt.step(flat, noisy, lr);
            params.load_values(flat);
            if (hooks != nullptr && hooks->on_step) hooks->on_step(global_step);

            epoch_loss += loss_value;
            loss_sum += loss_value;
            ++ep.batches;
            ++global_step;
        }
        ep.mean_loss = epoch_loss / static_cast<double>(ep.batches);
        ep.clipped_batches = clipped;  // cumulative so far; adjusted below
        stats.epochs.push_back(ep);
    }

    // Convert cumulative clip counts into per-epoch counts.
    for (std::size_t e = stats.epochs.size(); e-- > 1;) {
        stats.epochs[e].clipped_batches -= stats.epochs[e - 1].clipped_batches;
    }

    stats.steps = global_step;
    stats.mean_loss = loss_sum / static_cast<double>(global_step);
    stats.final_epoch_loss = stats.epochs.back().mean_loss;
    stats.clip_fraction = static_cast<double>(clipped) / static_cast<double>(global_step);
    return stats;
}

}  // namespace fedtst
