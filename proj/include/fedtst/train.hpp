#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "fedtst/dp.hpp"
#include "fedtst/loss.hpp"
#include "fedtst/model.hpp"
#include "fedtst/optimizer.hpp"
#include "fedtst/params.hpp"
#include "fedtst/preprocess.hpp"

namespace fedtst {

struct TrainOptions {
    std::size_t epochs = 2;
    std::size_t batch_size = 32;
    AdamWConfig optimizer;
    /// Cosine schedule: min_lr = base_lr / lr_floor_divisor, first cycle is
    /// one epoch of steps, cycle length doubles at each restart.
    double lr_floor_divisor = 100.0;
    std::uint64_t dropout_seed = 0;
    std::uint64_t noise_seed = 0;

    void validate() const;  // ConfigError on epochs/batch_size < 1
};

struct EpochStats {
    double mean_loss = 0.0;
    std::size_t batches = 0;
    std::size_t clipped_batches = 0;
};

struct LocalStats {
    std::vector<EpochStats> epochs;
    double mean_loss = 0.0;        // over every batch of every epoch
    double final_epoch_loss = 0.0; // mean over the last epoch only
    double clip_fraction = 0.0;    // clipped steps / total steps
    std::size_t steps = 0;         // optimizer steps taken
    double sigma = 0.0;            // noise scale used (0 when privacy is off)
};

/// Observer seam for the per-step stage sequence. Each callback receives the
/// zero-based global step index. Stages fire in the order the update is
/// assembled: gradient clipped, noise added, optimizer applied.
struct TrainHooks {
    std::function<void(std::size_t)> on_clip;
    std::function<void(std::size_t)> on_noise;
    std::function<void(std::size_t)> on_step;
};

/// Runs local training on one client's windows, updating `params` in place.
///
/// Batches are consecutive, unshuffled slices of at most batch_size windows.
/// Each step: forward in training mode, composite loss with row-to-row
/// difference terms taken within the batch, backward, then the privacy
/// pipeline on the flattened gradient — clip to the spec's norm bound, add
/// Gaussian noise at the scale implied by epsilon_round — and one AdamW step
/// at the cosine-scheduled rate. With privacy off the clip bound is infinite
/// and the noise scale is zero, so the same code path applies the raw
/// gradient exactly.
///
/// A fresh optimizer and schedule start at every call. Throws DataError when
/// data is empty and ConfigError on invalid options.
LocalStats local_train(ParamSet& params, const SequenceData& data, const TstConfig& model_cfg,
                       const HybridLossConfig& loss_cfg, const PrivacySpec& privacy,
                       double epsilon_round, const TrainOptions& options,
                       const TrainHooks* hooks = nullptr);

}  // namespace fedtst
