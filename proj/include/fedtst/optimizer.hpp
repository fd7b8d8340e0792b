#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fedtst {

struct AdamWConfig {
    double base_lr = 5e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    /// Throws ConfigError on non-positive lr/eps, betas outside [0,1), or a
    /// negative weight decay.
    void validate() const;
};

/// Adam with decoupled weight decay. Decay multiplies the parameter by
/// (1 - lr * weight_decay) before the bias-corrected moment update is
/// subtracted, so the decay never enters the moment estimates.
class AdamW {
public:
    AdamW(AdamWConfig cfg, std::size_t n_params);

    /// One update in place. `lr` is the step size for this call (schedules
    /// pass a different value every step). Throws DimensionError on size
    /// mismatch and NumericError on non-finite gradients or parameters.
    void step(std::span<double> params, std::span<const double> grads, double lr);

    std::size_t steps_taken() const { return t_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    AdamWConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

/// Cosine annealing with warm restarts. Step indices count from 0; the first
/// cycle spans `cycle_len` steps, and each restart multiplies the cycle
/// length by t_mult. Within a cycle of length L at offset s the rate is
/// min_lr + 0.5*(base_lr - min_lr)*(1 + cos(pi*s/L)).
/// Throws ConfigError when cycle_len < 1, t_mult < 1, min_lr < 0, or
/// base_lr < min_lr.
double cosine_lr(std::size_t step, std::size_t cycle_len, double base_lr, double min_lr,
                 std::size_t t_mult = 2);

}  // namespace fedtst
