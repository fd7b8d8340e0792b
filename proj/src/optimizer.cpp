#include "fedtst/optimizer.hpp"

#include <cmath>

#include "fedtst/errors.hpp"

namespace fedtst {

void AdamWConfig::validate() const {
    if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
        throw ConfigError("AdamWConfig: base_lr must be positive and finite");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw ConfigError("AdamWConfig: weight_decay must be non-negative and finite");
    }
    if (!(beta1 >= 0.0) || !(beta1 < 1.0) || !(beta2 >= 0.0) || !(beta2 < 1.0)) {
        throw ConfigError("AdamWConfig: betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) {
        throw ConfigError("AdamWConfig: eps must be positive");
    }
}

AdamW::AdamW(AdamWConfig cfg, std::size_t n_params) : cfg_(cfg) {
    cfg_.validate();
    if (n_params == 0) throw ConfigError("AdamW: zero parameters");
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
}

void AdamW::step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw DimensionError("AdamW: parameter/gradient size mismatch");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw ConfigError("AdamW: lr must be positive and finite");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double decay = 1.0 - lr * cfg_.weight_decay;
    for (std::size_t i = 0; i < m_.size(); ++i) {
        const double g = grads[i];
        if (!std::isfinite(g)) throw NumericError("AdamW: non-finite gradient");
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        double p = params[i] * decay;
        p -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        if (!std::isfinite(p)) throw NumericError("AdamW: non-finite parameter");
        params[i] = p;
    }
}

double cosine_lr(std::size_t step, std::size_t cycle_len, double base_lr, double min_lr,
                 std::size_t t_mult) {
    if (cycle_len < 1) throw ConfigError("cosine_lr: cycle_len must be at least 1");
    if (t_mult < 1) throw ConfigError("cosine_lr: t_mult must be at least 1");
    if (!(min_lr >= 0.0) || !(base_lr >= min_lr)) {
        throw ConfigError("cosine_lr: need base_lr >= min_lr >= 0");
    }
    std::size_t cycle = cycle_len;
    std::size_t s = step;
    while (s >= cycle) {
        s -= cycle;
        cycle *= t_mult;
    }
    const double frac = static_cast<double>(s) / static_cast<double>(cycle);
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

}  // namespace fedtst
