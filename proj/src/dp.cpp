#include "fedtst/dp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fedtst/errors.hpp"

namespace fedtst {

void PrivacySpec::validate() const {
    if (mode != DpMode::off) {
        if (!(epsilon_total > 0.0) || !std::isfinite(epsilon_total)) {
            throw ConfigError("PrivacySpec: epsilon_total must be positive and finite");
        }
        if (!(delta > 0.0) || !(delta < 1.0)) {
            throw ConfigError("PrivacySpec: delta must lie in (0, 1)");
        }
        if (!(clip_norm > 0.0)) {
            throw ConfigError("PrivacySpec: clip_norm must be positive");
        }
    }
    if (rounds < 1) {
        throw ConfigError("PrivacySpec: rounds must be at least 1");
    }
    if (!(sensitivity_divisor > 0.0) || !std::isfinite(sensitivity_divisor)) {
        throw ConfigError("PrivacySpec: sensitivity_divisor must be positive and finite");
    }
}

ClipResult clip_gradient(std::span<const double> g, double clip_norm) {
    if (!(clip_norm > 0.0)) {
        throw ConfigError("clip_gradient: clip_norm must be positive");
    }
    ClipResult out;
    out.vector.assign(g.begin(), g.end());
    double sq = 0.0;
    for (double v : g) {
        if (!std::isfinite(v)) {
            throw NumericError("clip_gradient: non-finite component");
        }
        sq += v * v;
    }
    out.norm = std::sqrt(sq);
    if (out.norm <= clip_norm) {
        // Inside the ball (or an infinite bound): exact pass-through, no
        // multiplication so the bits cannot change.
        return out;
    }
    out.was_clipped = true;
    out.scale = clip_norm / out.norm;
    for (double& v : out.vector) v *= out.scale;
    return out;
}

double noise_scale(double sensitivity, double epsilon, double delta) {
    if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
        throw ConfigError("noise_scale: sensitivity must be positive and finite");
    }
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("noise_scale: epsilon must be positive and finite");
    }
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw ConfigError("noise_scale: delta must lie in (0, 1)");
    }
    return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

std::vector<double> add_noise(std::span<const double> g, double sigma, Rng& rng) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("add_noise: sigma must be non-negative and finite");
    }
    std::vector<double> out(g.begin(), g.end());
    if (sigma == 0.0) {
        return out;  // identity branch: no generator draws
    }
    for (double& v : out) {
        v += sigma * rng.gaussian();
        if (!std::isfinite(v)) {
            throw NumericError("add_noise: non-finite result");
        }
    }
    return out;
}

double allocate_budget(const PrivacySpec& spec) {
    spec.validate();
    return spec.epsilon_total / std::sqrt(static_cast<double>(spec.rounds));
}

double round_epsilon(const PrivacySpec& spec) {
    spec.validate();
    switch (spec.mode) {
        case DpMode::off:
            return 0.0;
        case DpMode::per_round_budget:
            return allocate_budget(spec);
        case DpMode::fixed_epsilon:
            return spec.epsilon_total;
    }
    throw ConfigError("round_epsilon: unknown mode");
}

void PrivacyLedger::record_spend(double epsilon_round) {
    if (!(epsilon_round >= 0.0) || !std::isfinite(epsilon_round)) {
        throw ConfigError("PrivacyLedger: spend must be non-negative and finite");
    }
    spends_.push_back(epsilon_round);
    total_.add(epsilon_round);
}

std::vector<double> privatize_update(std::span<const double> g, const PrivacySpec& spec,
                                     double epsilon_round, Rng& rng, DpDiagnostics* diag) {
    spec.validate();
    const bool off = spec.mode == DpMode::off;
    if (!off && !(epsilon_round > 0.0)) {
        throw ConfigError("privatize_update: epsilon_round must be positive");
    }

    const double bound = off ? std::numeric_limits<double>::infinity() : spec.clip_norm;
    ClipResult clipped = clip_gradient(g, bound);

    const double sigma =
        off ? 0.0
            : noise_scale(spec.clip_norm / spec.sensitivity_divisor, epsilon_round, spec.delta);
    std::vector<double> noisy = add_noise(clipped.vector, sigma, rng);

    if (diag != nullptr) {
        diag->was_clipped = clipped.was_clipped;
        diag->clip_scale = clipped.scale;
        diag->input_norm = clipped.norm;
        diag->sigma = sigma;
        diag->epsilon_round = off ? 0.0 : epsilon_round;
    }
    return noisy;
}

}  // namespace fedtst
