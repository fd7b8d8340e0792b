#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedtst/exact_sum.hpp"
#include "fedtst/rng.hpp"

namespace fedtst {

/// How per-round privacy budgets are chosen.
enum class DpMode {
    off,                // no clipping bound, no noise, no ledger spends
    per_round_budget,   // each round spends epsilon_total / sqrt(T)
    fixed_epsilon,      // each round spends epsilon_total (sweep semantics)
};

struct PrivacySpec {
    double epsilon_total = 0.8;
    double delta = 1e-5;
    double clip_norm = 1.5;
    std::size_t rounds = 10;
    /// Sensitivity used in the noise scale is clip_norm / sensitivity_divisor.
    /// 1 uses the clipping bound directly; larger values reproduce the
    /// lower-sensitivity variant.
    double sensitivity_divisor = 1.0;
    DpMode mode = DpMode::per_round_budget;

    /// Throws ConfigError on any violated positivity/range constraint.
    void validate() const;
};

/// g * min(1, C/||g||2).
struct ClipResult {
    std::vector<double> vector;
    bool was_clipped = false;
    double scale = 1.0;  // multiplier that was applied
    double norm = 0.0;   // input L2 norm
};

/// Throws ConfigError when C <= 0, NumericError on non-finite input. C may
/// be +infinity, in which case the input is returned unchanged bit for bit.
ClipResult clip_gradient(std::span<const double> g, double clip_norm);

/// sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
/// Throws ConfigError when epsilon <= 0, delta outside (0,1), or
/// sensitivity <= 0.
double noise_scale(double sensitivity, double epsilon, double delta);

/// Adds an independent N(0, sigma^2) draw to every component. sigma == 0
/// returns the input unchanged without consuming the generator.
std::vector<double> add_noise(std::span<const double> g, double sigma, Rng& rng);

/// Per-round share of the total budget: epsilon_total / sqrt(rounds).
double allocate_budget(const PrivacySpec& spec);

/// Per-round epsilon implied by the spec's mode; 0 in off mode.
double round_epsilon(const PrivacySpec& spec);

/// Running record of per-round spends. The cumulative total is maintained
/// with compensated summation, so it equals the exact sum of the recorded
/// spends no matter how many rounds run.
class PrivacyLedger {
public:
    /// Throws ConfigError on a negative spend.
    void record_spend(double epsilon_round);

    double cumulative() const { return total_.value(); }
    std::size_t rounds_recorded() const { return spends_.size(); }
    const std::vector<double>& spends() const { return spends_; }

private:
    std::vector<double> spends_;
    ExactSum total_;
};

struct DpDiagnostics {
    bool was_clipped = false;
    double clip_scale = 1.0;
    double input_norm = 0.0;
    double sigma = 0.0;
    double epsilon_round = 0.0;
};

/// Algorithm order: clip to the spec's norm bound, then add Gaussian noise
/// at sigma = noise_scale(C/divisor, epsilon_round, delta). In off mode both
/// stages degenerate (infinite bound, zero sigma) and the input passes
/// through exactly.
std::vector<double> privatize_update(std::span<const double> g, const PrivacySpec& spec,
                                     double epsilon_round, Rng& rng,
                                     DpDiagnostics* diag = nullptr);

}  // namespace fedtst
