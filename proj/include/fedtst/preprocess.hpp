#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "fedtst/tensor.hpp"
#include "fedtst/trace.hpp"

namespace fedtst {

/// p-th percentile (p in [0,100]) with linear interpolation between order
/// statistics. Copies and sorts its input. Throws DataError on empty input,
/// ConfigError on p outside [0,100].
double percentile(std::vector<double> values, double p);

/// Per-feature robust location/spread fitted on one trace.
struct ScalerState {
    std::array<double, kNumFeatures> median{};
    std::array<double, kNumFeatures> iqr{};  // raw 75th-25th spread; may be 0

    /// Spread actually divided by: IQR, or 1 where the IQR collapsed to 0.
    double divisor(std::size_t f) const { return iqr[f] == 0.0 ? 1.0 : iqr[f]; }
};

/// Median and IQR per feature over all timesteps. Throws DataError on an
/// empty trace.
ScalerState fit_scaler(const RawTrace& trace);

/// (x - median) / divisor per feature.
RawTrace apply_scaler(const RawTrace& trace, const ScalerState& scaler);

/// Per-feature replacement rule: values outside [lo, hi] become the median.
struct OutlierBounds {
    std::array<double, kNumFeatures> lo{};
    std::array<double, kNumFeatures> hi{};
    std::array<double, kNumFeatures> median{};
};

/// lo/hi = Q1 - k*IQR / Q3 + k*IQR per feature. Throws ConfigError when
/// k <= 0, DataError on an empty trace.
OutlierBounds outlier_bounds(const RawTrace& trace, double k = 1.5);

/// Applies a fixed rule; since each median lies inside its own bounds,
/// applying the same rule twice equals applying it once.
RawTrace apply_outlier_bounds(const RawTrace& trace, const OutlierBounds& bounds);

/// Replaces every value outside [Q1 - k*IQR, Q3 + k*IQR] of its feature with
/// that feature's median, quartiles taken from the input itself. Throws
/// ConfigError when k <= 0.
RawTrace replace_outliers_iqr(const RawTrace& trace, double k = 1.5);

inline const std::vector<std::string> kDefaultLogFeatures = {"co2_emission",
                                                             "relative_speed"};

/// x -> ln(1 + x) on the selected features. Throws DataError if a selected
/// feature holds a negative value, ConfigError on an unknown feature name.
RawTrace log_transform(const RawTrace& trace,
                       const std::vector<std::string>& features = kDefaultLogFeatures);

inline const std::vector<std::string> kDefaultTargetFeatures = {
    "relative_speed", "acceleration", "co2_emission"};

/// All sliding windows of one trace, ready for training.
/// inputs is [N, seq_len, F]; targets is [N, F_out] holding the selected
/// features at the step right after each window.
struct SequenceData {
    Tensor inputs;
    Tensor targets;
    std::size_t count = 0;
    std::size_t seq_len = 0;
    std::vector<std::string> target_features;
};

/// Windows [i*stride, i*stride + seq_len) with the next step as target;
/// window count = floor((n - seq_len - 1)/stride) + 1.
/// Throws ConfigError for seq_len < 2 or stride outside [1, seq_len);
/// DataError when the trace is shorter than seq_len + 1.
SequenceData make_sequences(const RawTrace& trace, std::size_t seq_len = 15,
                            std::size_t stride = 1,
                            const std::vector<std::string>& target_features =
                                kDefaultTargetFeatures);

/// The full pipeline in the fixed order: log transform, outlier replacement,
/// scaler fit, scaling.
struct PreprocessResult {
    RawTrace scaled;
    ScalerState scaler;
};
PreprocessResult preprocess_trace(const RawTrace& trace, double outlier_k = 1.5,
                                  const std::vector<std::string>& log_features =
                                      kDefaultLogFeatures);

}  // namespace fedtst
