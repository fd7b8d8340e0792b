#pragma once

#include <stdexcept>
#include <string>

namespace fedtst {

/// Shape or dimensionality mismatch between tensors. Messages name the
/// offending shapes.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value (model dims, privacy parameters, experiment
/// settings). Validation collects every violated field before throwing.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problem with input data (empty trace, too-short trace, negative value in
/// a log-transformed feature, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite value where a finite one is required (gradients, losses).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Incompatible or empty inputs to an aggregation step.
struct AggregationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Failure reading or writing experiment artifacts.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fedtst
