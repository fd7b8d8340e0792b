#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fedtst {

inline constexpr std::size_t kNumFeatures = 10;

/// Column order is fixed everywhere: tensors, CSV files, scaler state.
inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "position_x",    "position_y",  "acceleration", "relative_speed", "co2_emission",
    "noise_emission", "lane_occupancy", "time_loss", "lateral_speed", "slope",
};

/// Index of a feature name in kFeatureNames; throws ConfigError if unknown.
std::size_t feature_index(const std::string& name);

using TraceRow = std::array<double, kNumFeatures>;

/// One vehicle's per-second sensor record stream.
struct RawTrace {
    std::vector<TraceRow> rows;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
};

/// Knobs that make one simulated vehicle drive differently from another.
/// Two kinds of heterogeneity matter: scale (speed regime, emissions, noise
/// amplitudes) and rhythm (the cycle lengths below). Scale differences are
/// mostly removed by per-client normalization; the rhythms are not, so they
/// are what keeps clients genuinely non-identical after preprocessing.
/// Zeroing the noise amplitudes makes the whole trace deterministic given
/// the phase draws.
struct TraceProfile {
    double base_speed = 12.0;     // cruising target, m/s
    double speed_var = 1.6;       // amplitude of the slow random speed drift
    double accel_jitter = 0.55;   // driving-style acceleration noise, m/s^2
    double emission_scale = 1.0;  // vehicle-type CO2 multiplier
    double congestion = 0.35;     // 0..1, drives lane occupancy and time loss
    double slope_range = 3.0;     // road grade amplitude, degrees
    double sensor_noise = 0.05;   // measurement noise amplitude

    // Temporal signature: cycle lengths in seconds of the periodic parts.
    double speed_period = 160.0;
    double neighbor_period = 90.0;
    double lane_period = 140.0;
    double time_loss_period = 110.0;
    double lateral_period = 70.0;
    double slope_period = 200.0;
    double harmonic2 = 0.0;  // amplitude of a double-frequency speed component
};

/// Canonical heterogeneous fleet used by the simulator: profile i differs in
/// speed regime, emissions, congestion, and noise level.
TraceProfile client_profile(std::size_t client_id);

/// CO2 output (mg/s) as a monotone exponential map of speed*acceleration,
/// before measurement noise. Exposed so tests can reproduce the noiseless
/// trace exactly.
double co2_map(double speed_times_accel, double emission_scale);

/// Simulates n_steps seconds of coupled vehicle dynamics: acceleration
/// steers speed toward a slowly wandering target, positions integrate the
/// heading, CO2 follows co2_map, slope and lane occupancy follow slow
/// periodic patterns. Deterministic for a fixed (seed, n_steps, profile).
/// Throws ConfigError when n_steps < 16.
RawTrace generate_trace(std::uint64_t seed, std::size_t n_steps, const TraceProfile& profile);

/// CSV with the fixed feature header, one row per timestep, full double
/// precision. Throws IoError on filesystem failure.
void write_trace_csv(const RawTrace& trace, const std::string& path);

/// Parses a CSV written by write_trace_csv (or an external tool using the
/// same header). Throws IoError on filesystem failure, DataError on a bad
/// header, malformed numbers, or rows violating trace invariants.
RawTrace read_trace_csv(const std::string& path);

}  // namespace fedtst
