#include "fedtst/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedtst/errors.hpp"
#include "fedtst/rng.hpp"

namespace fedtst {

namespace {

constexpr double kTwoPi = 6.283185307179586476;

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::size_t feature_index(const std::string& name) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (name == kFeatureNames[i]) return i;
    }
    throw ConfigError("unknown feature name: " + name);
}

TraceProfile client_profile(std::size_t client_id) {
    const double i = double(client_id % 5);
    TraceProfile p;
    p.base_speed = 8.0 + 3.0 * i;
    p.speed_var = 1.0 + 0.3 * i;
    p.accel_jitter = 0.45 + 0.06 * i;
    p.emission_scale = 0.8 + 0.2 * i;
    p.congestion = 0.5 - 0.08 * i;
    p.slope_range = 1.5 + 0.8 * i;
    p.sensor_noise = 0.04 + 0.01 * i;
    // Each vehicle runs on its own rhythm, so a model averaged across the
    // fleet cannot match a locally adapted one on any single stream.
    p.speed_period = 160.0 / (1.0 + 0.22 * i);
    p.neighbor_period = 90.0 / (1.0 + 0.17 * i);
    p.lane_period = 140.0 / (1.0 + 0.15 * i);
    p.time_loss_period = 110.0 / (1.0 + 0.12 * i);
    p.lateral_period = 70.0 / (1.0 + 0.20 * i);
    p.slope_period = 200.0 / (1.0 + 0.10 * i);
    p.harmonic2 = 0.05 + 0.02 * i;
    return p;
}

double co2_map(double speed_times_accel, double emission_scale) {
    const double s = clamp(speed_times_accel, -40.0, 40.0);
    return emission_scale * (4.0 + 30.0 * std::exp(0.06 * s));
}

RawTrace generate_trace(std::uint64_t seed, std::size_t n_steps, const TraceProfile& profile) {
    if (n_steps < 16) {
        throw ConfigError("generate_trace: need at least 16 steps, got " +
                          std::to_string(n_steps));
    }

    Rng rng(seed);
    const double phase = rng.uniform(0.0, kTwoPi);
    const double slope_phase = rng.uniform(0.0, kTwoPi);
    const double lane_phase = rng.uniform(0.0, kTwoPi);
    const double heading0 = rng.uniform(0.0, kTwoPi);
    double pos_x = rng.uniform(-500.0, 500.0);
    double pos_y = rng.uniform(-500.0, 500.0);

    double v = profile.base_speed;
    double drift = 0.0;
    double heading = heading0;

    RawTrace trace;
    trace.rows.reserve(n_steps);
    for (std::size_t t = 0; t < n_steps; ++t) {
        const double td = double(t);
        const double target =
            profile.base_speed *
                (1.0 + 0.25 * std::sin(kTwoPi * td / profile.speed_period + phase) +
                 profile.harmonic2 *
                     std::sin(2.0 * kTwoPi * td / profile.speed_period + 2.3 * phase)) +
            drift;
        const double accel =
            clamp(0.35 * (target - v) + profile.accel_jitter * rng.gaussian(), -3.5, 3.5);

        // A deterministic "vehicle ahead" gives a smooth nonnegative gap speed.
        const double neighbor =
            target + 0.8 * std::sin(kTwoPi * td / profile.neighbor_period + 1.7 * phase);
        const double relative_speed = std::abs(v - neighbor);

        const double co2 =
            co2_map(v * accel, profile.emission_scale) *
            std::exp(profile.sensor_noise * rng.gaussian());

        const double noise_emission =
            std::max(0.0, 35.0 + 12.0 * std::log10(1.0 + v * v) + 4.0 * profile.congestion +
                              1.5 * profile.sensor_noise * rng.gaussian());

        const double lane_occupancy =
            clamp(profile.congestion + 0.25 * std::sin(kTwoPi * td / profile.lane_period + lane_phase) +
                      3.0 * profile.sensor_noise * rng.gaussian(),
                  0.0, 1.0);

        // Softplus keeps the lost-time term smooth and strictly positive, so
        // the feature has no point mass at zero.
        const double time_loss =
            (profile.congestion * (2.0 + std::sin(kTwoPi * td / profile.time_loss_period + phase)) +
             0.35 * std::log1p(std::exp(std::min(target - v, 30.0)))) *
            std::exp(profile.sensor_noise * rng.gaussian());

        const double lateral_speed =
            0.3 * std::sin(kTwoPi * td / profile.lateral_period + heading0) +
            profile.sensor_noise * rng.gaussian();

        const double slope =
            profile.slope_range * std::sin(kTwoPi * td / profile.slope_period + slope_phase) +
            0.5 * profile.sensor_noise * rng.gaussian();

        trace.rows.push_back({pos_x, pos_y, accel, relative_speed, co2, noise_emission,
                              lane_occupancy, time_loss, lateral_speed, slope});

        // Advance the state (dt = 1 s). The recorded row used the pre-update
        // speed, so a noiseless trace can be replayed from base_speed.
        v = std::max(0.0, v + accel);
        drift = 0.97 * drift + 0.15 * profile.speed_var * rng.gaussian();
        heading += 0.02 * std::sin(kTwoPi * td / 130.0 + heading0);
        pos_x += v * std::cos(heading);
        pos_y += v * std::sin(heading);
    }
    return trace;
}

void write_trace_csv(const RawTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (f) out << ',';
        out << kFeatureNames[f];
    }
    out << '\n';
    char buf[32];
    for (const TraceRow& row : trace.rows) {
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[f]);
            if (f) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out.good()) throw IoError("write failed: " + path);
}

RawTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty trace file: " + path);
    {
        std::string expected;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            if (f) expected += ',';
            expected += kFeatureNames[f];
        }
        if (line != expected) throw DataError("unexpected CSV header in " + path);
    }

    RawTrace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        TraceRow row{};
        std::string cell;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            if (!std::getline(ss, cell, ',')) {
                throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                                std::to_string(kNumFeatures) + " columns");
            }
            try {
                std::size_t used = 0;
                row[f] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(line_no) + ": bad number '" +
                                cell + "'");
            }
            if (!std::isfinite(row[f])) {
                throw DataError(path + ":" + std::to_string(line_no) + ": non-finite value");
            }
        }
        if (std::getline(ss, cell, ',')) {
            throw DataError(path + ":" + std::to_string(line_no) + ": too many columns");
        }
        const double lane = row[feature_index("lane_occupancy")];
        if (lane < 0.0 || lane > 1.0 || row[feature_index("co2_emission")] < 0.0 ||
            row[feature_index("noise_emission")] < 0.0) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": row violates trace invariants");
        }
        trace.rows.push_back(row);
    }
    return trace;
}

}  // namespace fedtst
