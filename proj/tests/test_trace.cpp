#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "fedtst/errors.hpp"
#include "fedtst/trace.hpp"

using namespace fedtst;

TEST_CASE("feature table lookups") {
    CHECK(feature_index("position_x") == 0);
    CHECK(feature_index("co2_emission") == 4);
    CHECK(feature_index("slope") == 9);
    CHECK_THROWS_AS(feature_index("speed"), ConfigError);
}

TEST_CASE("trace generation is deterministic per seed") {
    TraceProfile p = client_profile(2);
    RawTrace a = generate_trace(77, 64, p);
    RawTrace b = generate_trace(77, 64, p);
    REQUIRE(a.size() == 64);
    CHECK(a.rows == b.rows);

    RawTrace c = generate_trace(78, 64, p);
    CHECK(a.rows != c.rows);
}

TEST_CASE("generated traces respect the domain invariants") {
    for (std::size_t client = 0; client < 5; ++client) {
        RawTrace t = generate_trace(1000 + client, 300, client_profile(client));
        for (const TraceRow& row : t.rows) {
            CHECK(row[feature_index("lane_occupancy")] >= 0.0);
            CHECK(row[feature_index("lane_occupancy")] <= 1.0);
            CHECK(row[feature_index("co2_emission")] >= 0.0);
            CHECK(row[feature_index("noise_emission")] >= 0.0);
            CHECK(row[feature_index("relative_speed")] >= 0.0);
            for (double v : row) CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("zero noise amplitudes make CO2 an exact map of speed*acceleration") {
    TraceProfile p = client_profile(1);
    p.speed_var = 0.0;
    p.accel_jitter = 0.0;
    p.sensor_noise = 0.0;
    RawTrace t = generate_trace(5, 128, p);

    // Speed is reconstructible from the recorded accelerations: it starts at
    // base_speed and integrates one accel per one-second step.
    double v = p.base_speed;
    for (const TraceRow& row : t.rows) {
        const double a = row[feature_index("acceleration")];
        CHECK(row[feature_index("co2_emission")] == co2_map(v * a, p.emission_scale));
        v = std::max(0.0, v + a);
    }
}

TEST_CASE("client profiles are heterogeneous") {
    for (std::size_t i = 0; i + 1 < 5; ++i) {
        TraceProfile a = client_profile(i);
        TraceProfile b = client_profile(i + 1);
        CHECK(a.base_speed != b.base_speed);
        CHECK(a.emission_scale != b.emission_scale);
        CHECK(a.congestion != b.congestion);
    }
}

TEST_CASE("short traces are rejected") {
    CHECK_THROWS_AS(generate_trace(1, 15, client_profile(0)), ConfigError);
    CHECK_NOTHROW(generate_trace(1, 16, client_profile(0)));
}

TEST_CASE("CSV round trip preserves every bit") {
    const std::string path = "trace_roundtrip_test.csv";
    RawTrace t = generate_trace(31, 50, client_profile(3));
    write_trace_csv(t, path);
    RawTrace back = read_trace_csv(path);
    CHECK(back.rows == t.rows);
    std::remove(path.c_str());
}

TEST_CASE("CSV parsing rejects damaged files") {
    const std::string path = "trace_bad_test.csv";
    SUBCASE("wrong header") {
        std::ofstream(path) << "a,b,c\n1,2,3\n";
        CHECK_THROWS_AS(read_trace_csv(path), DataError);
    }
    SUBCASE("bad number") {
        std::ofstream out(path);
        for (std::size_t f = 0; f < kNumFeatures; ++f) out << (f ? "," : "") << kFeatureNames[f];
        out << "\n1,2,3,4,oops,6,0.5,8,9,10\n";
        out.close();
        CHECK_THROWS_AS(read_trace_csv(path), DataError);
    }
    SUBCASE("invariant violation") {
        std::ofstream out(path);
        for (std::size_t f = 0; f < kNumFeatures; ++f) out << (f ? "," : "") << kFeatureNames[f];
        out << "\n1,2,3,4,-5,6,0.5,8,9,10\n";  // negative CO2
        out.close();
        CHECK_THROWS_AS(read_trace_csv(path), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_trace_csv("no_such_file_anywhere.csv"), IoError);
    }
    std::remove(path.c_str());
}
