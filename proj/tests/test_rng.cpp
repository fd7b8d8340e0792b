#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "fedtst/rng.hpp"

using namespace fedtst;

TEST_CASE("mt19937_64 engine matches the standard-pinned 10000th output") {
    // The C++ standard fixes the 10000th consecutive invocation of a
    // default-seeded (5489) mt19937_64 to this value.
    Rng rng(5489u);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = rng.next_u64();
    CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("same seed reproduces the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(42);
    for (int i = 0; i < 100; ++i) CHECK(c.gaussian() == d.gaussian());
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
    Rng rng(1);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform(lo,hi) respects bounds") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform(1.5, 2.5);
        CHECK(u >= 1.5);
        CHECK(u <= 2.5);
    }
}

TEST_CASE("gaussian follows the Box-Muller recurrence on the uniform stream") {
    // Recompute the first pair from the raw uniform stream of a twin
    // generator; this pins the transform, not just repeatability.
    Rng raw(99);
    const double u1 = 1.0 - raw.uniform();
    const double u2 = raw.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;

    Rng g(99);
    CHECK(g.gaussian() == r * std::cos(theta));
    CHECK(g.gaussian() == r * std::sin(theta));
}

TEST_CASE("gaussian sample moments are near standard normal") {
    Rng rng(7);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.gaussian();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(std::sqrt(var) - 1.0) < 0.02);
}

TEST_CASE("gaussian(mean, stddev) shifts and scales") {
    Rng a(55), b(55);
    for (int i = 0; i < 50; ++i) {
        double z = a.gaussian();
        CHECK(b.gaussian(3.0, 2.0) == doctest::Approx(3.0 + 2.0 * z).epsilon(1e-15));
    }
}

TEST_CASE("index stays below n") {
    Rng rng(3);
    std::set<std::size_t> seen;
    for (int i = 0; i < 1000; ++i) {
        std::size_t k = rng.index(5);
        CHECK(k < 5);
        seen.insert(k);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("derive_seed is deterministic and order/content sensitive") {
    CHECK(derive_seed({1, 2, 3}) == derive_seed({1, 2, 3}));
    CHECK(derive_seed({1, 2, 3}) != derive_seed({3, 2, 1}));
    CHECK(derive_seed({1, 2, 3}) != derive_seed({1, 2, 4}));
    CHECK(derive_seed({1, 2}) != derive_seed({1, 2, 0}));

    // No collisions across a realistic grid of (master, stream, client, round).
    std::set<std::uint64_t> seeds;
    int count = 0;
    for (std::uint64_t m : {1ULL, 42ULL, 12345ULL})
        for (std::uint64_t s : {kStreamTrace, kStreamInit, kStreamDpNoise, kStreamDropout})
            for (std::uint64_t c = 0; c < 5; ++c)
                for (std::uint64_t r = 0; r < 10; ++r) {
                    seeds.insert(derive_seed({m, s, c, r}));
                    ++count;
                }
    CHECK(int(seeds.size()) == count);
}

TEST_CASE("streams from different tags are unrelated") {
    std::uint64_t master = 2024;
    Rng a(derive_seed({master, kStreamTrace, 0}));
    Rng b(derive_seed({master, kStreamInit, 0}));
    int agree = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++agree;
    CHECK(agree == 0);
}
