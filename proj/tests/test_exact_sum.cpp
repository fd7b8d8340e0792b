#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fedtst/errors.hpp"
#include "fedtst/exact_sum.hpp"
#include "fedtst/rng.hpp"

using namespace fedtst;

TEST_CASE("catastrophic cancellation is handled exactly") {
    // Naive left-to-right summation returns 1.0 here; the exact sum is 2.0.
    CHECK(exact_sum({1e100, 1.0, -1e100, 1.0}) == 2.0);
}

TEST_CASE("ten tenths sum to exactly one") {
    std::vector<double> v(10, 0.1);
    CHECK(exact_sum(v) == 1.0);
}

TEST_CASE("final rounding is correct at half-ulp boundaries") {
    // 1 + 2^-53 is an exact tie: round-half-even keeps 1.0.
    CHECK(exact_sum({1.0, std::pow(2.0, -53)}) == 1.0);
    // Anything past the tie rounds up to the next representable double.
    CHECK(exact_sum({1.0, std::pow(2.0, -53), std::pow(2.0, -106)}) ==
          std::nextafter(1.0, 2.0));
}

TEST_CASE("order of addition does not change the result") {
    Rng rng(11);
    std::vector<double> v;
    for (int i = 0; i < 300; ++i) {
        v.push_back(rng.uniform(-1e6, 1e6) * std::pow(10.0, double(rng.index(17)) - 8.0));
    }
    const double forward = exact_sum(v);
    std::vector<double> rev(v.rbegin(), v.rend());
    CHECK(exact_sum(rev) == forward);

    std::vector<double> shuffled = v;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
    CHECK(exact_sum(shuffled) == forward);
}

TEST_CASE("incremental use matches one-shot use") {
    ExactSum acc;
    acc.add(0.1);
    acc.add(0.2);
    CHECK(acc.value() == exact_sum({0.1, 0.2}));
    acc.add(0.3);
    CHECK(acc.value() == exact_sum({0.1, 0.2, 0.3}));
    acc.reset();
    CHECK(acc.value() == 0.0);
}

TEST_CASE("ten equal privacy spends total exactly ten times one spend") {
    // The exact real sum of ten copies of e rounds once, which is the same
    // result as the correctly rounded product 10*e.
    const double e = 0.8 / std::sqrt(10.0);
    ExactSum acc;
    for (int i = 0; i < 10; ++i) acc.add(e);
    CHECK(acc.value() == 10.0 * e);
    CHECK(acc.value() == 2.529822128134703);
}

TEST_CASE("non-finite input is rejected") {
    ExactSum acc;
    CHECK_THROWS_AS(acc.add(std::numeric_limits<double>::infinity()), NumericError);
    CHECK_THROWS_AS(acc.add(std::numeric_limits<double>::quiet_NaN()), NumericError);
}

TEST_CASE("empty sum is zero") {
    CHECK(exact_sum({}) == 0.0);
}
