#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fedtst/errors.hpp"

namespace fedtst {

/// Exact floating-point accumulator (Shewchuk's algorithm, as in Python's
/// math.fsum). The running sum is kept as a list of non-overlapping partials
/// whose exact real sum equals the exact sum of everything added; value()
/// rounds that exact sum to the nearest double. Because the result depends
/// only on the multiset of addends, sums are identical under any permutation
/// of the inputs — which is what makes ledger totals and FedAvg
/// order-independent to the last bit.
class ExactSum {
public:
    void add(double x) {
        if (!std::isfinite(x)) {
            throw NumericError("ExactSum: non-finite addend");
        }
        std::size_t used = 0;
        for (std::size_t i = 0; i < partials_.size(); ++i) {
            double y = partials_[i];
            if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[used++] = lo;
            x = hi;
        }
        partials_.resize(used);
        partials_.push_back(x);
    }

    /// Correctly rounded value of the exact sum.
    double value() const {
        if (partials_.empty()) return 0.0;
        std::size_t n = partials_.size();
        double hi = partials_[--n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            const double yr = hi - x;
            lo = y - yr;
            if (lo != 0.0) break;
        }
        // Round-half-even correction when the remainder is exactly half an ulp.
        if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                      (lo > 0.0 && partials_[n - 1] > 0.0))) {
            const double y2 = lo * 2.0;
            const double x = hi + y2;
            if (y2 == x - hi) hi = x;
        }
        return hi;
    }

    void reset() { partials_.clear(); }

private:
    std::vector<double> partials_;
};

/// Exactly rounded sum of a range of doubles.
inline double exact_sum(const std::vector<double>& values) {
    ExactSum s;
    for (double v : values) s.add(v);
    return s.value();
}

}  // namespace fedtst
