#pragma once

#include <functional>

#include "fedtst/params.hpp"
#include "fedtst/tensor.hpp"

namespace fedtst {

/// Scalar loss as a function of the parameters. When called with a recording
/// tape the function must build the graph through tape ops; with a
/// non-recording tape it just evaluates.
using LossFn = std::function<Tensor(Tape&, ParamSet&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares tape gradients against central finite differences
/// (f(x+h) - f(x-h)) / (2h) for every element of every parameter.
/// Relative error is |a - n| / (|a| + |n| + 1e-12).
/// Throws NumericError if the loss evaluates to a non-finite value.
GradCheckResult grad_check(const LossFn& f, ParamSet& params, double step = 1e-6);

}  // namespace fedtst
