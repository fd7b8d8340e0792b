#include "fedtst/gradcheck.hpp"

#include <cmath>

#include "fedtst/errors.hpp"

namespace fedtst {

namespace {

double eval_loss(const LossFn& f, ParamSet& params) {
    Tape tape(/*recording=*/false);
    Tensor loss = f(tape, params);
    double v = loss.item();
    if (!std::isfinite(v)) throw NumericError("grad_check: loss is not finite");
    return v;
}

}  // namespace

GradCheckResult grad_check(const LossFn& f, ParamSet& params, double step) {
    if (step <= 0.0) throw ConfigError("grad_check: step must be positive");

    params.zero_grads();
    Tape tape(/*recording=*/true);
    Tensor loss = f(tape, params);
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: loss is not finite");
    tape.backward(loss);

    GradCheckResult result;
    for (const auto& name : params.names()) {
        Tensor& t = params.at(name);
        auto values = t.values();
        auto grads = t.grad();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = eval_loss(f, params);
            values[i] = saved - step;
            const double down = eval_loss(f, params);
            values[i] = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double analytic = grads[i];
            const double rel =
                std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = name;
                result.worst_index = i;
                result.analytic = analytic;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace fedtst
