#pragma once

#include <functional>
#include <vector>

#include "sdwarp/autograd.hpp"

namespace sdwarp {

struct GradientReport {
    // Per input: max |analytic - numeric| scaled by max(1, largest gradient
    // magnitude seen for that input).
    std::vector<double> max_rel_error;
    double worst = 0.0;
    // Set when the worst error exceeds the caller's threshold; interpolation
    // kernels are piecewise linear, so this fires at cell boundaries rather
    // than indicating a wrong gradient. Not fatal.
    bool nondifferentiable_flag = false;
};

// Central-difference check of a scalar-reducible operation. The probe is the
// sum of the operation's outputs. Analytic gradients come from backward();
// numeric ones from (f(x+h) - f(x-h)) / 2h per element.
template <typename T>
GradientReport finite_diff_check(
    const std::function<Var<T>(const std::vector<Var<T>>&)>& op,
    std::vector<Tensor<T>> inputs, double h, double flag_threshold = 1e-4) {
    if (h <= 0) throw ArgumentError("finite_diff_check: perturbation must be positive");

    auto probe_value = [&](const std::vector<Tensor<T>>& ins) -> double {
        std::vector<Var<T>> vars;
        vars.reserve(ins.size());
        for (const auto& t : ins) vars.push_back(constant(t));
        Var<T> out = op(vars);
        double acc = 0;
        for (int64_t i = 0; i < out->value.numel(); ++i)
            acc += static_cast<double>(out->value[i]);
        return acc;
    };

    // Analytic pass.
    std::vector<Var<T>> vars;
    vars.reserve(inputs.size());
    for (auto& t : inputs) vars.push_back(make_var(t, true));
    Var<T> out = op(vars);
    Var<T> probe = out->value.numel() == 1 ? out : sum(out);
    backward(probe);

    GradientReport report;
    report.max_rel_error.resize(inputs.size(), 0.0);
    for (size_t k = 0; k < inputs.size(); ++k) {
        double max_diff = 0.0, max_mag = 0.0;
        for (int64_t i = 0; i < inputs[k].numel(); ++i) {
            std::vector<Tensor<T>> work = inputs;
            const T orig = work[k][i];
            work[k][i] = static_cast<T>(static_cast<double>(orig) + h);
            const double fp = probe_value(work);
            work[k][i] = static_cast<T>(static_cast<double>(orig) - h);
            const double fm = probe_value(work);
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic =
                vars[k]->has_grad() ? static_cast<double>(vars[k]->grad[i]) : 0.0;
            max_diff = std::max(max_diff, std::abs(analytic - numeric));
            max_mag = std::max({max_mag, std::abs(analytic), std::abs(numeric)});
        }
        report.max_rel_error[k] = max_diff / std::max(1.0, max_mag);
        report.worst = std::max(report.worst, report.max_rel_error[k]);
    }
    report.nondifferentiable_flag = report.worst > flag_threshold;
    return report;
}

}  // namespace sdwarp
