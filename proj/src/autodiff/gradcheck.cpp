#include "treetensor/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace treetensor {

namespace {

double loss_value(const LossBuilder& build_loss) {
    Tape tape;
    const Var loss = build_loss(tape);
    const auto v = tape.value(loss);
    if (v.size() != 1) throw GraphError("gradient check requires a scalar loss");
    if (!std::isfinite(v[0])) throw NumericError("gradient check: non-finite loss");
    return v[0];
}

}  // namespace

GradCheckReport finite_diff_check(const LossBuilder& build_loss, ParameterStore& params, double eps) {
    params.zero_grad();
    {
        Tape tape;
        const Var loss = build_loss(tape);
        if (!std::isfinite(tape.value(loss)[0])) throw NumericError("gradient check: non-finite loss");
        tape.backward(loss);
    }
    std::vector<DenseTensor> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);
    params.zero_grad();

    GradCheckReport report;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = params[k];
        auto values = p.value.data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + eps;
            const double up = loss_value(build_loss);
            values[i] = saved - eps;
            const double down = loss_value(build_loss);
            values[i] = saved;

            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[k][i];
            const double err =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            ++report.entries_checked;
            if (report.worst_parameter.empty() || err > report.max_relative_error) {
                report.max_relative_error = err;
                report.worst_parameter = p.name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace treetensor
