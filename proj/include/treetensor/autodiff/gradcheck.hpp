#pragma once

#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/autodiff/tape.hpp"

#include <cstddef>
#include <functional>
#include <string>

namespace treetensor {

/// Records a scalar loss on the given tape using parameters from a store.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients with central differences over every entry
/// of every parameter in `params`. The relative error of one entry is
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
///
/// Parameter values are restored and gradients zeroed on return. Throws
/// NumericError if any evaluated loss is not finite.
GradCheckReport finite_diff_check(const LossBuilder& build_loss, ParameterStore& params,
                                  double eps = 1e-5);

}  // namespace treetensor
