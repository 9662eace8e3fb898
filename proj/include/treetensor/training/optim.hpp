#pragma once

#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/autodiff/tape.hpp"
#include "treetensor/data/random.hpp"

#include <cstdint>
#include <vector>

namespace treetensor::training {

/// I.i.d. normal entries with mean 0 and standard deviation sqrt(2 / fan_in).
DenseTensor kaiming_init(const Shape& shape, std::size_t fan_in, data::Pcg32& rng);

/// Kaiming-initializes every parameter with a nonzero fan-in and zeroes the
/// rest. Parameter i draws from its own stream mix(seed, i).
void initialize(ParameterStore& store, std::uint64_t seed);

/// lambda * sum of squared entries over the store; biases (fan-in 0) are
/// skipped unless `include_biases`.
Var l2_penalty(Tape& tape, ParameterStore& store, double lambda, bool include_biases);

struct AdaDeltaSettings {
    double rho = 0.95;
    double epsilon = 1e-6;
};

/// One accumulator pair per parameter.
struct AdaDeltaSlot {
    DenseTensor mean_sq_grad;
    DenseTensor mean_sq_delta;
};

/// In-place update of one parameter from its current gradient.
void adadelta_step(Parameter& p, AdaDeltaSlot& slot, const AdaDeltaSettings& s);

class AdaDelta {
public:
    AdaDelta(const ParameterStore& store, AdaDeltaSettings settings = {});

    /// Updates every parameter; throws NumericError before touching anything
    /// if a gradient entry is not finite.
    void step(ParameterStore& store);

    [[nodiscard]] const AdaDeltaSettings& settings() const { return settings_; }
    [[nodiscard]] std::vector<AdaDeltaSlot>& slots() { return slots_; }
    [[nodiscard]] const std::vector<AdaDeltaSlot>& slots() const { return slots_; }

private:
    AdaDeltaSettings settings_;
    std::vector<AdaDeltaSlot> slots_;
};

}  // namespace treetensor::training
