#include "treetensor/training/optim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace treetensor::training {

DenseTensor kaiming_init(const Shape& shape, std::size_t fan_in, data::Pcg32& rng) {
    if (fan_in == 0) throw std::invalid_argument("kaiming_init needs fan_in >= 1");
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    DenseTensor t(shape);
    for (double& v : t.data()) v = normal(rng);
    return t;
}

void initialize(ParameterStore& store, std::uint64_t seed) {
    for (std::size_t i = 0; i < store.size(); ++i) {
        Parameter& p = store[i];
        if (p.fan_in == 0) {
            p.value.fill(0.0);
            continue;
        }
        data::Pcg32 rng(data::mix(seed, i));
        p.value = kaiming_init(p.value.shape(), p.fan_in, rng);
    }
}

Var l2_penalty(Tape& tape, ParameterStore& store, double lambda, bool include_biases) {
    std::vector<Var> terms;
    for (auto& p : store)
        if (include_biases || p->fan_in != 0) terms.push_back(tape.sum_squares(tape.param(*p)));
    if (terms.empty()) return tape.constant(Vector{0.0});
    return tape.scale(terms.size() == 1 ? terms[0] : tape.add(terms), lambda);
}

void adadelta_step(Parameter& p, AdaDeltaSlot& slot, const AdaDeltaSettings& s) {
    auto x = p.value.data();
    const auto g = p.grad.data();
    auto eg = slot.mean_sq_grad.data();
    auto ed = slot.mean_sq_delta.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        eg[i] = s.rho * eg[i] + (1.0 - s.rho) * g[i] * g[i];
        const double dx = -(std::sqrt(ed[i] + s.epsilon) / std::sqrt(eg[i] + s.epsilon)) * g[i];
        ed[i] = s.rho * ed[i] + (1.0 - s.rho) * dx * dx;
        x[i] += dx;
    }
}

AdaDelta::AdaDelta(const ParameterStore& store, AdaDeltaSettings settings) : settings_(settings) {
    for (const auto& p : store) slots_.push_back({DenseTensor(p->value.shape()), DenseTensor(p->value.shape())});
}

void AdaDelta::step(ParameterStore& store) {
    if (store.size() != slots_.size()) throw std::logic_error("optimizer state does not match the parameter store");
    for (const auto& p : store)
        for (std::size_t i = 0; i < p->grad.size(); ++i)
            if (!std::isfinite(p->grad[i]))
                throw NumericError("non-finite gradient in " + p->name + " at entry " + std::to_string(i));
    for (std::size_t k = 0; k < store.size(); ++k) adadelta_step(store[k], slots_[k], settings_);
}

}  // namespace treetensor::training
