#pragma once

#include "treetensor/tensor/dense_tensor.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace treetensor {

/// Learnable tensor together with its accumulated gradient.
struct Parameter {
    std::string name;
    DenseTensor value;
    DenseTensor grad;
    /// Contraction width feeding each output unit; 0 marks a bias-like tensor.
    std::size_t fan_in = 0;

    Parameter(std::string name_, DenseTensor value_, std::size_t fan_in_ = 0)
        : name(std::move(name_)), value(std::move(value_)), grad(value.shape()), fan_in(fan_in_) {}

    void zero_grad() { grad.fill(0.0); }
};

/// Named parameters kept in insertion order. Addresses are stable for the
/// lifetime of the store, so tapes and cell banks hold raw pointers.
class ParameterStore {
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;
    ParameterStore(ParameterStore&&) = default;
    ParameterStore& operator=(ParameterStore&&) = default;

    Parameter& add(std::string name, DenseTensor value, std::size_t fan_in = 0);
    [[nodiscard]] Parameter& get(const std::string& name);
    [[nodiscard]] const Parameter& get(const std::string& name) const;
    [[nodiscard]] Parameter* find(const std::string& name);
    [[nodiscard]] bool contains(const std::string& name) const { return index_.count(name) != 0; }

    [[nodiscard]] std::size_t size() const { return params_.size(); }
    [[nodiscard]] Parameter& operator[](std::size_t i) { return *params_[i]; }
    [[nodiscard]] const Parameter& operator[](std::size_t i) const { return *params_[i]; }

    [[nodiscard]] std::size_t scalar_count() const;
    void zero_grad();

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace treetensor
