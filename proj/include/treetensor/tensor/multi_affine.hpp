#pragma once

#include "treetensor/tensor/dense_tensor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace treetensor {

/// Multi-affine map R^m x (R^c)^L -> R^c stored as an augmented tensor.
///
/// Tensor modes are ordered [m+1 (only when m > 0), c+1 repeated L times, c].
/// Every input is extended with a trailing homogeneous 1 before contraction,
/// so the last index of each input mode carries the affine (bias) terms.
class MultiAffineMap {
public:
    MultiAffineMap(std::size_t context_size, std::size_t hidden_dim, std::size_t label_dim,
                   DenseTensor tensor);

    static MultiAffineMap zeros(std::size_t context_size, std::size_t hidden_dim,
                                std::size_t label_dim = 0);
    static Shape tensor_shape(std::size_t context_size, std::size_t hidden_dim,
                              std::size_t label_dim);

    [[nodiscard]] std::size_t context_size() const { return context_size_; }
    [[nodiscard]] std::size_t hidden_dim() const { return hidden_dim_; }
    [[nodiscard]] std::size_t label_dim() const { return label_dim_; }
    [[nodiscard]] bool has_label() const { return label_dim_ > 0; }
    /// Number of input modes (context slots plus the label slot if present).
    [[nodiscard]] std::size_t input_count() const { return context_size_ + (has_label() ? 1 : 0); }

    [[nodiscard]] const DenseTensor& tensor() const { return tensor_; }
    [[nodiscard]] DenseTensor& tensor() { return tensor_; }

private:
    std::size_t context_size_;
    std::size_t hidden_dim_;
    std::size_t label_dim_;
    DenseTensor tensor_;
};

/// h(k) = sum T(i, j1..jL, k) * xbar(i) * hbar_1(j1) ... hbar_L(jL). No nonlinearity.
Vector apply_multi_affine(const MultiAffineMap& map, const std::optional<Vector>& label,
                          std::span<const Vector> context);

namespace kernels {

/// Contracts every input mode of an augmented tensor. `extents` lists all modes
/// including the trailing output mode; input s has extents[s] - 1 entries.
void multi_affine_forward(std::span<const double> tensor, std::span<const std::size_t> extents,
                          std::span<const std::span<const double>> inputs, std::span<double> out);

/// Adjoint of multi_affine_forward. Gradients are added into `input_grads`
/// (one span per input, may be empty to skip) and into `tensor_grad` when it
/// is non-empty.
void multi_affine_backward(std::span<const double> tensor, std::span<const std::size_t> extents,
                           std::span<const std::span<const double>> inputs,
                           std::span<const double> grad_out,
                           std::span<const std::span<double>> input_grads,
                           std::span<double> tensor_grad);

}  // namespace kernels

}  // namespace treetensor
