#pragma once

#include "treetensor/tensor/dense_tensor.hpp"
#include "treetensor/tensor/multi_affine.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace treetensor {

/// Tucker-factored multi-affine map: every input is projected to R^r by its
/// mode matrix, augmented with a homogeneous 1, mixed by the core tensor and
/// lifted back to R^c by the output mode matrix.
struct TuckerFactors {
    std::size_t rank = 0;
    std::size_t context_size = 0;
    std::size_t hidden_dim = 0;
    std::size_t label_dim = 0;
    std::optional<DenseTensor> label_mode;   // r x m
    std::vector<DenseTensor> context_modes;  // L matrices, r x c
    DenseTensor core;                        // [(r+1) per input mode, r]
    DenseTensor output_mode;                 // c x r

    static TuckerFactors zeros(std::size_t rank, std::size_t context_size, std::size_t hidden_dim,
                               std::size_t label_dim = 0);
    static Shape core_shape(std::size_t rank, std::size_t input_count);

    [[nodiscard]] std::size_t input_count() const {
        return context_size + (label_dim > 0 ? 1 : 0);
    }
    /// Throws ShapeError if any factor disagrees with (r, c, m, L).
    void validate() const;
};

Vector tucker_apply(const TuckerFactors& f, const std::optional<Vector>& label,
                    std::span<const Vector> context);

/// Materializes the full augmented tensor the factors represent. Input mode
/// matrices are extended to (r+1) x (c+1) blocks so the homogeneous
/// coordinate of each input lands on the core's last slot.
MultiAffineMap tucker_reconstruct(const TuckerFactors& f);

/// Exact factorization of `map` with identity-embedded mode matrices.
/// Requires rank >= hidden_dim and rank >= label_dim.
TuckerFactors tucker_embed(const MultiAffineMap& map, std::size_t rank);

}  // namespace treetensor
