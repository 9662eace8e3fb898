#include "treetensor/tensor/tucker.hpp"

#include <algorithm>

namespace treetensor {

Shape TuckerFactors::core_shape(std::size_t rank, std::size_t input_count) {
    Shape s(input_count, rank + 1);
    s.push_back(rank);
    return s;
}

TuckerFactors TuckerFactors::zeros(std::size_t rank, std::size_t context_size,
                                   std::size_t hidden_dim, std::size_t label_dim) {
    if (rank == 0 || hidden_dim == 0) throw ShapeError("tucker factors need positive rank and hidden size");
    TuckerFactors f;
    f.rank = rank;
    f.context_size = context_size;
    f.hidden_dim = hidden_dim;
    f.label_dim = label_dim;
    if (label_dim > 0) f.label_mode = DenseTensor({rank, label_dim});
    f.context_modes.assign(context_size, DenseTensor({rank, hidden_dim}));
    f.core = DenseTensor(core_shape(rank, f.input_count()));
    f.output_mode = DenseTensor({hidden_dim, rank});
    return f;
}

void TuckerFactors::validate() const {
    if (rank == 0 || hidden_dim == 0) throw ShapeError("tucker factors need positive rank and hidden size");
    if (input_count() == 0) throw ShapeError("tucker factors need at least one input mode");
    if ((label_dim > 0) != label_mode.has_value())
        throw ShapeError("tucker label mode presence disagrees with label_dim");
    if (label_mode && label_mode->shape() != Shape{rank, label_dim})
        throw ShapeError("tucker label mode must be r x m, got " + shape_to_string(label_mode->shape()));
    if (context_modes.size() != context_size)
        throw ShapeError("tucker factors carry " + std::to_string(context_modes.size()) +
                         " context modes, expected " + std::to_string(context_size));
    for (const auto& u : context_modes)
        if (u.shape() != Shape{rank, hidden_dim})
            throw ShapeError("tucker context mode must be r x c, got " + shape_to_string(u.shape()));
    if (core.shape() != core_shape(rank, input_count()))
        throw ShapeError("tucker core shape " + shape_to_string(core.shape()) + " expected " +
                         shape_to_string(core_shape(rank, input_count())));
    if (output_mode.shape() != Shape{hidden_dim, rank})
        throw ShapeError("tucker output mode must be c x r, got " + shape_to_string(output_mode.shape()));
}

Vector tucker_apply(const TuckerFactors& f, const std::optional<Vector>& label,
                    std::span<const Vector> context) {
    f.validate();
    if (label.has_value() != (f.label_dim > 0))
        throw ShapeError(f.label_dim > 0 ? "tucker map expects a label input" : "tucker map takes no label input");
    if (context.size() != f.context_size)
        throw ShapeError("tucker map expects " + std::to_string(f.context_size) + " context vectors");

    std::vector<Vector> reduced;
    reduced.reserve(f.input_count());
    if (label) reduced.push_back(matvec(*f.label_mode, *label));
    for (std::size_t j = 0; j < context.size(); ++j) reduced.push_back(matvec(f.context_modes[j], context[j]));

    std::vector<std::span<const double>> inputs(reduced.begin(), reduced.end());
    Vector mixed(f.rank, 0.0);
    kernels::multi_affine_forward(f.core.data(), f.core.shape(), inputs, mixed);
    return matvec(f.output_mode, mixed);
}

namespace {

// [[U, 0], [0, 1]] of shape (r+1) x (n+1).
DenseTensor augment_mode(const DenseTensor& u) {
    const std::size_t r = u.extent(0), n = u.extent(1);
    DenseTensor out({r + 1, n + 1});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * (n + 1) + j] = u[i * n + j];
    out[r * (n + 1) + n] = 1.0;
    return out;
}

DenseTensor embedding(std::size_t rank, std::size_t n) {
    DenseTensor u({rank, n});
    for (std::size_t i = 0; i < n; ++i) u[i * n + i] = 1.0;
    return u;
}

}  // namespace

MultiAffineMap tucker_reconstruct(const TuckerFactors& f) {
    f.validate();
    DenseTensor t = f.core;
    std::size_t mode = 0;
    if (f.label_mode) t = mode_product(t, transpose(augment_mode(*f.label_mode)), mode++);
    for (const auto& u : f.context_modes) t = mode_product(t, transpose(augment_mode(u)), mode++);
    t = mode_product(t, f.output_mode, mode);
    return MultiAffineMap(f.context_size, f.hidden_dim, f.label_dim, std::move(t));
}

TuckerFactors tucker_embed(const MultiAffineMap& map, std::size_t rank) {
    const std::size_t c = map.hidden_dim(), m = map.label_dim();
    if (rank < c || rank < m)
        throw ShapeError("identity embedding needs rank >= " + std::to_string(std::max(c, m)));
    TuckerFactors f = TuckerFactors::zeros(rank, map.context_size(), c, m);
    if (m > 0) f.label_mode = embedding(rank, m);
    for (auto& u : f.context_modes) u = embedding(rank, c);
    f.output_mode = transpose(embedding(rank, c));

    // Copy T into the core, sending each input's homogeneous index to slot r.
    const Shape& ts = map.tensor().shape();
    const std::size_t p = map.input_count();
    std::vector<std::size_t> idx(ts.size(), 0), core_idx(ts.size(), 0);
    for (std::size_t flat = 0; flat < map.tensor().size(); ++flat) {
        for (std::size_t s = 0; s < p; ++s) core_idx[s] = (idx[s] + 1 == ts[s]) ? rank : idx[s];
        core_idx[p] = idx[p];
        f.core.at(core_idx) = map.tensor()[flat];
        for (std::size_t d = ts.size(); d-- > 0;) {
            if (++idx[d] < ts[d]) break;
            idx[d] = 0;
        }
    }
    return f;
}

}  // namespace treetensor
