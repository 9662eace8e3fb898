#pragma once

#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/treelstm/cell.hpp"
#include "treetensor/treelstm/tree.hpp"

#include "unit/test_support.hpp"

namespace treetensor::test {

// Random tree with `depth` levels of operators; each operator has 1..L children.
inline std::uint32_t grow(Tree& t, Rng& rng, const EncoderConfig& cfg, std::size_t depth) {
    if (depth == 0) {
        Vector x(cfg.input_dim, 0.0);
        x[rng.index(0, cfg.input_dim - 1)] = 1.0;
        return t.add_leaf(0, x);
    }
    const std::size_t n = rng.index(1, cfg.outdegree);
    std::vector<std::uint32_t> kids;
    for (std::size_t j = 0; j < n; ++j) kids.push_back(grow(t, rng, cfg, j == 0 ? depth - 1 : rng.index(0, depth - 1)));
    return t.add_internal(static_cast<int>(rng.index(0, cfg.operator_count - 1)), kids);
}

inline Tree random_tree(Rng& rng, const EncoderConfig& cfg, std::size_t depth) {
    Tree t;
    grow(t, rng, cfg, depth);
    return t;
}

inline void randomize(ParameterStore& store, Rng& rng, double scale = 0.5) {
    for (auto& p : store) p->value = rng.tensor(p->value.shape(), scale);
}

// Copies every parameter whose name exists in both stores.
inline void copy_shared(const ParameterStore& from, ParameterStore& to) {
    for (const auto& p : from)
        if (Parameter* q = to.find(p->name)) q->value = p->value;
}

}  // namespace treetensor::test
