#pragma once

#include "treetensor/aggregators/aggregator.hpp"
#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/autodiff/tape.hpp"
#include "treetensor/treelstm/tree.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace treetensor {

struct EncoderConfig {
    AggregatorTag aggregator = AggregatorTag::Sum;
    std::size_t hidden_dim = 1;      // c
    std::size_t rank = 0;            // r, Hosvd only
    std::size_t outdegree = 1;       // L
    std::size_t input_dim = 1;       // m, leaf payload length
    std::size_t operator_count = 1;
    /// Use sigmoid instead of tanh for the update u.
    bool all_sigmoid = false;

    /// Kind of one i/o/u gate: operator-sliced, so no label input.
    [[nodiscard]] AggregatorKind gate_kind() const;
    void validate() const;
};

struct LstmState {
    Vector h;
    Vector c_mem;
};

struct StateVars {
    Var h;
    Var c;
};

/// Parameters of one internal-node cell: aggregated i, o, u gates and
/// slot-indexed forget gates sigmoid(U^f_j h_j + b^f_j).
struct OperatorCell {
    GateParameters input, output, update;
    std::vector<Parameter*> forget_weights;  // L matrices c x c
    std::vector<Parameter*> forget_biases;   // L vectors c
};

/// Leaf cell: gates computed from the payload alone.
struct LeafCell {
    Parameter *w_input, *w_output, *w_update;  // c x m
    Parameter *b_input, *b_output, *b_update;  // c
};

/// Per-operator Tree-LSTM parameters plus the shared leaf cell. Parameters
/// are created zero-valued in the given store under `enc.`-prefixed names.
class CellBank {
public:
    CellBank(ParameterStore& store, const EncoderConfig& config);

    [[nodiscard]] const EncoderConfig& config() const { return config_; }
    [[nodiscard]] const OperatorCell& cell(std::size_t op) const;
    [[nodiscard]] const LeafCell& leaf() const { return leaf_; }

    StateVars leaf_forward(Tape& tape, Var payload) const;
    /// `children` may hold fewer than L states; absent slots are padded with
    /// h = 0 (using `zero`) and contribute no forget term.
    StateVars cell_forward(Tape& tape, std::size_t op, std::span<const StateVars> children, Var zero) const;

private:
    EncoderConfig config_;
    std::vector<OperatorCell> cells_;
    LeafCell leaf_{};
};

/// Encodes trees bottom-up on one tape. Leaf states are shared between
/// identical payloads within the encoder's lifetime.
class TreeEncoder {
public:
    TreeEncoder(Tape& tape, const CellBank& bank);

    StateVars encode(const Tree& tree);

private:
    Tape& tape_;
    const CellBank& bank_;
    Var zero_;
    std::map<Vector, StateVars> leaves_;
};

/// Value-level evaluation of a single cell.
LstmState cell_forward(const CellBank& bank, std::size_t op, std::span<const LstmState> children);
/// Value-level root state.
LstmState encode(const Tree& tree, const CellBank& bank);

}  // namespace treetensor
