#pragma once

#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/autodiff/tape.hpp"
#include "treetensor/tensor/multi_affine.hpp"
#include "treetensor/tensor/tucker.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace treetensor {

enum class AggregatorTag { Sum, Full, Hosvd };

std::string_view to_string(AggregatorTag tag);
/// Accepts "sum", "full", "hosvd"; throws std::invalid_argument otherwise.
AggregatorTag parse_aggregator(std::string_view text);

struct AggregatorKind {
    AggregatorTag tag = AggregatorTag::Sum;
    std::size_t hidden_dim = 1;    // c
    std::size_t context_size = 1;  // L
    std::size_t label_dim = 0;     // m, 0 when the aggregator is an operator slice
    std::size_t rank = 0;          // r, Hosvd only

    /// Throws std::invalid_argument when c or L is zero or a Hosvd kind lacks a rank.
    void validate() const;
};

/// W x + sum_j U_j h_j + b.
struct SumParams {
    std::vector<DenseTensor> context_weights;  // L matrices c x c
    std::optional<DenseTensor> label_weight;   // c x m
    DenseTensor bias;                          // c

    static SumParams zeros(std::size_t context_size, std::size_t hidden_dim, std::size_t label_dim = 0);
};

struct FullParams {
    MultiAffineMap map;
};

struct HosvdParams {
    TuckerFactors factors;
};

using AggregatorParams = std::variant<SumParams, FullParams, HosvdParams>;

/// Pre-activation of a gate for the given label (absent when m = 0) and L context vectors.
Vector aggregate(const AggregatorParams& params, const std::optional<Vector>& label,
                 std::span<const Vector> context);

/// The augmented tensor whose multi-affine map equals the weighted sum: the
/// label and each context slot contribute only through entries whose other
/// input indices all sit on the homogeneous slot, and the bias lives at the
/// all-homogeneous entry.
FullParams sum_to_tensor(const SumParams& p);

enum class CountConvention {
    /// Matches the per-aggregator counts reported alongside the accuracy tables:
    /// Full c(c+1)^L, Sum L c^2, Hosvd L c r + r (r+1)^L.
    PaperTable,
    /// Every scalar of one gate: Full (m+1)(c+1)^L c, Sum cm + Lc^2 + c,
    /// Hosvd mr + (L+1)cr + r(r+1)^(#inputs), with label terms dropped when m = 0.
    AllScalars,
};

std::string_view to_string(CountConvention convention);
CountConvention parse_convention(std::string_view text);

std::uint64_t param_count(const AggregatorKind& kind, CountConvention convention);

// ---------------------------------------------------------------------------
// Learnable gates recorded on a tape.

struct SumGate {
    std::vector<Parameter*> context_weights;
    Parameter* label_weight = nullptr;
    Parameter* bias = nullptr;
};

struct FullGate {
    Parameter* tensor = nullptr;
};

struct HosvdGate {
    Parameter* label_mode = nullptr;
    std::vector<Parameter*> context_modes;
    Parameter* core = nullptr;
    Parameter* output_mode = nullptr;
};

using GateParameters = std::variant<SumGate, FullGate, HosvdGate>;

/// Adds zero-valued parameters named `<prefix>.<part>` for one gate, tagging
/// each with the fan-in used by Kaiming initialization.
GateParameters make_gate(ParameterStore& store, const AggregatorKind& kind, const std::string& prefix);

Var aggregate(Tape& tape, const GateParameters& gate, std::optional<Var> label,
              std::span<const Var> context);

/// Snapshot of a gate's current values.
AggregatorParams gate_values(const GateParameters& gate, const AggregatorKind& kind);
/// Overwrites a gate's values; the variant alternative must match the gate.
void assign_gate(const GateParameters& gate, const AggregatorParams& values);

}  // namespace treetensor
