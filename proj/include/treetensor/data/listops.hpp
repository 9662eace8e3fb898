#pragma once

#include "treetensor/treelstm/model.hpp"
#include "treetensor/treelstm/tree.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace treetensor::data {

/// Operator ids used as Tree::op.
enum class ListOp : int { Min = 0, Max = 1, Med = 2, Sm = 3 };

inline constexpr std::array<std::string_view, 4> kListOpNames{"MIN", "MAX", "MED", "SM"};
inline constexpr std::size_t kListOpsArity = 5;
/// Leaf token of a missing operand; digits use tokens 0..9.
inline constexpr std::uint32_t kBlank = 10;

/// Digit k is the 10-vector whose first k+1 entries are 1; a blank is all zeros.
Vector encode_listops_leaf(std::uint32_t token);

struct ListOpsSample {
    Tree tree;
    int label = 0;
    bool operator==(const ListOpsSample&) const = default;
};

/// Throws TreeError on a node without operands or a malformed leaf.
int eval_listops(const Tree& tree);

struct ListOpsConfig {
    std::uint64_t seed = 0;
    std::size_t count = 1;
    std::size_t max_depth = 3;
    std::size_t min_operands = 2;
    std::size_t max_operands = 5;
    /// Chance that an operand above max_depth becomes a sub-expression.
    double expand_probability = 0.25;

    void validate() const;
};

/// `exclude` holds rendered lines that must not be emitted (for disjoint splits).
std::vector<ListOpsSample> gen_listops(const ListOpsConfig& cfg,
                                       const std::unordered_set<std::string>* exclude = nullptr);

std::string render_listops(const ListOpsSample& sample);
std::string render_listops_expr(const Tree& tree);
/// Parses `<digit>\t<expr>`; the label is taken from the line, not recomputed.
ListOpsSample parse_listops(std::string_view line);

Example to_example(const ListOpsSample& sample);

}  // namespace treetensor::data
