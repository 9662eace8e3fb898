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
enum class LrtOp : int { And = 0, Or = 1, Not = 2 };
inline constexpr std::array<std::string_view, 3> kLrtOpNames{"and", "or", "not"};
inline constexpr std::size_t kVariables = 6;  // a..f, leaf tokens 0..5

enum class Relation : int { Equiv, Fwd, Rev, Neg, Alt, Cov, Indep };
inline constexpr std::array<std::string_view, 7> kRelationNames{"equiv", "fwd", "rev", "neg", "alt", "cov", "indep"};

std::string_view to_string(Relation r);
/// Throws std::invalid_argument on an unknown name.
Relation parse_relation(std::string_view text);

/// One-hot vector in R^6.
Vector encode_lrt_leaf(std::uint32_t token);

/// Bit s is the formula's value under the assignment where variable v is (s >> v) & 1.
std::uint64_t truth_table(const Tree& formula);
Relation relation_of(std::uint64_t left, std::uint64_t right);
Relation lrt_relation(const Tree& left, const Tree& right);

struct LrtSample {
    Tree left;
    Tree right;
    Relation relation = Relation::Indep;
    bool operator==(const LrtSample&) const = default;
};

struct LrtConfig {
    std::uint64_t seed = 0;
    std::size_t count = 1;
    std::size_t max_operators = 4;
    double not_probability = 1.0 / 3.0;
    /// Reject samples whose relation already fills half of the requested count.
    bool cap_classes = true;

    void validate() const;
};

std::vector<LrtSample> gen_lrt(const LrtConfig& cfg, const std::unordered_set<std::string>* exclude = nullptr);

std::string render_formula(const Tree& formula);
std::string render_lrt(const LrtSample& sample);
Tree parse_formula(std::string_view text, std::size_t base_offset = 0);
/// Parses `<relation>\t<formula>\t<formula>`; the relation is taken from the line.
LrtSample parse_lrt(std::string_view line);

Example to_example(const LrtSample& sample);

}  // namespace treetensor::data
