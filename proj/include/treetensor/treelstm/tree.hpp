#pragma once

#include "treetensor/tensor/dense_tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace treetensor {

/// Structural problem with a tree: bad child index, outdegree, operator or payload.
class TreeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TreeNode {
    static constexpr int kLeaf = -1;

    int op = kLeaf;               // operator id for internal nodes
    std::uint32_t token = 0;      // task token for leaves
    Vector payload;               // leaf input vector
    std::vector<std::uint32_t> children;

    [[nodiscard]] bool is_leaf() const { return op == kLeaf; }
    bool operator==(const TreeNode&) const = default;
};

/// Ordered tree stored in post-order: children always precede their parent
/// and the root is the last node.
class Tree {
public:
    std::uint32_t add_leaf(std::uint32_t token, Vector payload);
    std::uint32_t add_internal(int op, std::vector<std::uint32_t> children);

    [[nodiscard]] const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
    [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }
    [[nodiscard]] bool empty() const { return nodes_.empty(); }
    [[nodiscard]] std::uint32_t root() const;

    /// Longest root-to-leaf path counted in internal nodes; a single leaf has depth 0.
    [[nodiscard]] std::size_t depth() const;
    [[nodiscard]] std::size_t operator_count() const;

    /// Checks that every node is reachable exactly once from the root, that
    /// outdegrees are within `max_outdegree`, operator ids below `operator_count`,
    /// and leaf payloads of length `input_dim`.
    void validate(std::size_t max_outdegree, std::size_t operator_count, std::size_t input_dim) const;

    bool operator==(const Tree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

}  // namespace treetensor
