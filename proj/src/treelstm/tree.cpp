#include "treetensor/treelstm/tree.hpp"

#include <algorithm>
#include <string>

namespace treetensor {

std::uint32_t Tree::add_leaf(std::uint32_t token, Vector payload) {
    TreeNode n;
    n.token = token;
    n.payload = std::move(payload);
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t Tree::add_internal(int op, std::vector<std::uint32_t> children) {
    if (op < 0) throw TreeError("operator id must be non-negative");
    for (auto c : children)
        if (c >= nodes_.size()) throw TreeError("child " + std::to_string(c) + " does not precede its parent");
    TreeNode n;
    n.op = op;
    n.children = std::move(children);
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t Tree::root() const {
    if (nodes_.empty()) throw TreeError("empty tree has no root");
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::size_t Tree::depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].is_leaf()) continue;
        std::size_t below = 0;
        for (auto c : nodes_[i].children) below = std::max(below, d[c]);
        d[i] = below + 1;
    }
    return nodes_.empty() ? 0 : d.back();
}

std::size_t Tree::operator_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

void Tree::validate(std::size_t max_outdegree, std::size_t operator_count, std::size_t input_dim) const {
    if (nodes_.empty()) throw TreeError("empty tree");
    std::vector<int> parents(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const TreeNode& n = nodes_[i];
        const std::string where = "node " + std::to_string(i) + ": ";
        if (n.is_leaf()) {
            if (!n.children.empty()) throw TreeError(where + "leaf with children");
            if (n.payload.size() != input_dim)
                throw TreeError(where + "payload length " + std::to_string(n.payload.size()) + ", expected " +
                                std::to_string(input_dim));
            continue;
        }
        if (static_cast<std::size_t>(n.op) >= operator_count)
            throw TreeError(where + "unknown operator id " + std::to_string(n.op));
        if (n.children.empty()) throw TreeError(where + "operator without operands");
        if (n.children.size() > max_outdegree)
            throw TreeError(where + "outdegree " + std::to_string(n.children.size()) + " exceeds " +
                            std::to_string(max_outdegree));
        for (auto c : n.children) {
            if (c >= i) throw TreeError(where + "child does not precede its parent");
            ++parents[c];
        }
    }
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
        if (parents[i] != 1) throw TreeError("node " + std::to_string(i) + " has " + std::to_string(parents[i]) + " parents");
    if (parents.back() != 0) throw TreeError("root has a parent");
}

}  // namespace treetensor
