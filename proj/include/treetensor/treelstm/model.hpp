#pragma once

#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/autodiff/tape.hpp"
#include "treetensor/treelstm/cell.hpp"
#include "treetensor/treelstm/tree.hpp"

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

namespace treetensor {

enum class Task { ListOps, Lrt };

std::string_view to_string(Task task);
/// Accepts "listops" and "lrt".
Task parse_task(std::string_view text);

/// Fixed shape of each task's trees and labels.
struct TaskShape {
    std::size_t outdegree;
    std::size_t input_dim;
    std::size_t operator_count;
    std::size_t class_count;
    std::size_t trees_per_example;
};

TaskShape task_shape(Task task);

struct ModelConfig {
    Task task = Task::ListOps;
    AggregatorTag aggregator = AggregatorTag::Sum;
    std::size_t hidden_dim = 1;
    std::size_t rank = 0;
    std::size_t comparison_width = 32;  // k, relation head only
    std::size_t head_hidden = 20;       // MLP width, ListOps head only
    bool all_sigmoid = false;

    [[nodiscard]] EncoderConfig encoder() const;
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// One training or evaluation instance: one tree (ListOps) or a pair (LRT).
struct Example {
    std::vector<Tree> inputs;
    std::size_t label = 0;
};

/// leaky_relu(h_l^T B_t h_r + V_t [h_l; h_r] + d_t) for t = 1..k, then an
/// affine map to the class logits.
class LrtHead {
public:
    LrtHead(ParameterStore& store, std::size_t hidden_dim, std::size_t width, std::size_t classes);
    Var logits(Tape& tape, Var left, Var right) const;

    Parameter *bilinear, *linear, *bias, *out_weight, *out_bias;
};

/// Two leaky-relu layers followed by an affine map to the class logits.
class ListOpsHead {
public:
    ListOpsHead(ParameterStore& store, std::size_t hidden_dim, std::size_t width, std::size_t classes);
    Var logits(Tape& tape, Var h) const;

    Parameter *w1, *b1, *w2, *b2, *w3, *b3;
};

class Model {
public:
    explicit Model(const ModelConfig& config);

    [[nodiscard]] const ModelConfig& config() const { return config_; }
    [[nodiscard]] ParameterStore& parameters() { return store_; }
    [[nodiscard]] const ParameterStore& parameters() const { return store_; }
    [[nodiscard]] const CellBank& encoder() const { return bank_; }

    Var logits(Tape& tape, const Example& example) const;
    /// Negative log-likelihood of the example's label.
    Var loss(Tape& tape, const Example& example) const;
    [[nodiscard]] Vector predict(const Example& example) const;

private:
    ModelConfig config_;
    ParameterStore store_;
    CellBank bank_;
    std::variant<ListOpsHead, LrtHead> head_;
};

}  // namespace treetensor
