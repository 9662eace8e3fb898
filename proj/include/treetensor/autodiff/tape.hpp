#pragma once

#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/tensor/dense_tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace treetensor {

/// Misuse of the computation graph: foreign operands, non-scalar losses.
class GraphError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Tape;

/// Handle to a node recorded on a particular tape.
struct Var {
    const Tape* tape = nullptr;
    std::uint32_t id = 0;
};

enum class Op : std::uint8_t {
    Constant,
    Param,
    Add,
    Hadamard,
    MatVec,
    MultiAffine,
    Bilinear,
    Sigmoid,
    Tanh,
    LeakyRelu,
    Concat,
    SoftmaxCrossEntropy,
    SumSquares,
    Scale,
};

inline constexpr double kLeakySlope = 0.01;

/// Define-by-run reverse-mode tape. Each recorded node caches its forward
/// value; backward() walks the nodes in reverse recording order, which is a
/// reverse topological order because operands must already exist on the tape.
///
/// A tape is single-threaded. Several tapes may read the same parameters
/// concurrently as long as accumulate_parameter_gradients() calls are serialized.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Vector values);
    Var constant(DenseTensor tensor);
    /// Records a parameter leaf; repeated calls with the same parameter return the same node.
    Var param(Parameter& p);

    Var add(Var a, Var b);
    Var add(std::span<const Var> terms);
    Var hadamard(Var a, Var b);
    Var matvec(Var matrix, Var x);
    /// Multi-affine contraction of an augmented tensor with its inputs in mode order.
    Var multi_affine(Var tensor, std::span<const Var> inputs);
    /// out(t) = sum_ij left(i) * B(t, i, j) * right(j) for B of shape [k, n1, n2].
    Var bilinear(Var tensor, Var left, Var right);
    Var sigmoid(Var x);
    Var tanh(Var x);
    /// max(x, 0) + 0.01 min(x, 0)
    Var leaky_relu(Var x);
    Var concat(std::span<const Var> parts);
    /// -log softmax(logits)[target], a scalar node.
    Var softmax_cross_entropy(Var logits, std::size_t target);
    Var sum_squares(Var x);
    Var scale(Var x, double factor);

    [[nodiscard]] std::span<const double> value(Var v) const;
    [[nodiscard]] Shape shape(Var v) const;
    [[nodiscard]] Op op(Var v) const { return nodes_.at(check(v)).op; }
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    /// Computes d loss / d node for every node, then adds the parameter
    /// gradients into Parameter::grad.
    void backward(Var loss);
    /// First half of backward(): node gradients only, parameters untouched.
    void compute_gradients(Var loss);
    /// Second half of backward(): adds node gradients of parameter leaves into Parameter::grad.
    void accumulate_parameter_gradients() const;
    /// Gradient of the last compute_gradients() loss with respect to `v`; empty if `v` got none.
    [[nodiscard]] std::span<const double> gradient(Var v) const;

private:
    struct Node {
        Op op = Op::Constant;
        std::uint32_t operand_begin = 0;
        std::uint32_t operand_count = 0;
        Vector value;
        const DenseTensor* tensor = nullptr;  // Param and tensor Constant leaves
        Parameter* param = nullptr;
        double factor = 0.0;
        std::size_t target = 0;
        Vector cache;  // softmax probabilities
    };

    std::uint32_t check(Var v) const;
    Var push(Node node, std::span<const Var> operands);
    std::span<const std::uint32_t> operands(const Node& n) const {
        return {operand_ids_.data() + n.operand_begin, n.operand_count};
    }
    std::span<double> grad_buffer(std::uint32_t id);
    void propagate(std::uint32_t id);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> operand_ids_;
    std::deque<DenseTensor> owned_tensors_;
    std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
    std::vector<Vector> grads_;
};

}  // namespace treetensor
