#include "treetensor/autodiff/tape.hpp"
#include "treetensor/tensor/multi_affine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace treetensor {

namespace {

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::uint32_t Tape::check(Var v) const {
    if (v.tape != this) throw GraphError("operand belongs to a different tape");
    if (v.id >= nodes_.size()) throw GraphError("operand id out of range");
    return v.id;
}

Var Tape::push(Node node, std::span<const Var> ops) {
    node.operand_begin = static_cast<std::uint32_t>(operand_ids_.size());
    node.operand_count = static_cast<std::uint32_t>(ops.size());
    for (Var v : ops) operand_ids_.push_back(check(v));
    nodes_.push_back(std::move(node));
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::span<const double> Tape::value(Var v) const {
    const Node& n = nodes_[check(v)];
    if (n.tensor) return n.tensor->data();
    return n.value;
}

Shape Tape::shape(Var v) const {
    const Node& n = nodes_[check(v)];
    if (n.tensor) return n.tensor->shape();
    return Shape{n.value.size()};
}

Var Tape::constant(Vector values) {
    if (values.empty()) throw ShapeError("constant must have at least one entry");
    Node n;
    n.op = Op::Constant;
    n.value = std::move(values);
    return push(std::move(n), {});
}

Var Tape::constant(DenseTensor tensor) {
    owned_tensors_.push_back(std::move(tensor));
    Node n;
    n.op = Op::Constant;
    n.tensor = &owned_tensors_.back();
    return push(std::move(n), {});
}

Var Tape::param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
    Node n;
    n.op = Op::Param;
    n.tensor = &p.value;
    n.param = &p;
    Var v = push(std::move(n), {});
    param_nodes_.emplace(&p, v.id);
    return v;
}

Var Tape::add(Var a, Var b) {
    const Var terms[] = {a, b};
    return add(terms);
}

Var Tape::add(std::span<const Var> terms) {
    if (terms.empty()) throw GraphError("add needs at least one term");
    const auto first = value(terms[0]);
    Node n;
    n.op = Op::Add;
    n.value.assign(first.begin(), first.end());
    for (std::size_t t = 1; t < terms.size(); ++t) {
        const auto v = value(terms[t]);
        if (v.size() != n.value.size()) throw ShapeError("add: operand length mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) n.value[i] += v[i];
    }
    return push(std::move(n), terms);
}

Var Tape::hadamard(Var a, Var b) {
    const auto x = value(a), y = value(b);
    if (x.size() != y.size()) throw ShapeError("hadamard: operand length mismatch");
    Node n;
    n.op = Op::Hadamard;
    n.value.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] * y[i];
    const Var ops[] = {a, b};
    return push(std::move(n), ops);
}

Var Tape::matvec(Var matrix, Var x) {
    const Shape s = shape(matrix);
    if (s.size() != 2) throw ShapeError("matvec: first operand must be a matrix, got " + shape_to_string(s));
    const auto m = value(matrix), v = value(x);
    const std::size_t rows = s[0], cols = s[1];
    if (v.size() != cols)
        throw ShapeError("matvec: matrix " + shape_to_string(s) + " against vector of length " +
                         std::to_string(v.size()));
    Node n;
    n.op = Op::MatVec;
    n.value.assign(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* row = m.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * v[j];
        n.value[i] = acc;
    }
    const Var ops[] = {matrix, x};
    return push(std::move(n), ops);
}

Var Tape::multi_affine(Var tensor, std::span<const Var> inputs) {
    const Shape s = shape(tensor);
    std::vector<std::span<const double>> in;
    in.reserve(inputs.size());
    for (Var v : inputs) in.push_back(value(v));
    Node n;
    n.op = Op::MultiAffine;
    n.value.assign(s.back(), 0.0);
    kernels::multi_affine_forward(value(tensor), s, in, n.value);
    std::vector<Var> ops;
    ops.reserve(inputs.size() + 1);
    ops.push_back(tensor);
    ops.insert(ops.end(), inputs.begin(), inputs.end());
    return push(std::move(n), ops);
}

Var Tape::bilinear(Var tensor, Var left, Var right) {
    const Shape s = shape(tensor);
    const auto b = value(tensor), l = value(left), r = value(right);
    if (s.size() != 3 || s[1] != l.size() || s[2] != r.size())
        throw ShapeError("bilinear: tensor " + shape_to_string(s) + " against vectors of length " +
                         std::to_string(l.size()) + " and " + std::to_string(r.size()));
    const std::size_t k = s[0], n1 = s[1], n2 = s[2];
    Node n;
    n.op = Op::Bilinear;
    n.value.assign(k, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n1; ++i) {
            const double* row = b.data() + (t * n1 + i) * n2;
            double inner = 0.0;
            for (std::size_t j = 0; j < n2; ++j) inner += row[j] * r[j];
            acc += l[i] * inner;
        }
        n.value[t] = acc;
    }
    const Var ops[] = {tensor, left, right};
    return push(std::move(n), ops);
}

Var Tape::sigmoid(Var x) {
    const auto v = value(x);
    Node n;
    n.op = Op::Sigmoid;
    n.value.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) n.value[i] = sigmoid_scalar(v[i]);
    const Var ops[] = {x};
    return push(std::move(n), ops);
}

Var Tape::tanh(Var x) {
    const auto v = value(x);
    Node n;
    n.op = Op::Tanh;
    n.value.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) n.value[i] = std::tanh(v[i]);
    const Var ops[] = {x};
    return push(std::move(n), ops);
}

Var Tape::leaky_relu(Var x) {
    const auto v = value(x);
    Node n;
    n.op = Op::LeakyRelu;
    n.value.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) n.value[i] = v[i] > 0.0 ? v[i] : kLeakySlope * v[i];
    const Var ops[] = {x};
    return push(std::move(n), ops);
}

Var Tape::concat(std::span<const Var> parts) {
    if (parts.empty()) throw GraphError("concat needs at least one part");
    Node n;
    n.op = Op::Concat;
    for (Var p : parts) {
        const auto v = value(p);
        n.value.insert(n.value.end(), v.begin(), v.end());
    }
    return push(std::move(n), parts);
}

Var Tape::softmax_cross_entropy(Var logits, std::size_t target) {
    const auto z = value(logits);
    if (target >= z.size()) throw ShapeError("softmax_cross_entropy: target class out of range");
    const double zmax = *std::max_element(z.begin(), z.end());
    Node n;
    n.op = Op::SoftmaxCrossEntropy;
    n.cache.resize(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        n.cache[i] = std::exp(z[i] - zmax);
        sum += n.cache[i];
    }
    for (auto& p : n.cache) p /= sum;
    n.value = {std::log(sum) + zmax - z[target]};
    n.target = target;
    const Var ops[] = {logits};
    return push(std::move(n), ops);
}

Var Tape::sum_squares(Var x) {
    const auto v = value(x);
    double acc = 0.0;
    for (double e : v) acc += e * e;
    Node n;
    n.op = Op::SumSquares;
    n.value = {acc};
    const Var ops[] = {x};
    return push(std::move(n), ops);
}

Var Tape::scale(Var x, double factor) {
    const auto v = value(x);
    Node n;
    n.op = Op::Scale;
    n.value.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) n.value[i] = factor * v[i];
    n.factor = factor;
    const Var ops[] = {x};
    return push(std::move(n), ops);
}

std::span<double> Tape::grad_buffer(std::uint32_t id) {
    auto& g = grads_[id];
    if (g.empty()) g.assign(value(Var{this, id}).size(), 0.0);
    return g;
}

std::span<const double> Tape::gradient(Var v) const {
    const auto id = check(v);
    if (id >= grads_.size()) return {};
    return grads_[id];
}

void Tape::compute_gradients(Var loss) {
    const auto root = check(loss);
    if (value(loss).size() != 1) throw GraphError("backward requires a scalar loss node");
    grads_.assign(nodes_.size(), Vector{});
    grads_[root] = {1.0};
    for (std::uint32_t id = root + 1; id-- > 0;) {
        if (grads_[id].empty()) continue;
        propagate(id);
    }
}

void Tape::accumulate_parameter_gradients() const {
    for (const auto& [param, id] : param_nodes_) {
        (void)param;
        if (id >= grads_.size() || grads_[id].empty()) continue;
        Parameter* p = nodes_[id].param;
        auto dst = p->grad.data();
        const auto& src = grads_[id];
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    }
}

void Tape::backward(Var loss) {
    compute_gradients(loss);
    accumulate_parameter_gradients();
}

void Tape::propagate(std::uint32_t id) {
    const Node& n = nodes_[id];
    const auto ops = operands(n);
    // Operands always precede `id`, so writing their buffers leaves g intact.
    const Vector& g = grads_[id];

    switch (n.op) {
    case Op::Constant:
    case Op::Param:
        break;
    case Op::Add:
        for (auto o : ops) {
            auto dst = grad_buffer(o);
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        }
        break;
    case Op::Hadamard: {
        const auto a = value(Var{this, ops[0]}), b = value(Var{this, ops[1]});
        {
            auto ga = grad_buffer(ops[0]);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        }
        auto gb = grad_buffer(ops[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        break;
    }
    case Op::MatVec: {
        const Shape s = shape(Var{this, ops[0]});
        const std::size_t rows = s[0], cols = s[1];
        const auto m = value(Var{this, ops[0]}), x = value(Var{this, ops[1]});
        {
            auto gm = grad_buffer(ops[0]);
            for (std::size_t i = 0; i < rows; ++i) {
                double* row = gm.data() + i * cols;
                for (std::size_t j = 0; j < cols; ++j) row[j] += g[i] * x[j];
            }
        }
        auto gx = grad_buffer(ops[1]);
        for (std::size_t i = 0; i < rows; ++i) {
            const double* row = m.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) gx[j] += row[j] * g[i];
        }
        break;
    }
    case Op::MultiAffine: {
        const Var t{this, ops[0]};
        const Shape s = shape(t);
        std::vector<std::span<const double>> inputs;
        inputs.reserve(ops.size() - 1);
        for (std::size_t k = 1; k < ops.size(); ++k) inputs.push_back(value(Var{this, ops[k]}));
        for (auto o : ops) grad_buffer(o);
        std::vector<std::span<double>> input_grads;
        input_grads.reserve(ops.size() - 1);
        for (std::size_t k = 1; k < ops.size(); ++k) input_grads.emplace_back(grads_[ops[k]]);
        kernels::multi_affine_backward(value(t), s, inputs, g, input_grads, grads_[ops[0]]);
        break;
    }
    case Op::Bilinear: {
        const Shape s = shape(Var{this, ops[0]});
        const std::size_t k = s[0], n1 = s[1], n2 = s[2];
        const auto b = value(Var{this, ops[0]});
        const auto l = value(Var{this, ops[1]}), r = value(Var{this, ops[2]});
        for (auto o : ops) grad_buffer(o);
        auto gb = std::span<double>(grads_[ops[0]]);
        auto gl = std::span<double>(grads_[ops[1]]);
        auto gr = std::span<double>(grads_[ops[2]]);
        for (std::size_t t = 0; t < k; ++t) {
            const double gt = g[t];
            for (std::size_t i = 0; i < n1; ++i) {
                const double* row = b.data() + (t * n1 + i) * n2;
                double* grow = gb.data() + (t * n1 + i) * n2;
                double inner = 0.0;
                for (std::size_t j = 0; j < n2; ++j) {
                    inner += row[j] * r[j];
                    grow[j] += gt * l[i] * r[j];
                    gr[j] += gt * l[i] * row[j];
                }
                gl[i] += gt * inner;
            }
        }
        break;
    }
    case Op::Sigmoid: {
        auto gx = grad_buffer(ops[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        break;
    }
    case Op::Tanh: {
        auto gx = grad_buffer(ops[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
    }
    case Op::LeakyRelu: {
        const auto x = value(Var{this, ops[0]});
        auto gx = grad_buffer(ops[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (x[i] > 0.0 ? 1.0 : kLeakySlope);
        break;
    }
    case Op::Concat: {
        std::size_t offset = 0;
        for (auto o : ops) {
            auto dst = grad_buffer(o);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[offset + i];
            offset += dst.size();
        }
        break;
    }
    case Op::SoftmaxCrossEntropy: {
        auto gz = grad_buffer(ops[0]);
        for (std::size_t i = 0; i < gz.size(); ++i)
            gz[i] += g[0] * (n.cache[i] - (i == n.target ? 1.0 : 0.0));
        break;
    }
    case Op::SumSquares: {
        const auto x = value(Var{this, ops[0]});
        auto gx = grad_buffer(ops[0]);
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += 2.0 * g[0] * x[i];
        break;
    }
    case Op::Scale: {
        auto gx = grad_buffer(ops[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += n.factor * g[i];
        break;
    }
    }
}

}  // namespace treetensor
