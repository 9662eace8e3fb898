#include "treetensor/tensor/multi_affine.hpp"

#include <algorithm>

namespace treetensor {

Shape MultiAffineMap::tensor_shape(std::size_t context_size, std::size_t hidden_dim,
                                   std::size_t label_dim) {
    Shape s;
    s.reserve(context_size + 2);
    if (label_dim > 0) s.push_back(label_dim + 1);
    for (std::size_t j = 0; j < context_size; ++j) s.push_back(hidden_dim + 1);
    s.push_back(hidden_dim);
    return s;
}

MultiAffineMap::MultiAffineMap(std::size_t context_size, std::size_t hidden_dim,
                               std::size_t label_dim, DenseTensor tensor)
    : context_size_(context_size),
      hidden_dim_(hidden_dim),
      label_dim_(label_dim),
      tensor_(std::move(tensor)) {
    if (hidden_dim == 0) throw ShapeError("multi-affine map needs a positive hidden size");
    if (context_size + (label_dim > 0 ? 1 : 0) == 0)
        throw ShapeError("multi-affine map needs at least one input");
    const Shape expected = tensor_shape(context_size, hidden_dim, label_dim);
    if (tensor_.shape() != expected)
        throw ShapeError("augmented tensor shape " + shape_to_string(tensor_.shape()) +
                         " does not match expected " + shape_to_string(expected));
}

MultiAffineMap MultiAffineMap::zeros(std::size_t context_size, std::size_t hidden_dim,
                                     std::size_t label_dim) {
    return MultiAffineMap(context_size, hidden_dim, label_dim,
                          DenseTensor(tensor_shape(context_size, hidden_dim, label_dim)));
}

Vector apply_multi_affine(const MultiAffineMap& map, const std::optional<Vector>& label,
                          std::span<const Vector> context) {
    if (label.has_value() != map.has_label())
        throw ShapeError(map.has_label() ? "multi-affine map expects a label input"
                                         : "multi-affine map takes no label input");
    if (context.size() != map.context_size())
        throw ShapeError("multi-affine map expects " + std::to_string(map.context_size()) +
                         " context vectors, got " + std::to_string(context.size()));
    std::vector<std::span<const double>> inputs;
    inputs.reserve(map.input_count());
    if (label) {
        if (label->size() != map.label_dim()) throw ShapeError("label length mismatch");
        inputs.emplace_back(*label);
    }
    for (const auto& h : context) {
        if (h.size() != map.hidden_dim()) throw ShapeError("context vector length mismatch");
        inputs.emplace_back(h);
    }
    Vector out(map.hidden_dim(), 0.0);
    kernels::multi_affine_forward(map.tensor().data(), map.tensor().shape(), inputs, out);
    return out;
}

namespace kernels {

namespace {

// out[r] = sum_i vbar(i) * t[i * rest + r], vbar = [v; 1].
void contract_leading(std::span<const double> t, std::size_t lead, std::span<const double> v,
                      std::span<double> out) {
    const std::size_t rest = out.size();
    const double* bias = t.data() + (lead - 1) * rest;
    std::copy(bias, bias + rest, out.begin());
    for (std::size_t i = 0; i + 1 < lead; ++i) {
        const double w = v[i];
        const double* row = t.data() + i * rest;
        for (std::size_t r = 0; r < rest; ++r) out[r] += w * row[r];
    }
}

// out[o] = sum_j t[o * width + j] * w(j), where w = [v; 1] when augmented.
void contract_trailing(std::span<const double> t, std::size_t width, std::span<const double> v,
                       bool augmented, std::span<double> out) {
    const std::size_t n = out.size();
    for (std::size_t o = 0; o < n; ++o) {
        const double* row = t.data() + o * width;
        double acc = augmented ? row[width - 1] : 0.0;
        const std::size_t limit = augmented ? width - 1 : width;
        for (std::size_t j = 0; j < limit; ++j) acc += row[j] * v[j];
        out[o] = acc;
    }
}

void check_inputs(std::span<const double> tensor, std::span<const std::size_t> extents,
                  std::span<const std::span<const double>> inputs) {
    if (inputs.empty()) throw ShapeError("multi-affine contraction needs at least one input");
    if (extents.size() != inputs.size() + 1)
        throw ShapeError("multi-affine contraction: " + std::to_string(inputs.size()) +
                         " inputs for a tensor of order " + std::to_string(extents.size()));
    std::size_t volume = 1;
    for (std::size_t s = 0; s < extents.size(); ++s) {
        volume *= extents[s];
        if (s < inputs.size() && inputs[s].size() + 1 != extents[s])
            throw ShapeError("multi-affine contraction: input " + std::to_string(s) + " has length " +
                             std::to_string(inputs[s].size()) + ", mode extent is " +
                             std::to_string(extents[s]));
    }
    if (volume != tensor.size()) throw ShapeError("multi-affine contraction: tensor size mismatch");
}

}  // namespace

void multi_affine_forward(std::span<const double> tensor, std::span<const std::size_t> extents,
                          std::span<const std::span<const double>> inputs, std::span<double> out) {
    check_inputs(tensor, extents, inputs);
    if (out.size() != extents.back()) throw ShapeError("multi-affine contraction: output length");

    std::vector<double> current, next;
    std::span<const double> src = tensor;
    std::size_t volume = tensor.size();
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        volume /= extents[s];
        next.assign(volume, 0.0);
        contract_leading(src, extents[s], inputs[s], next);
        current.swap(next);
        src = current;
    }
    std::copy(current.begin(), current.end(), out.begin());
}

void multi_affine_backward(std::span<const double> tensor, std::span<const std::size_t> extents,
                           std::span<const std::span<const double>> inputs,
                           std::span<const double> grad_out,
                           std::span<const std::span<double>> input_grads,
                           std::span<double> tensor_grad) {
    check_inputs(tensor, extents, inputs);
    const std::size_t p = inputs.size();
    const std::size_t c = extents.back();
    if (grad_out.size() != c) throw ShapeError("multi-affine adjoint: gradient length");

    // prefixes[s] = tensor contracted with inputs 0..s-1, shape [a_s, ..., a_{p-1}, c].
    // prefixes[0] is the tensor itself and is not copied.
    std::vector<std::vector<double>> prefixes(p);
    if (!input_grads.empty()) {
        auto prefix = [&](std::size_t s) -> std::span<const double> {
            return s == 0 ? tensor : std::span<const double>(prefixes[s]);
        };
        for (std::size_t s = 1; s < p; ++s) {
            prefixes[s].assign(prefix(s - 1).size() / extents[s - 1], 0.0);
            contract_leading(prefix(s - 1), extents[s - 1], inputs[s - 1], prefixes[s]);
        }
        std::vector<double> buf, tmp;
        for (std::size_t s = 0; s < p; ++s) {
            if (s >= input_grads.size() || input_grads[s].empty()) continue;
            const auto pre = prefix(s);
            buf.assign(pre.size() / c, 0.0);
            contract_trailing(pre, c, grad_out, false, buf);
            for (std::size_t t = p; t-- > s + 1;) {
                tmp.assign(buf.size() / extents[t], 0.0);
                contract_trailing(buf, extents[t], inputs[t], true, tmp);
                buf.swap(tmp);
            }
            auto g = input_grads[s];
            for (std::size_t j = 0; j + 1 < extents[s]; ++j) g[j] += buf[j];
        }
    }

    if (!tensor_grad.empty()) {
        if (tensor_grad.size() != tensor.size()) throw ShapeError("multi-affine adjoint: tensor grad size");
        // outer = xbar_1 (x) ... (x) xbar_{p-1} (x) grad_out, then scatter over mode 0.
        std::vector<double> outer(grad_out.begin(), grad_out.end());
        std::vector<double> tmp;
        for (std::size_t s = p; s-- > 1;) {
            const std::size_t a = extents[s];
            tmp.resize(a * outer.size());
            for (std::size_t i = 0; i < a; ++i) {
                const double w = (i + 1 < a) ? inputs[s][i] : 1.0;
                double* dst = tmp.data() + i * outer.size();
                for (std::size_t r = 0; r < outer.size(); ++r) dst[r] = w * outer[r];
            }
            outer.swap(tmp);
        }
        const std::size_t a0 = extents[0];
        for (std::size_t i = 0; i < a0; ++i) {
            const double w = (i + 1 < a0) ? inputs[0][i] : 1.0;
            double* dst = tensor_grad.data() + i * outer.size();
            for (std::size_t r = 0; r < outer.size(); ++r) dst[r] += w * outer[r];
        }
    }
}

}  // namespace kernels

}  // namespace treetensor
