#include "treetensor/aggregators/aggregator.hpp"

#include <stdexcept>

namespace treetensor {

std::string_view to_string(AggregatorTag tag) {
    switch (tag) {
    case AggregatorTag::Sum: return "sum";
    case AggregatorTag::Full: return "full";
    case AggregatorTag::Hosvd: return "hosvd";
    }
    return "?";
}

AggregatorTag parse_aggregator(std::string_view text) {
    if (text == "sum") return AggregatorTag::Sum;
    if (text == "full") return AggregatorTag::Full;
    if (text == "hosvd") return AggregatorTag::Hosvd;
    throw std::invalid_argument("unknown aggregator '" + std::string(text) + "' (expected sum, full or hosvd)");
}

std::string_view to_string(CountConvention convention) {
    return convention == CountConvention::PaperTable ? "paper-table" : "all-scalars";
}

CountConvention parse_convention(std::string_view text) {
    if (text == "paper-table") return CountConvention::PaperTable;
    if (text == "all-scalars") return CountConvention::AllScalars;
    throw std::invalid_argument("unknown counting convention '" + std::string(text) + "'");
}

void AggregatorKind::validate() const {
    if (hidden_dim == 0) throw std::invalid_argument("hidden size c must be at least 1");
    if (context_size == 0) throw std::invalid_argument("outdegree L must be at least 1");
    if (tag == AggregatorTag::Hosvd && rank == 0)
        throw std::invalid_argument("hosvd aggregator requires a rank r >= 1");
}

SumParams SumParams::zeros(std::size_t context_size, std::size_t hidden_dim, std::size_t label_dim) {
    SumParams p;
    p.context_weights.assign(context_size, DenseTensor({hidden_dim, hidden_dim}));
    if (label_dim > 0) p.label_weight = DenseTensor({hidden_dim, label_dim});
    p.bias = DenseTensor({hidden_dim});
    return p;
}

namespace {

Vector sum_apply(const SumParams& p, const std::optional<Vector>& label, std::span<const Vector> context) {
    if (context.size() != p.context_weights.size())
        throw ShapeError("sum aggregator expects " + std::to_string(p.context_weights.size()) + " context vectors");
    if (label.has_value() != p.label_weight.has_value())
        throw ShapeError(p.label_weight ? "sum aggregator expects a label" : "sum aggregator takes no label");
    Vector out(p.bias.values());
    auto accumulate = [&out](const Vector& v) {
        if (v.size() != out.size()) throw ShapeError("sum aggregator: term length mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
    };
    if (label) accumulate(matvec(*p.label_weight, *label));
    for (std::size_t j = 0; j < context.size(); ++j) accumulate(matvec(p.context_weights[j], context[j]));
    return out;
}

std::uint64_t ipow(std::uint64_t base, std::size_t exp) {
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

Vector aggregate(const AggregatorParams& params, const std::optional<Vector>& label,
                 std::span<const Vector> context) {
    return std::visit(
        [&](const auto& p) -> Vector {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, SumParams>) return sum_apply(p, label, context);
            else if constexpr (std::is_same_v<T, FullParams>) return apply_multi_affine(p.map, label, context);
            else return tucker_apply(p.factors, label, context);
        },
        params);
}

FullParams sum_to_tensor(const SumParams& p) {
    const std::size_t L = p.context_weights.size();
    const std::size_t c = p.bias.size();
    const std::size_t m = p.label_weight ? p.label_weight->extent(1) : 0;
    MultiAffineMap map = MultiAffineMap::zeros(L, c, m);
    DenseTensor& t = map.tensor();

    // Index with every input on its homogeneous slot; the output index goes last.
    std::vector<std::size_t> idx;
    if (m > 0) idx.push_back(m);
    for (std::size_t j = 0; j < L; ++j) idx.push_back(c);
    idx.push_back(0);
    const std::size_t out_mode = idx.size() - 1;
    const std::size_t first_context = m > 0 ? 1 : 0;

    for (std::size_t k = 0; k < c; ++k) {
        idx[out_mode] = k;
        t.at(idx) = p.bias[k];
        if (m > 0) {
            for (std::size_t i = 0; i < m; ++i) {
                idx[0] = i;
                t.at(idx) = p.label_weight->at({k, i});
            }
            idx[0] = m;
        }
        for (std::size_t l = 0; l < L; ++l) {
            const std::size_t mode = first_context + l;
            for (std::size_t j = 0; j < c; ++j) {
                idx[mode] = j;
                t.at(idx) = p.context_weights[l].at({k, j});
            }
            idx[mode] = c;
        }
    }
    return FullParams{std::move(map)};
}

std::uint64_t param_count(const AggregatorKind& kind, CountConvention convention) {
    kind.validate();
    const std::uint64_t c = kind.hidden_dim, m = kind.label_dim, r = kind.rank;
    const std::size_t L = kind.context_size;
    if (convention == CountConvention::PaperTable) {
        switch (kind.tag) {
        case AggregatorTag::Full: return c * ipow(c + 1, L);
        case AggregatorTag::Sum: return L * c * c;
        case AggregatorTag::Hosvd: return L * c * r + r * ipow(r + 1, L);
        }
    }
    switch (kind.tag) {
    case AggregatorTag::Full: return (m > 0 ? m + 1 : 1) * ipow(c + 1, L) * c;
    case AggregatorTag::Sum: return c * m + L * c * c + c;
    case AggregatorTag::Hosvd: return m * r + (L + 1) * c * r + r * ipow(r + 1, L + (m > 0 ? 1 : 0));
    }
    return 0;
}

GateParameters make_gate(ParameterStore& store, const AggregatorKind& kind, const std::string& prefix) {
    kind.validate();
    const std::size_t c = kind.hidden_dim, L = kind.context_size, m = kind.label_dim, r = kind.rank;
    switch (kind.tag) {
    case AggregatorTag::Sum: {
        SumGate g;
        for (std::size_t j = 0; j < L; ++j)
            g.context_weights.push_back(&store.add(prefix + ".U" + std::to_string(j + 1), DenseTensor({c, c}), c));
        if (m > 0) g.label_weight = &store.add(prefix + ".W", DenseTensor({c, m}), m);
        g.bias = &store.add(prefix + ".b", DenseTensor({c}));
        return g;
    }
    case AggregatorTag::Full: {
        const Shape s = MultiAffineMap::tensor_shape(L, c, m);
        return FullGate{&store.add(prefix + ".T", DenseTensor(s), shape_volume(s) / c)};
    }
    case AggregatorTag::Hosvd: {
        HosvdGate g;
        if (m > 0) g.label_mode = &store.add(prefix + ".W", DenseTensor({r, m}), m);
        for (std::size_t j = 0; j < L; ++j)
            g.context_modes.push_back(&store.add(prefix + ".U" + std::to_string(j + 1), DenseTensor({r, c}), c));
        const std::size_t inputs = L + (m > 0 ? 1 : 0);
        const Shape cs = TuckerFactors::core_shape(r, inputs);
        g.core = &store.add(prefix + ".G", DenseTensor(cs), shape_volume(cs) / r);
        g.output_mode = &store.add(prefix + ".Q", DenseTensor({c, r}), r);
        return g;
    }
    }
    throw std::logic_error("unhandled aggregator tag");
}

Var aggregate(Tape& tape, const GateParameters& gate, std::optional<Var> label, std::span<const Var> context) {
    return std::visit(
        [&](const auto& g) -> Var {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, SumGate>) {
                if (context.size() != g.context_weights.size())
                    throw ShapeError("sum gate expects " + std::to_string(g.context_weights.size()) + " context vectors");
                if (label.has_value() != (g.label_weight != nullptr))
                    throw ShapeError("sum gate label presence mismatch");
                std::vector<Var> terms;
                terms.reserve(context.size() + 2);
                if (label) terms.push_back(tape.matvec(tape.param(*g.label_weight), *label));
                for (std::size_t j = 0; j < context.size(); ++j)
                    terms.push_back(tape.matvec(tape.param(*g.context_weights[j]), context[j]));
                terms.push_back(tape.param(*g.bias));
                return tape.add(terms);
            } else if constexpr (std::is_same_v<T, FullGate>) {
                std::vector<Var> inputs;
                inputs.reserve(context.size() + 1);
                if (label) inputs.push_back(*label);
                inputs.insert(inputs.end(), context.begin(), context.end());
                return tape.multi_affine(tape.param(*g.tensor), inputs);
            } else {
                if (context.size() != g.context_modes.size())
                    throw ShapeError("hosvd gate expects " + std::to_string(g.context_modes.size()) + " context vectors");
                if (label.has_value() != (g.label_mode != nullptr))
                    throw ShapeError("hosvd gate label presence mismatch");
                std::vector<Var> reduced;
                reduced.reserve(context.size() + 1);
                if (label) reduced.push_back(tape.matvec(tape.param(*g.label_mode), *label));
                for (std::size_t j = 0; j < context.size(); ++j)
                    reduced.push_back(tape.matvec(tape.param(*g.context_modes[j]), context[j]));
                const Var mixed = tape.multi_affine(tape.param(*g.core), reduced);
                return tape.matvec(tape.param(*g.output_mode), mixed);
            }
        },
        gate);
}

AggregatorParams gate_values(const GateParameters& gate, const AggregatorKind& kind) {
    return std::visit(
        [&](const auto& g) -> AggregatorParams {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, SumGate>) {
                SumParams p;
                for (auto* u : g.context_weights) p.context_weights.push_back(u->value);
                if (g.label_weight) p.label_weight = g.label_weight->value;
                p.bias = g.bias->value;
                return p;
            } else if constexpr (std::is_same_v<T, FullGate>) {
                return FullParams{MultiAffineMap(kind.context_size, kind.hidden_dim, kind.label_dim, g.tensor->value)};
            } else {
                TuckerFactors f;
                f.rank = kind.rank;
                f.context_size = kind.context_size;
                f.hidden_dim = kind.hidden_dim;
                f.label_dim = kind.label_dim;
                if (g.label_mode) f.label_mode = g.label_mode->value;
                for (auto* u : g.context_modes) f.context_modes.push_back(u->value);
                f.core = g.core->value;
                f.output_mode = g.output_mode->value;
                f.validate();
                return HosvdParams{std::move(f)};
            }
        },
        gate);
}

namespace {

void assign_value(Parameter* p, const DenseTensor& v) {
    if (p->value.shape() != v.shape())
        throw ShapeError("cannot assign " + shape_to_string(v.shape()) + " to parameter " + p->name + " of shape " +
                         shape_to_string(p->value.shape()));
    p->value = v;
}

}  // namespace

void assign_gate(const GateParameters& gate, const AggregatorParams& values) {
    if (gate.index() != values.index()) throw std::invalid_argument("assign_gate: aggregator kinds differ");
    if (const auto* g = std::get_if<SumGate>(&gate)) {
        const auto& p = std::get<SumParams>(values);
        if (p.context_weights.size() != g->context_weights.size()) throw ShapeError("assign_gate: outdegree differs");
        for (std::size_t j = 0; j < p.context_weights.size(); ++j) assign_value(g->context_weights[j], p.context_weights[j]);
        if ((g->label_weight != nullptr) != p.label_weight.has_value()) throw ShapeError("assign_gate: label presence differs");
        if (g->label_weight) assign_value(g->label_weight, *p.label_weight);
        assign_value(g->bias, p.bias);
    } else if (const auto* g = std::get_if<FullGate>(&gate)) {
        assign_value(g->tensor, std::get<FullParams>(values).map.tensor());
    } else {
        const auto& g2 = std::get<HosvdGate>(gate);
        const auto& f = std::get<HosvdParams>(values).factors;
        if (f.context_modes.size() != g2.context_modes.size()) throw ShapeError("assign_gate: outdegree differs");
        if ((g2.label_mode != nullptr) != f.label_mode.has_value()) throw ShapeError("assign_gate: label presence differs");
        if (g2.label_mode) assign_value(g2.label_mode, *f.label_mode);
        for (std::size_t j = 0; j < f.context_modes.size(); ++j) assign_value(g2.context_modes[j], f.context_modes[j]);
        assign_value(g2.core, f.core);
        assign_value(g2.output_mode, f.output_mode);
    }
}

}  // namespace treetensor
