#include "treetensor/treelstm/cell.hpp"

#include <stdexcept>
#include <string>

namespace treetensor {

AggregatorKind EncoderConfig::gate_kind() const {
    return AggregatorKind{aggregator, hidden_dim, outdegree, 0, rank};
}

void EncoderConfig::validate() const {
    gate_kind().validate();
    if (input_dim == 0) throw std::invalid_argument("input dimension must be at least 1");
    if (operator_count == 0) throw std::invalid_argument("at least one operator is required");
}

CellBank::CellBank(ParameterStore& store, const EncoderConfig& config) : config_(config) {
    config_.validate();
    const std::size_t c = config_.hidden_dim, m = config_.input_dim;
    const AggregatorKind kind = config_.gate_kind();
    for (std::size_t op = 0; op < config_.operator_count; ++op) {
        const std::string prefix = "enc.op" + std::to_string(op);
        OperatorCell cell;
        cell.input = make_gate(store, kind, prefix + ".i");
        cell.output = make_gate(store, kind, prefix + ".o");
        cell.update = make_gate(store, kind, prefix + ".u");
        for (std::size_t j = 1; j <= config_.outdegree; ++j) {
            cell.forget_weights.push_back(&store.add(prefix + ".f.U" + std::to_string(j), DenseTensor({c, c}), c));
            cell.forget_biases.push_back(&store.add(prefix + ".f.b" + std::to_string(j), DenseTensor({c})));
        }
        cells_.push_back(std::move(cell));
    }
    leaf_.w_input = &store.add("enc.leaf.Wi", DenseTensor({c, m}), m);
    leaf_.w_output = &store.add("enc.leaf.Wo", DenseTensor({c, m}), m);
    leaf_.w_update = &store.add("enc.leaf.Wu", DenseTensor({c, m}), m);
    leaf_.b_input = &store.add("enc.leaf.bi", DenseTensor({c}));
    leaf_.b_output = &store.add("enc.leaf.bo", DenseTensor({c}));
    leaf_.b_update = &store.add("enc.leaf.bu", DenseTensor({c}));
}

const OperatorCell& CellBank::cell(std::size_t op) const {
    if (op >= cells_.size()) throw TreeError("unknown operator id " + std::to_string(op));
    return cells_[op];
}

StateVars CellBank::leaf_forward(Tape& t, Var x) const {
    auto affine = [&](Parameter* w, Parameter* b) { return t.add(t.matvec(t.param(*w), x), t.param(*b)); };
    const Var i = t.sigmoid(affine(leaf_.w_input, leaf_.b_input));
    const Var o = t.sigmoid(affine(leaf_.w_output, leaf_.b_output));
    const Var pre_u = affine(leaf_.w_update, leaf_.b_update);
    const Var u = config_.all_sigmoid ? t.sigmoid(pre_u) : t.tanh(pre_u);
    const Var c = t.hadamard(i, u);
    return {t.hadamard(o, t.tanh(c)), c};
}

StateVars CellBank::cell_forward(Tape& t, std::size_t op, std::span<const StateVars> children, Var zero) const {
    const OperatorCell& cell = this->cell(op);
    if (children.size() > config_.outdegree)
        throw TreeError(std::to_string(children.size()) + " children exceed outdegree " +
                        std::to_string(config_.outdegree));

    std::vector<Var> context(config_.outdegree, zero);
    for (std::size_t j = 0; j < children.size(); ++j) context[j] = children[j].h;

    const Var i = t.sigmoid(aggregate(t, cell.input, std::nullopt, context));
    const Var o = t.sigmoid(aggregate(t, cell.output, std::nullopt, context));
    const Var pre_u = aggregate(t, cell.update, std::nullopt, context);
    const Var u = config_.all_sigmoid ? t.sigmoid(pre_u) : t.tanh(pre_u);

    std::vector<Var> memory{t.hadamard(i, u)};
    for (std::size_t j = 0; j < children.size(); ++j) {
        const Var f = t.sigmoid(
            t.add(t.matvec(t.param(*cell.forget_weights[j]), children[j].h), t.param(*cell.forget_biases[j])));
        memory.push_back(t.hadamard(f, children[j].c));
    }
    const Var c = memory.size() == 1 ? memory[0] : t.add(memory);
    return {t.hadamard(o, t.tanh(c)), c};
}

TreeEncoder::TreeEncoder(Tape& tape, const CellBank& bank)
    : tape_(tape), bank_(bank), zero_(tape.constant(Vector(bank.config().hidden_dim, 0.0))) {}

StateVars TreeEncoder::encode(const Tree& tree) {
    const EncoderConfig& cfg = bank_.config();
    tree.validate(cfg.outdegree, cfg.operator_count, cfg.input_dim);
    std::vector<StateVars> states(tree.size());
    std::vector<StateVars> children;
    for (std::size_t n = 0; n < tree.size(); ++n) {
        const TreeNode& node = tree.node(n);
        if (node.is_leaf()) {
            auto it = leaves_.find(node.payload);
            if (it == leaves_.end())
                it = leaves_.emplace(node.payload, bank_.leaf_forward(tape_, tape_.constant(node.payload))).first;
            states[n] = it->second;
            continue;
        }
        children.clear();
        for (auto c : node.children) children.push_back(states[c]);
        states[n] = bank_.cell_forward(tape_, static_cast<std::size_t>(node.op), children, zero_);
    }
    return states.back();
}

namespace {

LstmState read_state(const Tape& t, StateVars s) {
    const auto h = t.value(s.h);
    const auto c = t.value(s.c);
    return {Vector(h.begin(), h.end()), Vector(c.begin(), c.end())};
}

}  // namespace

LstmState cell_forward(const CellBank& bank, std::size_t op, std::span<const LstmState> children) {
    Tape t;
    std::vector<StateVars> vars;
    for (const auto& s : children) vars.push_back({t.constant(s.h), t.constant(s.c_mem)});
    const Var zero = t.constant(Vector(bank.config().hidden_dim, 0.0));
    return read_state(t, bank.cell_forward(t, op, vars, zero));
}

LstmState encode(const Tree& tree, const CellBank& bank) {
    Tape t;
    TreeEncoder enc(t, bank);
    return read_state(t, enc.encode(tree));
}

}  // namespace treetensor
