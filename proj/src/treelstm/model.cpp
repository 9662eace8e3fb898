#include "treetensor/treelstm/model.hpp"

#include <stdexcept>
#include <string>

namespace treetensor {

std::string_view to_string(Task task) { return task == Task::ListOps ? "listops" : "lrt"; }

Task parse_task(std::string_view text) {
    if (text == "listops") return Task::ListOps;
    if (text == "lrt") return Task::Lrt;
    throw std::invalid_argument("unknown task '" + std::string(text) + "' (expected listops or lrt)");
}

TaskShape task_shape(Task task) {
    if (task == Task::ListOps) return {5, 10, 4, 10, 1};
    return {2, 6, 3, 7, 2};
}

EncoderConfig ModelConfig::encoder() const {
    const TaskShape s = task_shape(task);
    return EncoderConfig{aggregator, hidden_dim, rank, s.outdegree, s.input_dim, s.operator_count, all_sigmoid};
}

void ModelConfig::validate() const {
    encoder().validate();
    if (task == Task::Lrt && comparison_width == 0) throw std::invalid_argument("comparison width must be at least 1");
    if (task == Task::ListOps && head_hidden == 0) throw std::invalid_argument("head width must be at least 1");
}

LrtHead::LrtHead(ParameterStore& store, std::size_t c, std::size_t k, std::size_t classes)
    : bilinear(&store.add("head.B", DenseTensor({k, c, c}), c * c)),
      linear(&store.add("head.V", DenseTensor({k, 2 * c}), 2 * c)),
      bias(&store.add("head.d", DenseTensor({k}))),
      out_weight(&store.add("head.P", DenseTensor({classes, k}), k)),
      out_bias(&store.add("head.e", DenseTensor({classes}))) {}

Var LrtHead::logits(Tape& t, Var left, Var right) const {
    const std::vector<Var> both{left, right};
    const std::vector<Var> terms{t.bilinear(t.param(*bilinear), left, right),
                                 t.matvec(t.param(*linear), t.concat(both)), t.param(*bias)};
    const Var z = t.leaky_relu(t.add(terms));
    return t.add(t.matvec(t.param(*out_weight), z), t.param(*out_bias));
}

ListOpsHead::ListOpsHead(ParameterStore& store, std::size_t c, std::size_t width, std::size_t classes)
    : w1(&store.add("head.W1", DenseTensor({width, c}), c)),
      b1(&store.add("head.b1", DenseTensor({width}))),
      w2(&store.add("head.W2", DenseTensor({width, width}), width)),
      b2(&store.add("head.b2", DenseTensor({width}))),
      w3(&store.add("head.W3", DenseTensor({classes, width}), width)),
      b3(&store.add("head.b3", DenseTensor({classes}))) {}

Var ListOpsHead::logits(Tape& t, Var h) const {
    const Var a1 = t.leaky_relu(t.add(t.matvec(t.param(*w1), h), t.param(*b1)));
    const Var a2 = t.leaky_relu(t.add(t.matvec(t.param(*w2), a1), t.param(*b2)));
    return t.add(t.matvec(t.param(*w3), a2), t.param(*b3));
}

namespace {

std::variant<ListOpsHead, LrtHead> make_head(ParameterStore& store, const ModelConfig& cfg) {
    const std::size_t classes = task_shape(cfg.task).class_count;
    if (cfg.task == Task::ListOps) return ListOpsHead(store, cfg.hidden_dim, cfg.head_hidden, classes);
    return LrtHead(store, cfg.hidden_dim, cfg.comparison_width, classes);
}

const ModelConfig& checked(const ModelConfig& cfg) {
    cfg.validate();
    return cfg;
}

}  // namespace

Model::Model(const ModelConfig& config)
    : config_(checked(config)), bank_(store_, config_.encoder()), head_(make_head(store_, config_)) {}

Var Model::logits(Tape& tape, const Example& example) const {
    const TaskShape s = task_shape(config_.task);
    if (example.inputs.size() != s.trees_per_example)
        throw TreeError(std::string(to_string(config_.task)) + " examples need " +
                        std::to_string(s.trees_per_example) + " tree(s), got " +
                        std::to_string(example.inputs.size()));
    TreeEncoder enc(tape, bank_);
    if (const auto* head = std::get_if<ListOpsHead>(&head_)) return head->logits(tape, enc.encode(example.inputs[0]).h);
    const Var left = enc.encode(example.inputs[0]).h;
    const Var right = enc.encode(example.inputs[1]).h;
    return std::get<LrtHead>(head_).logits(tape, left, right);
}

Var Model::loss(Tape& tape, const Example& example) const {
    if (example.label >= task_shape(config_.task).class_count)
        throw std::out_of_range("label " + std::to_string(example.label) + " out of range");
    return tape.softmax_cross_entropy(logits(tape, example), example.label);
}

Vector Model::predict(const Example& example) const {
    Tape tape;
    const auto v = tape.value(logits(tape, example));
    return Vector(v.begin(), v.end());
}

}  // namespace treetensor
