#include "treetensor/training/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace treetensor::training {

void TrainConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
    if (!(l2_weight >= 0.0)) throw std::invalid_argument("l2 weight must be non-negative");
    if (max_epochs == 0) throw std::invalid_argument("max_epochs must be at least 1");
    if (threads == 0) throw std::invalid_argument("threads must be at least 1");
    if (!(adadelta.rho > 0.0 && adadelta.rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
    if (!(adadelta.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

bool TrainConfig::operator==(const TrainConfig& o) const {
    return batch_size == o.batch_size && l2_weight == o.l2_weight && l2_biases == o.l2_biases &&
           max_epochs == o.max_epochs && patience == o.patience && seed == o.seed && threads == o.threads &&
           adadelta.rho == o.adadelta.rho && adadelta.epsilon == o.adadelta.epsilon && record_time == o.record_time;
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Metrics evaluate(const Model& model, std::span<const Example> examples, std::size_t threads) {
    std::vector<double> nll(examples.size());
    std::vector<char> hit(examples.size());
    parallel_for(examples.size(), threads, [&](std::size_t i) {
        Tape tape;
        const Var logits = model.logits(tape, examples[i]);
        nll[i] = tape.value(tape.softmax_cross_entropy(logits, examples[i].label))[0];
        hit[i] = argmax(tape.value(logits)) == examples[i].label;
    });
    Metrics m;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        m.loss += nll[i];
        m.accuracy += hit[i];
    }
    if (!examples.empty()) {
        m.loss /= static_cast<double>(examples.size());
        m.accuracy /= static_cast<double>(examples.size());
    }
    return m;
}

std::string EpochRecord::to_json() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["split"] = split;
    j["loss"] = metrics.loss;
    j["accuracy"] = metrics.accuracy;
    j["wall_time_s"] = wall_time_s ? nlohmann::ordered_json(*wall_time_s) : nlohmann::ordered_json(nullptr);
    j["param_count_table"] = param_count_table;
    j["param_count_all"] = param_count_all;
    return j.dump();
}

Trainer::Trainer(const ModelConfig& model, const TrainConfig& config)
    : model_config_(model),
      config_(config),
      model_(std::make_unique<Model>(model)),
      optimizer_(model_->parameters(), config.adadelta),
      rng_(data::mix(config.seed, 0x5eed)) {
    config_.validate();
}

void Trainer::initialize() { training::initialize(model_->parameters(), config_.seed); }

void Trainer::set_schedule(std::size_t max_epochs, std::size_t patience, std::size_t threads) {
    TrainConfig c = config_;
    c.max_epochs = max_epochs;
    c.patience = patience;
    c.threads = threads;
    c.validate();
    config_ = c;
}

bool Trainer::finished() const {
    return progress_.epochs_done >= config_.max_epochs ||
           (progress_.epochs_done > 0 && progress_.stale_epochs >= config_.patience && config_.patience > 0);
}

void Trainer::train_batch(std::span<const Example> train, std::span<const std::size_t> order, double& nll_sum,
                          std::size_t& correct) {
    const double scale = 1.0 / static_cast<double>(order.size());
    std::vector<std::unique_ptr<Tape>> tapes(order.size());
    std::vector<double> nll(order.size());
    std::vector<char> hit(order.size());
    auto forward_backward = [&](std::size_t i) {
        auto tape = std::make_unique<Tape>();
        const Example& ex = train[order[i]];
        const Var logits = model_->logits(*tape, ex);
        const Var loss = tape->softmax_cross_entropy(logits, ex.label);
        nll[i] = tape->value(loss)[0];
        if (!std::isfinite(nll[i])) throw NumericError("non-finite loss on training example " + std::to_string(order[i]));
        hit[i] = argmax(tape->value(logits)) == ex.label;
        tape->compute_gradients(tape->scale(loss, scale));
        return tape;
    };

    ParameterStore& store = model_->parameters();
    store.zero_grad();
    if (config_.threads <= 1) {
        for (std::size_t i = 0; i < order.size(); ++i) forward_backward(i)->accumulate_parameter_gradients();
    } else {
        parallel_for(order.size(), config_.threads, [&](std::size_t i) { tapes[i] = forward_backward(i); });
        for (auto& t : tapes) t->accumulate_parameter_gradients();
    }
    if (config_.l2_weight > 0.0) {
        Tape t;
        t.backward(l2_penalty(t, store, config_.l2_weight, config_.l2_biases));
    }
    optimizer_.step(store);
    for (std::size_t i = 0; i < order.size(); ++i) {
        nll_sum += nll[i];
        correct += hit[i];
    }
}

std::vector<EpochRecord> Trainer::run_epoch(std::span<const Example> train, std::span<const Example> val) {
    if (train.empty()) throw std::invalid_argument("training set is empty");
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[rng_.below(static_cast<std::uint32_t>(i + 1))]);

    double nll_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < order.size(); b += config_.batch_size) {
        const std::size_t n = std::min(config_.batch_size, order.size() - b);
        train_batch(train, std::span<const std::size_t>(order).subspan(b, n), nll_sum, correct);
    }
    const auto train_done = std::chrono::steady_clock::now();
    const Metrics val_metrics = evaluate(*model_, val, config_.threads);
    const auto val_done = std::chrono::steady_clock::now();

    const std::size_t epoch = ++progress_.epochs_done;
    const AggregatorKind kind = model_config_.encoder().gate_kind();
    auto record = [&](const char* split, Metrics m, double seconds) {
        EpochRecord r;
        r.epoch = epoch;
        r.split = split;
        r.metrics = m;
        if (config_.record_time) r.wall_time_s = seconds;
        r.param_count_table = param_count(kind, CountConvention::PaperTable);
        r.param_count_all = param_count(kind, CountConvention::AllScalars);
        return r;
    };
    const double n = static_cast<double>(train.size());
    std::vector<EpochRecord> out{
        record("train", {nll_sum / n, static_cast<double>(correct) / n},
               std::chrono::duration<double>(train_done - start).count()),
        record("val", val_metrics, std::chrono::duration<double>(val_done - train_done).count())};
    for (const auto& r : out) history_.push_back(r.to_json());

    if (!val.empty() && val_metrics.accuracy > progress_.best_accuracy) {
        progress_.best_accuracy = val_metrics.accuracy;
        progress_.best_epoch = epoch;
        progress_.stale_epochs = 0;
        best_values_.clear();
        for (const auto& p : model_->parameters()) best_values_.push_back(p->value);
    } else if (!val.empty()) {
        ++progress_.stale_epochs;
    }
    return out;
}

void Trainer::restore_best() {
    if (best_values_.empty()) return;
    ParameterStore& store = model_->parameters();
    for (std::size_t i = 0; i < store.size(); ++i) store[i].value = best_values_[i];
}

void Trainer::write_files(const RunFiles& files, bool improved) const {
    if (!files.metrics.empty()) {
        if (files.metrics.has_parent_path()) std::filesystem::create_directories(files.metrics.parent_path());
        std::ofstream out(files.metrics, std::ios::binary | std::ios::trunc);
        for (const auto& line : history_) out << line << '\n';
        if (!out) throw std::runtime_error("cannot write " + files.metrics.string());
    }
    if (!files.last_checkpoint.empty()) save(files.last_checkpoint);
    if (improved && !files.best_checkpoint.empty()) save(files.best_checkpoint);
}

void Trainer::run(std::span<const Example> train, std::span<const Example> val, const RunFiles& files,
                  const std::function<void(const EpochRecord&)>& on_record) {
    while (!finished()) {
        const auto records = run_epoch(train, val);
        if (on_record)
            for (const auto& r : records) on_record(r);
        write_files(files, progress_.best_epoch == progress_.epochs_done);
    }
    restore_best();
}

}  // namespace treetensor::training
