#pragma once

#include "treetensor/data/random.hpp"
#include "treetensor/training/optim.hpp"
#include "treetensor/treelstm/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace treetensor::training {

struct TrainConfig {
    std::size_t batch_size = 25;
    double l2_weight = 0.01;
    bool l2_biases = true;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    AdaDeltaSettings adadelta;
    /// Record wall-clock seconds in the metrics log. Off by default so that
    /// logs from identical runs are byte-identical.
    bool record_time = false;

    void validate() const;
    bool operator==(const TrainConfig& o) const;
};

struct Metrics {
    double loss = 0.0;  // mean negative log-likelihood
    double accuracy = 0.0;
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Forward passes only; results do not depend on `threads`.
Metrics evaluate(const Model& model, std::span<const Example> examples, std::size_t threads = 1);

struct EpochRecord {
    std::size_t epoch = 0;
    std::string split;
    Metrics metrics;
    std::optional<double> wall_time_s;
    std::uint64_t param_count_table = 0;
    std::uint64_t param_count_all = 0;

    [[nodiscard]] std::string to_json() const;
};

struct Progress {
    std::size_t epochs_done = 0;
    double best_accuracy = -1.0;
    std::size_t best_epoch = 0;
    std::size_t stale_epochs = 0;
};

/// Where a run keeps its outputs; empty paths are skipped.
struct RunFiles {
    std::filesystem::path metrics;          // JSON lines, rewritten after every epoch
    std::filesystem::path last_checkpoint;  // state after the latest epoch, for resuming
    std::filesystem::path best_checkpoint;  // state at the best validation epoch
};

/// Mean-NLL plus L2 training with AdaDelta, early stopping on validation accuracy.
class Trainer {
public:
    Trainer(const ModelConfig& model, const TrainConfig& config);

    /// Kaiming initialization from the configured seed.
    void initialize();

    [[nodiscard]] Model& model() { return *model_; }
    [[nodiscard]] const Model& model() const { return *model_; }
    [[nodiscard]] const TrainConfig& config() const { return config_; }
    /// Settings that do not affect the optimization state (epoch budget,
    /// patience, threads, timing) may change between resumed sessions.
    void set_schedule(std::size_t max_epochs, std::size_t patience, std::size_t threads);
    [[nodiscard]] const Progress& progress() const { return progress_; }
    [[nodiscard]] const std::vector<std::string>& history() const { return history_; }
    [[nodiscard]] const AdaDelta& optimizer() const { return optimizer_; }
    [[nodiscard]] const data::Pcg32& shuffle_rng() const { return rng_; }

    [[nodiscard]] bool finished() const;

    /// One pass over `train` followed by evaluation on `val`; returns the two records.
    std::vector<EpochRecord> run_epoch(std::span<const Example> train, std::span<const Example> val);

    /// Runs epochs until finished(), writing files after each one, then
    /// loads the best validation parameters into the model.
    void run(std::span<const Example> train, std::span<const Example> val, const RunFiles& files,
             const std::function<void(const EpochRecord&)>& on_record = {});

    /// Replaces the model parameters with the best-validation snapshot, if any.
    void restore_best();

    void save(const std::filesystem::path& path) const;
    /// Throws CheckpointError on a malformed or inconsistent file.
    static Trainer load(const std::filesystem::path& path);

private:
    void train_batch(std::span<const Example> train, std::span<const std::size_t> order, double& nll_sum,
                     std::size_t& correct);
    void write_files(const RunFiles& files, bool improved) const;

    ModelConfig model_config_;
    TrainConfig config_;
    std::unique_ptr<Model> model_;
    AdaDelta optimizer_;
    data::Pcg32 rng_;
    Progress progress_;
    std::vector<std::string> history_;
    std::vector<DenseTensor> best_values_;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs fn(i) for i in [0, n) on up to `threads` threads.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace treetensor::training
