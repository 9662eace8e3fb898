#include "treetensor/training/trainer.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace treetensor::training {

namespace {

constexpr std::array<char, 8> kMagic{'T', 'T', 'C', 'K', 'P', 'T', '\r', '\n'};
constexpr std::uint32_t kVersion = 1;

using json = nlohmann::ordered_json;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_tensor(std::string& out, const DenseTensor& t) {
    for (double d : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(d));
}

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::string take(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void fill(DenseTensor& t) {
        for (double& d : t.data()) d = std::bit_cast<double>(u64());
    }
    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
    }
    std::string bytes_;
    std::size_t pos_ = 0;
};

json model_json(const ModelConfig& m) {
    return json{{"task", to_string(m.task)},           {"aggregator", to_string(m.aggregator)},
                {"hidden_dim", m.hidden_dim},          {"rank", m.rank},
                {"comparison_width", m.comparison_width}, {"head_hidden", m.head_hidden},
                {"all_sigmoid", m.all_sigmoid}};
}

ModelConfig model_from(const json& j) {
    ModelConfig m;
    m.task = parse_task(j.at("task").get<std::string>());
    m.aggregator = parse_aggregator(j.at("aggregator").get<std::string>());
    m.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    m.rank = j.at("rank").get<std::size_t>();
    m.comparison_width = j.at("comparison_width").get<std::size_t>();
    m.head_hidden = j.at("head_hidden").get<std::size_t>();
    m.all_sigmoid = j.at("all_sigmoid").get<bool>();
    return m;
}

json train_json(const TrainConfig& c) {
    return json{{"batch_size", c.batch_size}, {"l2_weight", c.l2_weight},       {"l2_biases", c.l2_biases},
                {"max_epochs", c.max_epochs}, {"patience", c.patience},         {"seed", c.seed},
                {"threads", c.threads},       {"rho", c.adadelta.rho},          {"epsilon", c.adadelta.epsilon},
                {"record_time", c.record_time}};
}

TrainConfig train_from(const json& j) {
    TrainConfig c;
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.l2_weight = j.at("l2_weight").get<double>();
    c.l2_biases = j.at("l2_biases").get<bool>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<std::size_t>();
    c.adadelta.rho = j.at("rho").get<double>();
    c.adadelta.epsilon = j.at("epsilon").get<double>();
    c.record_time = j.at("record_time").get<bool>();
    return c;
}

}  // namespace

void Trainer::save(const std::filesystem::path& path) const {
    json params = json::array();
    for (const auto& p : model_->parameters()) params.push_back({{"name", p->name}, {"shape", p->value.shape()}});
    const json manifest{
        {"model", model_json(model_config_)},
        {"train", train_json(config_)},
        {"progress",
         {{"epochs_done", progress_.epochs_done},
          {"best_accuracy", progress_.best_accuracy},
          {"best_epoch", progress_.best_epoch},
          {"stale_epochs", progress_.stale_epochs}}},
        {"rng", {{"state", rng_.state()}, {"increment", rng_.increment()}}},
        {"parameters", params},
        {"has_best", !best_values_.empty()},
        {"history", history_},
    };
    const std::string text = manifest.dump();

    std::string out(kMagic.begin(), kMagic.end());
    put_u64(out, kVersion);
    put_u64(out, text.size());
    out += text;
    for (const auto& p : model_->parameters()) put_tensor(out, p->value);
    for (const auto& s : optimizer_.slots()) {
        put_tensor(out, s.mean_sq_grad);
        put_tensor(out, s.mean_sq_delta);
    }
    for (const auto& t : best_values_) put_tensor(out, t);

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Trainer Trainer::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
    Reader r(std::string(std::istreambuf_iterator<char>(f), {}));

    if (r.take(kMagic.size()) != std::string(kMagic.begin(), kMagic.end()))
        throw CheckpointError(path.string() + " is not a checkpoint");
    if (const auto v = r.u64(); v != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(v));
    json m;
    try {
        m = json::parse(r.take(r.u64()));
        Trainer t(model_from(m.at("model")), train_from(m.at("train")));
        const json& pr = m.at("progress");
        t.progress_.epochs_done = pr.at("epochs_done").get<std::size_t>();
        t.progress_.best_accuracy = pr.at("best_accuracy").get<double>();
        t.progress_.best_epoch = pr.at("best_epoch").get<std::size_t>();
        t.progress_.stale_epochs = pr.at("stale_epochs").get<std::size_t>();
        t.rng_ = data::Pcg32::restore(m.at("rng").at("state").get<std::uint64_t>(),
                                      m.at("rng").at("increment").get<std::uint64_t>());
        t.history_ = m.at("history").get<std::vector<std::string>>();

        ParameterStore& store = t.model_->parameters();
        const json& params = m.at("parameters");
        if (params.size() != store.size()) throw CheckpointError("parameter count differs from the model");
        for (std::size_t i = 0; i < store.size(); ++i) {
            if (params[i].at("name").get<std::string>() != store[i].name ||
                params[i].at("shape").get<Shape>() != store[i].value.shape())
                throw CheckpointError("parameter " + std::to_string(i) + " does not match the model layout");
        }
        for (auto& p : store) r.fill(p->value);
        for (auto& s : t.optimizer_.slots()) {
            r.fill(s.mean_sq_grad);
            r.fill(s.mean_sq_delta);
        }
        if (m.at("has_best").get<bool>()) {
            for (const auto& p : store) {
                DenseTensor v(p->value.shape());
                r.fill(v);
                t.best_values_.push_back(std::move(v));
            }
        }
        if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("invalid checkpoint configuration: ") + e.what());
    }
}

}  // namespace treetensor::training
