#include "treetensor/cli/cli.hpp"

#include "treetensor/autodiff/gradcheck.hpp"
#include "treetensor/data/corpus.hpp"
#include "treetensor/training/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace treetensor::cli {

namespace {

/// Bad flags, inconsistent settings, or a checkpoint that does not fit the request.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelFlags {
    std::string task = "listops";
    std::string aggregator = "sum";
    std::size_t c = 10;
    std::size_t r = 0;
    std::size_t comparison_width = 32;
    bool all_sigmoid = false;

    [[nodiscard]] ModelConfig config() const {
        ModelConfig m;
        try {
            m.task = parse_task(task);
            m.aggregator = parse_aggregator(aggregator);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        m.hidden_dim = c;
        m.rank = r;
        m.comparison_width = comparison_width;
        m.all_sigmoid = all_sigmoid;
        if (m.aggregator == AggregatorTag::Hosvd && r == 0) throw UsageError("--r is required for the hosvd aggregator");
        if (m.aggregator != AggregatorTag::Hosvd && r != 0) throw UsageError("--r only applies to the hosvd aggregator");
        try {
            m.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return m;
    }
};

/// INI reader that files bare keys under the subcommand being run, so
/// `treetensor train --config run.ini` can hold `c=20` rather than `[train]` sections.
class SubcommandConfig : public CLI::ConfigINI {
public:
    explicit SubcommandConfig(const CLI::App& app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::vector<std::string> path;
        for (const CLI::App* a = &app_; !a->get_subcommands().empty();) {
            a = a->get_subcommands().front();
            path.push_back(a->get_name());
        }
        auto items = CLI::ConfigINI::from_config(input);
        for (auto& item : items)
            if (item.parents.empty()) item.parents = path;
        return items;
    }

private:
    const CLI::App& app_;
};

void add_env(CLI::Option* opt, const std::string& name) {
    std::string env = "TREETENSOR_";
    for (char ch : name) env += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    opt->envname(env);
}

template <class T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
    CLI::Option* o = app->add_option("--" + name, value, help)->capture_default_str();
    add_env(o, name);
    return o;
}

void add_model_flags(CLI::App* app, ModelFlags& f) {
    flag(app, "task", f.task, "listops or lrt")->check(CLI::IsMember({"listops", "lrt"}));
    flag(app, "aggregator", f.aggregator, "sum, full or hosvd")->check(CLI::IsMember({"sum", "full", "hosvd"}));
    flag(app, "c", f.c, "hidden size")->check(CLI::PositiveNumber);
    flag(app, "r", f.r, "HOSVD rank");
    flag(app, "k", f.comparison_width, "comparison units of the relation head")->check(CLI::PositiveNumber);
    app->add_flag("--all-sigmoid", f.all_sigmoid, "use sigmoid for the cell update as well");
}

std::string percent(double x) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * x;
    return s.str();
}

// ---------------------------------------------------------------------------
// gen

struct GenFlags {
    std::string out = "data";
    std::uint64_t seed = 1;
    std::size_t train = 0, val = 2000, test = 2000;
    std::size_t max_depth = 3, min_operands = 2, max_operands = 5;
    double expand_probability = 0.25;
    std::size_t max_operators = 4, test_max_operators = 12;
    double not_probability = 1.0 / 3.0;
};

void print_stats(std::ostream& out, Task task, const std::string& name, const std::vector<std::string>& lines) {
    std::map<std::size_t, std::size_t> depth;
    std::map<std::string, std::size_t> classes;
    for (const auto& l : lines) {
        const Example ex = data::parse_example(task, l);
        std::size_t d = 0;
        for (const auto& t : ex.inputs) d = std::max(d, task == Task::ListOps ? t.depth() : t.operator_count());
        ++depth[d];
        ++classes[l.substr(0, l.find('\t'))];
    }
    out << name << ": " << lines.size() << " samples\n  " << (task == Task::ListOps ? "depth" : "max operators")
        << ":";
    for (auto [d, n] : depth) out << ' ' << d << '=' << n;
    out << "\n  classes:";
    for (const auto& [c, n] : classes) out << ' ' << c << '=' << n;
    out << '\n';
}

int cmd_gen(Task task, const GenFlags& f, std::ostream& out) {
    data::SplitCounts counts{f.train ? f.train : (task == Task::ListOps ? 20000u : 10000u), f.val, f.test};
    data::Corpus corpus;
    try {
        if (task == Task::ListOps) {
            data::ListOpsConfig cfg{f.seed, 1, f.max_depth, f.min_operands, f.max_operands, f.expand_probability};
            cfg.validate();
            corpus = data::gen_listops_corpus(cfg, counts);
        } else {
            data::LrtConfig cfg{f.seed, 1, f.max_operators, f.not_probability, true};
            cfg.validate();
            corpus = data::gen_lrt_corpus(cfg, counts, f.test_max_operators);
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const std::filesystem::path dir(f.out);
    for (data::Split s : {data::Split::Train, data::Split::Val, data::Split::Test}) {
        const auto& lines = corpus.split(s);
        if (lines.empty()) continue;
        // Re-read every line through the parser and oracle before writing.
        try {
            print_stats(out, task, std::string(to_string(s)), lines);
        } catch (const std::exception& e) {
            out << "verification failed: " << e.what() << '\n';
            return kVerification;
        }
        data::write_lines(dir / (std::string(to_string(s)) + ".tsv"), lines);
    }
    out << "wrote " << dir.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// params

struct ParamsFlags {
    std::string aggregator = "full";
    std::size_t c = 10, r = 0, L = 2, m = 0;
    std::string convention = "both";
};

int cmd_params(const ParamsFlags& f, std::ostream& out) {
    AggregatorKind kind;
    try {
        kind = AggregatorKind{parse_aggregator(f.aggregator), f.c, f.L, f.m, f.r};
        kind.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    for (auto conv : {CountConvention::PaperTable, CountConvention::AllScalars})
        if (f.convention == "both" || f.convention == to_string(conv))
            out << to_string(conv) << ": " << param_count(kind, conv) << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckFlags {
    ModelFlags model;
    std::size_t L = 0;
    std::size_t depth = 3;
    std::uint64_t seed = 1;
    double eps = 1e-5;
    double tolerance = 1e-4;
};

std::uint32_t grow(Tree& t, data::Pcg32& rng, const EncoderConfig& cfg, std::size_t depth,
                   Vector (*leaf)(std::uint32_t), std::uint32_t tokens) {
    if (depth == 0) {
        const std::uint32_t tok = rng.below(tokens);
        return t.add_leaf(tok, leaf(tok));
    }
    const std::size_t n = 1 + rng.below(static_cast<std::uint32_t>(cfg.outdegree));
    std::vector<std::uint32_t> kids;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t d = j == 0 ? depth - 1 : rng.below(static_cast<std::uint32_t>(depth));
        kids.push_back(grow(t, rng, cfg, d, leaf, tokens));
    }
    return t.add_internal(static_cast<int>(rng.below(static_cast<std::uint32_t>(cfg.operator_count))), kids);
}

Vector one_hot4(std::uint32_t tok) {
    Vector v(4, 0.0);
    v[tok] = 1.0;
    return v;
}

int cmd_gradcheck(const GradcheckFlags& f, bool task_given, std::ostream& out) {
    ModelFlags mf = f.model;
    bool use_task = true;
    if (f.L != 0 && !task_given) {
        if (f.L == 5) mf.task = "listops";
        else if (f.L == 2) mf.task = "lrt";
        else use_task = false;
    }
    const ModelConfig cfg = mf.config();
    if (use_task && f.L != 0 && f.L != task_shape(cfg.task).outdegree)
        throw UsageError("--L " + std::to_string(f.L) + " does not match task " + std::string(to_string(cfg.task)));

    data::Pcg32 rng(data::mix(f.seed, 0x67726164));
    GradCheckReport report;
    std::string what;
    if (use_task) {
        Model model(cfg);
        training::initialize(model.parameters(), f.seed);
        // Kaiming leaves biases at zero; perturb them so their gradients are exercised at a generic point.
        for (auto& p : model.parameters())
            if (p->fan_in == 0)
                for (double& v : p->value.data()) v = 0.2 * (rng.uniform() - 0.5);
        const EncoderConfig ec = cfg.encoder();
        const bool listops = cfg.task == Task::ListOps;
        Example ex;
        for (std::size_t i = 0; i < task_shape(cfg.task).trees_per_example; ++i) {
            Tree t;
            if (listops) grow(t, rng, ec, f.depth, data::encode_listops_leaf, 10);
            else grow(t, rng, ec, f.depth, data::encode_lrt_leaf, 6);
            ex.inputs.push_back(std::move(t));
        }
        ex.label = rng.below(static_cast<std::uint32_t>(task_shape(cfg.task).class_count));
        report = finite_diff_check([&](Tape& t) { return model.loss(t, ex); }, model.parameters(), f.eps);
        what = std::string(to_string(cfg.task)) + " model";
    } else {
        EncoderConfig ec = cfg.encoder();
        ec.outdegree = f.L;
        ec.input_dim = 4;
        ec.operator_count = 2;
        ParameterStore store;
        CellBank bank(store, ec);
        training::initialize(store, f.seed);
        for (auto& p : store)
            if (p->fan_in == 0)
                for (double& v : p->value.data()) v = 0.2 * (rng.uniform() - 0.5);
        Tree tree;
        grow(tree, rng, ec, f.depth, one_hot4, 4);
        report = finite_diff_check(
            [&](Tape& t) {
                TreeEncoder enc(t, bank);
                return t.softmax_cross_entropy(enc.encode(tree).h, 0);
            },
            store, f.eps);
        what = "encoder (L=" + std::to_string(f.L) + ")";
    }
    const bool ok = report.max_relative_error <= f.tolerance;
    out << "gradcheck " << to_string(cfg.aggregator) << ' ' << what << " c=" << cfg.hidden_dim;
    if (cfg.aggregator == AggregatorTag::Hosvd) out << " r=" << cfg.rank;
    out << " depth=" << f.depth << ": " << report.entries_checked << " entries, max relative error "
        << std::scientific << std::setprecision(3) << report.max_relative_error << " (" << report.worst_parameter
        << '[' << report.worst_index << "]) " << (ok ? "PASS" : "FAIL") << '\n'
        << std::defaultfloat;
    return ok ? kOk : kVerification;
}

// ---------------------------------------------------------------------------
// train

struct TrainFlags {
    ModelFlags model;
    std::string data_dir;
    std::string train_file, val_file, test_file;
    std::string out;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;
    std::size_t epochs = 30, patience = 5, batch_size = 25, threads = 1;
    double l2 = 0.01;
    bool no_bias_l2 = false;
    bool resume = false;
    bool timing = false;
    bool quiet = false;
    std::string curve;
};

std::vector<Example> load_split(Task task, const std::string& path) {
    try {
        return data::load_examples(task, path);
    } catch (const std::exception& e) {
        throw std::runtime_error(e.what());
    }
}

void append_curve(const std::string& path, const ModelConfig& cfg, double mean, double sd) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream f(path, std::ios::app);
    if (!f) throw std::runtime_error("cannot write " + path);
    if (fresh) f << "model,c,r,param_count,val_accuracy_mean,val_accuracy_std\n";
    const AggregatorKind kind = cfg.encoder().gate_kind();
    f << to_string(cfg.aggregator) << ',' << cfg.hidden_dim << ',' << cfg.rank << ','
      << param_count(kind, CountConvention::PaperTable) << ',' << std::setprecision(17) << mean << ',' << sd << '\n';
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
    const ModelConfig cfg = f.model.config();
    auto pick = [&](const std::string& file, const char* name) {
        if (!file.empty()) return file;
        if (!f.data_dir.empty()) return (std::filesystem::path(f.data_dir) / (std::string(name) + ".tsv")).string();
        return std::string();
    };
    const std::string train_path = pick(f.train_file, "train"), val_path = pick(f.val_file, "val");
    const std::string test_path = f.test_file;
    if (train_path.empty() || val_path.empty()) throw UsageError("give --data DIR or both --train and --val");

    training::TrainConfig tc;
    tc.batch_size = f.batch_size;
    tc.l2_weight = f.l2;
    tc.l2_biases = !f.no_bias_l2;
    tc.max_epochs = f.epochs;
    tc.patience = f.patience;
    tc.threads = f.threads;
    tc.record_time = f.timing;
    try {
        tc.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const auto train = load_split(cfg.task, train_path);
    const auto val = load_split(cfg.task, val_path);
    std::vector<Example> test;
    if (!test_path.empty()) test = load_split(cfg.task, test_path);

    std::string run_name = std::string(to_string(cfg.task)) + "-" + std::string(to_string(cfg.aggregator)) + "-c" +
                           std::to_string(cfg.hidden_dim);
    if (cfg.aggregator == AggregatorTag::Hosvd) run_name += "-r" + std::to_string(cfg.rank);
    const std::filesystem::path root = f.out.empty() ? std::filesystem::path("runs") / run_name : std::filesystem::path(f.out);
    const std::vector<std::uint64_t> seeds = f.seeds.empty() ? std::vector<std::uint64_t>{f.seed} : f.seeds;

    out << "training " << run_name << " on " << train.size() << " examples, validating on " << val.size() << '\n';
    std::vector<double> accs;
    for (std::uint64_t seed : seeds) {
        const std::filesystem::path dir = root / ("seed-" + std::to_string(seed));
        const training::RunFiles files{dir / "metrics.jsonl", dir / "last.ckpt", dir / "best.ckpt"};
        tc.seed = seed;
        std::optional<training::Trainer> trainer;
        if (f.resume && std::filesystem::exists(files.last_checkpoint)) {
            trainer.emplace(training::Trainer::load(files.last_checkpoint));
            if (!(trainer->model().config() == cfg))
                throw UsageError(files.last_checkpoint.string() + " was trained with a different model configuration");
            trainer->set_schedule(tc.max_epochs, tc.patience, tc.threads);
            out << "seed " << seed << ": resuming after epoch " << trainer->progress().epochs_done << '\n';
        } else {
            trainer.emplace(cfg, tc);
            trainer->initialize();
        }
        trainer->run(train, val, files, [&](const training::EpochRecord& r) {
            if (!f.quiet)
                err << "seed " << seed << " epoch " << r.epoch << ' ' << r.split << " loss " << std::setprecision(5)
                    << r.metrics.loss << " accuracy " << percent(r.metrics.accuracy) << '\n';
        });
        const auto& p = trainer->progress();
        accs.push_back(p.best_accuracy);
        out << "seed " << seed << ": best val accuracy " << percent(p.best_accuracy) << " at epoch " << p.best_epoch
            << " (" << p.epochs_done << (p.epochs_done == 1 ? " epoch)" : " epochs)");
        if (!test.empty()) out << ", test accuracy " << percent(training::evaluate(trainer->model(), test, tc.threads).accuracy);
        out << '\n';
    }
    double mean = 0.0, var = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    for (double a : accs) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(accs.size()));
    out << "val accuracy " << percent(mean) << " (" << percent(sd) << ") over " << accs.size() << " run"
        << (accs.size() == 1 ? "" : "s") << '\n';
    if (!f.curve.empty()) append_curve(f.curve, cfg, mean, sd);
    return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalFlags {
    ModelFlags model;
    std::string checkpoint;
    std::vector<std::string> files;
    std::size_t threads = 1;
};

int cmd_eval(const EvalFlags& f, const CLI::App& app, std::ostream& out) {
    training::Trainer trainer = training::Trainer::load(f.checkpoint);
    const ModelConfig& cfg = trainer.model().config();
    auto mismatch = [&](const char* name, const std::string& have, const std::string& want) {
        if (app.count(std::string("--") + name) && have != want)
            throw UsageError(std::string("--") + name + " " + want + " does not match the checkpoint (" + have + ")");
    };
    mismatch("task", std::string(to_string(cfg.task)), f.model.task);
    mismatch("aggregator", std::string(to_string(cfg.aggregator)), f.model.aggregator);
    mismatch("c", std::to_string(cfg.hidden_dim), std::to_string(f.model.c));
    mismatch("r", std::to_string(cfg.rank), std::to_string(f.model.r));
    mismatch("k", std::to_string(cfg.comparison_width), std::to_string(f.model.comparison_width));

    for (const auto& path : f.files) {
        const auto examples = load_split(cfg.task, path);
        const auto m = training::evaluate(trainer.model(), examples, f.threads);
        out << path << ": accuracy " << percent(m.accuracy) << " loss " << std::setprecision(6) << m.loss << " ("
            << examples.size() << " examples)\n";
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Tensor-based recursive state transitions in Tree-LSTMs", "treetensor");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    app.fallthrough();
    app.set_config("--config", "", "INI file of flag=value lines; command-line flags take precedence");
    app.config_formatter(std::make_shared<SubcommandConfig>(app));

    auto* gen = app.add_subcommand("gen", "generate train/val/test corpora");
    gen->require_subcommand(1);
    GenFlags gf;
    auto common_gen = [&gf](CLI::App* c, bool listops) {
        flag(c, "out", gf.out, "output directory");
        flag(c, "seed", gf.seed, "run seed");
        flag(c, "train", gf.train, "training samples (default 20000 ListOps, 10000 LRT)");
        flag(c, "val", gf.val, "validation samples");
        flag(c, "test", gf.test, "test samples");
        if (listops) {
            flag(c, "max-depth", gf.max_depth, "maximum operator nesting")->check(CLI::PositiveNumber);
            flag(c, "min-operands", gf.min_operands, "fewest operands per operator");
            flag(c, "max-operands", gf.max_operands, "most operands per operator");
            flag(c, "expand-prob", gf.expand_probability, "chance an operand is a sub-expression");
        } else {
            flag(c, "max-operators", gf.max_operators, "connectives per formula in train and val");
            flag(c, "test-max-operators", gf.test_max_operators, "connectives per formula in test");
            flag(c, "not-prob", gf.not_probability, "chance a connective is a negation");
        }
    };
    auto* gen_listops = gen->add_subcommand("listops", "nested MIN/MAX/MED/SM expressions");
    common_gen(gen_listops, true);
    auto* gen_lrt = gen->add_subcommand("lrt", "pairs of propositional formulas and their relation");
    common_gen(gen_lrt, false);

    auto* params = app.add_subcommand("params", "parameter count of one aggregator gate");
    ParamsFlags pf;
    flag(params, "aggregator", pf.aggregator, "sum, full or hosvd")->check(CLI::IsMember({"sum", "full", "hosvd"}));
    flag(params, "c", pf.c, "hidden size");
    flag(params, "r", pf.r, "HOSVD rank");
    flag(params, "L", pf.L, "outdegree");
    flag(params, "m", pf.m, "label size (0 when operator-sliced)");
    flag(params, "convention", pf.convention, "paper-table, all-scalars or both")
        ->check(CLI::IsMember({"paper-table", "all-scalars", "both"}));

    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of a random model and tree");
    GradcheckFlags gcf;
    add_model_flags(grad, gcf.model);
    flag(grad, "L", gcf.L, "outdegree (2 or 5 select the task; others check the encoder alone)");
    flag(grad, "depth", gcf.depth, "tree depth")->check(CLI::PositiveNumber);
    flag(grad, "seed", gcf.seed, "seed");
    flag(grad, "eps", gcf.eps, "central-difference step");
    flag(grad, "tolerance", gcf.tolerance, "largest accepted relative error");

    auto* train = app.add_subcommand("train", "train one configuration over one or more seeds");
    TrainFlags tf;
    add_model_flags(train, tf.model);
    flag(train, "data", tf.data_dir, "directory holding train.tsv and val.tsv");
    flag(train, "train", tf.train_file, "training file");
    flag(train, "val", tf.val_file, "validation file");
    flag(train, "test", tf.test_file, "optional test file evaluated with the best parameters");
    flag(train, "out", tf.out, "run directory (default runs/<task>-<aggregator>-c<c>[-r<r>])");
    flag(train, "seed", tf.seed, "seed when --seeds is not given");
    flag(train, "seeds", tf.seeds, "comma-separated seeds")->delimiter(',');
    flag(train, "epochs", tf.epochs, "maximum epochs")->check(CLI::PositiveNumber);
    flag(train, "patience", tf.patience, "epochs without validation improvement before stopping");
    flag(train, "batch-size", tf.batch_size, "examples per update")->check(CLI::PositiveNumber);
    flag(train, "l2", tf.l2, "L2 weight")->check(CLI::NonNegativeNumber);
    train->add_flag("--no-bias-l2", tf.no_bias_l2, "exempt biases from the L2 term");
    flag(train, "threads", tf.threads, "worker threads")->check(CLI::PositiveNumber);
    train->add_flag("--resume", tf.resume, "continue from last.ckpt where present");
    train->add_flag("--timing", tf.timing, "record wall-clock seconds in the metrics log");
    train->add_flag("--quiet", tf.quiet, "no per-epoch progress on stderr");
    flag(train, "curve", tf.curve, "CSV file to append the mean/std row to");

    auto* eval = app.add_subcommand("eval", "accuracy of a checkpoint on sample files");
    EvalFlags ef;
    add_model_flags(eval, ef.model);
    flag(eval, "checkpoint", ef.checkpoint, "checkpoint file")->required();
    eval->add_option("--data", ef.files, "sample files")->required();
    flag(eval, "threads", ef.threads, "worker threads")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (gen_listops->parsed()) return cmd_gen(Task::ListOps, gf, out);
        if (gen_lrt->parsed()) return cmd_gen(Task::Lrt, gf, out);
        if (params->parsed()) return cmd_params(pf, out);
        if (grad->parsed()) return cmd_gradcheck(gcf, grad->count("--task") > 0, out);
        if (train->parsed()) return cmd_train(tf, out, err);
        if (eval->parsed()) return cmd_eval(ef, *eval, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const training::CheckpointError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}

}  // namespace treetensor::cli
