#include "treetensor/cli/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;
using treetensor::cli::ExitCode;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = treetensor::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("params") {
    auto r = run({"params", "--aggregator", "full", "--c", "10", "--L", "2"});
    CHECK(r.code == ExitCode::kOk);
    CHECK(r.out.find("paper-table: 1210\n") != std::string::npos);

    r = run({"params", "--aggregator", "hosvd", "--c", "50", "--r", "3", "--L", "5", "--convention", "paper-table"});
    CHECK(r.out == "paper-table: 3822\n");
    r = run({"params", "--aggregator", "sum", "--c", "88", "--L", "5", "--convention", "paper-table"});
    CHECK(r.out == "paper-table: 38720\n");
    r = run({"params", "--aggregator", "sum", "--c", "10", "--L", "2", "--m", "6", "--convention", "all-scalars"});
    CHECK(r.out == "all-scalars: 270\n");

    CHECK(run({"params", "--aggregator", "hosvd", "--c", "10", "--L", "2"}).code == ExitCode::kUsage);
    CHECK(run({"params", "--aggregator", "cubic"}).code == ExitCode::kUsage);
    CHECK(run({}).code == ExitCode::kUsage);
    CHECK(run({"--help"}).code == ExitCode::kOk);
}

TEST_CASE("gradcheck") {
    auto r = run({"gradcheck", "--aggregator", "sum", "--c", "5", "--depth", "3"});
    CHECK(r.code == ExitCode::kOk);
    CHECK(r.out.find(" PASS\n") != std::string::npos);
    CHECK(run({"gradcheck", "--aggregator", "full", "--c", "4", "--L", "2"}).code == ExitCode::kOk);
    CHECK(run({"gradcheck", "--aggregator", "hosvd", "--c", "6", "--r", "3", "--L", "5"}).code == ExitCode::kOk);
    CHECK(run({"gradcheck", "--aggregator", "hosvd", "--c", "3", "--r", "2", "--L", "3"}).code == ExitCode::kOk);
    // An impossible tolerance reports a verification failure.
    r = run({"gradcheck", "--aggregator", "sum", "--c", "3", "--L", "2", "--tolerance", "0"});
    CHECK(r.code == ExitCode::kVerification);
    CHECK(r.out.find(" FAIL\n") != std::string::npos);
}

TEST_CASE("gen") {
    TempDir dir("treetensor_cli_gen");
    auto r = run({"gen", "listops", "--out", dir / "a", "--seed", "5", "--train", "300", "--val", "50", "--test", "50"});
    REQUIRE(r.code == ExitCode::kOk);
    CHECK(r.out.find("train: 300 samples") != std::string::npos);
    run({"gen", "listops", "--out", dir / "b", "--seed", "5", "--train", "300", "--val", "50", "--test", "50"});
    for (const char* f : {"train.tsv", "val.tsv", "test.tsv"}) CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
    run({"gen", "listops", "--out", dir / "c", "--seed", "6", "--train", "300", "--val", "50", "--test", "50"});
    CHECK(slurp(dir.path / "a/train.tsv") != slurp(dir.path / "c/train.tsv"));

    // Single-variable formulas allow only six equivalent pairs.
    r = run({"gen", "lrt", "--out", dir / "l", "--train", "10", "--val", "2", "--test", "2", "--max-operators", "0"});
    REQUIRE(r.code == ExitCode::kOk);
    std::ifstream f(dir.path / "l/train.tsv");
    for (std::string line; std::getline(f, line);) {
        const std::string rel = line.substr(0, line.find('\t'));
        CHECK((rel == "equiv" || rel == "indep"));
    }

    CHECK(run({"gen", "listops", "--out", dir / "x", "--max-depth", "0"}).code == ExitCode::kUsage);
    CHECK(run({"gen", "listops", "--out", dir / "x", "--min-operands", "4", "--max-operands", "2"}).code ==
          ExitCode::kUsage);
}

TEST_CASE("train and eval") {
    TempDir dir("treetensor_cli_train");
    REQUIRE(run({"gen", "lrt", "--out", dir / "d", "--train", "120", "--val", "40", "--test", "40", "--max-operators",
                 "2"})
                .code == ExitCode::kOk);
    auto r = run({"train", "--task", "lrt", "--aggregator", "sum", "--c", "3", "--k", "4", "--data", dir / "d", "--seeds",
                  "1,2,3", "--epochs", "2", "--out", dir / "run", "--quiet", "--curve", dir / "curve.csv"});
    REQUIRE(r.code == ExitCode::kOk);
    CHECK(r.out.find("over 3 runs") != std::string::npos);
    CHECK(r.err.empty());
    for (const char* s : {"seed-1", "seed-2", "seed-3"}) {
        CHECK(fs::exists(dir.path / "run" / s / "metrics.jsonl"));
        CHECK(fs::exists(dir.path / "run" / s / "best.ckpt"));
    }
    const std::string curve = slurp(dir.path / "curve.csv");
    CHECK(curve.rfind("model,c,r,param_count,val_accuracy_mean,val_accuracy_std\nsum,3,0,18,", 0) == 0);

    const std::string ckpt = dir / "run/seed-1/best.ckpt";
    r = run({"eval", "--checkpoint", ckpt, "--data", dir / "d/val.tsv", dir / "d/test.tsv"});
    CHECK(r.code == ExitCode::kOk);
    CHECK(r.out.find("val.tsv: accuracy") != std::string::npos);
    CHECK(r.out.find("(40 examples)") != std::string::npos);
    CHECK(run({"eval", "--checkpoint", ckpt, "--c", "3", "--data", dir / "d/val.tsv"}).code == ExitCode::kOk);
    CHECK(run({"eval", "--checkpoint", ckpt, "--c", "4", "--data", dir / "d/val.tsv"}).code == ExitCode::kUsage);
    CHECK(run({"eval", "--checkpoint", dir / "nope.ckpt", "--data", dir / "d/val.tsv"}).code == ExitCode::kUsage);
    CHECK(run({"eval", "--checkpoint", ckpt, "--data", dir / "missing.tsv"}).code != ExitCode::kOk);

    // Wrong task for the files.
    CHECK(run({"train", "--task", "listops", "--data", dir / "d", "--out", dir / "bad", "--quiet"}).code !=
          ExitCode::kOk);
    // Resume adds epochs without repeating the finished ones.
    r = run({"train", "--task", "lrt", "--c", "3", "--k", "4", "--data", dir / "d", "--seed", "1", "--epochs", "3",
             "--out", dir / "run", "--resume", "--quiet"});
    CHECK(r.code == ExitCode::kOk);
    CHECK(r.out.find("resuming after epoch 2") != std::string::npos);
}

TEST_CASE("config files and environment") {
    TempDir dir("treetensor_cli_config");
    std::ofstream(dir.path / "p.ini") << "aggregator=full\nc=3\nL=2\nconvention=paper-table\n";
    CHECK(run({"params", "--config", dir / "p.ini"}).out == "paper-table: 48\n");
    // Flags take precedence over the file.
    CHECK(run({"params", "--config", dir / "p.ini", "--c", "5"}).out == "paper-table: 180\n");

    ::setenv("TREETENSOR_C", "10", 1);
    CHECK(run({"params", "--aggregator", "sum", "--L", "2", "--convention", "paper-table"}).out ==
          "paper-table: 200\n");
    CHECK(run({"params", "--config", dir / "p.ini"}).out == "paper-table: 48\n");
    ::unsetenv("TREETENSOR_C");
}
