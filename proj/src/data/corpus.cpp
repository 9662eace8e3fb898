#include "treetensor/data/corpus.hpp"

#include "treetensor/data/random.hpp"
#include "treetensor/data/text.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

namespace treetensor::data {

std::string_view to_string(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

const std::vector<std::string>& Corpus::split(Split s) const {
    return s == Split::Train ? train : s == Split::Val ? val : test;
}

namespace {

template <class Generate>
Corpus build(const SplitCounts& counts, Generate generate) {
    Corpus c;
    std::unordered_set<std::string> seen;
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
        const std::size_t n = s == Split::Train ? counts.train : s == Split::Val ? counts.val : counts.test;
        auto& lines = s == Split::Train ? c.train : s == Split::Val ? c.val : c.test;
        if (n == 0) continue;
        lines = generate(s, n, seen.empty() ? nullptr : &seen);
        seen.insert(lines.begin(), lines.end());
    }
    return c;
}

}  // namespace

Corpus gen_listops_corpus(const ListOpsConfig& base, const SplitCounts& counts) {
    return build(counts, [&](Split s, std::size_t n, const std::unordered_set<std::string>* exclude) {
        ListOpsConfig cfg = base;
        cfg.seed = mix(base.seed, static_cast<std::uint64_t>(s));
        cfg.count = n;
        std::vector<std::string> lines;
        for (const auto& sample : gen_listops(cfg, exclude)) lines.push_back(render_listops(sample));
        return lines;
    });
}

Corpus gen_lrt_corpus(const LrtConfig& base, const SplitCounts& counts, std::size_t test_max_operators) {
    return build(counts, [&](Split s, std::size_t n, const std::unordered_set<std::string>* exclude) {
        LrtConfig cfg = base;
        cfg.seed = mix(base.seed, static_cast<std::uint64_t>(s));
        cfg.count = n;
        if (s == Split::Test) cfg.max_operators = test_max_operators;
        std::vector<std::string> lines;
        for (const auto& sample : gen_lrt(cfg, exclude)) lines.push_back(render_lrt(sample));
        return lines;
    });
}

Example parse_example(Task task, std::string_view line) {
    if (task == Task::ListOps) {
        const ListOpsSample s = parse_listops(line);
        const int expected = eval_listops(s.tree);
        if (expected != s.label)
            throw ParseError(0, "label " + std::to_string(s.label) + " disagrees with evaluation " +
                                    std::to_string(expected));
        return to_example(s);
    }
    const LrtSample s = parse_lrt(line);
    const Relation expected = lrt_relation(s.left, s.right);
    if (expected != s.relation)
        throw ParseError(0, "relation " + std::string(to_string(s.relation)) + " disagrees with truth tables (" +
                                std::string(to_string(expected)) + ")");
    return to_example(s);
}

std::vector<Example> load_examples(Task task, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<Example> out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        if (line.empty()) continue;
        try {
            out.push_back(parse_example(task, line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(no) + ": " + e.what());
        }
    }
    if (out.empty()) throw std::runtime_error(path.string() + ": no samples");
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace treetensor::data
