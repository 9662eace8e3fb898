#pragma once

#include "treetensor/data/listops.hpp"
#include "treetensor/data/lrt.hpp"
#include "treetensor/treelstm/model.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace treetensor::data {

enum class Split : std::uint64_t { Train = 0, Val = 1, Test = 2 };
std::string_view to_string(Split s);

struct SplitCounts {
    std::size_t train = 1;
    std::size_t val = 1;
    std::size_t test = 1;
};

/// Rendered sample lines of the three splits. Each split is drawn with seed
/// mix(seed, split id) and never repeats a line of an earlier split.
struct Corpus {
    std::vector<std::string> train, val, test;
    [[nodiscard]] const std::vector<std::string>& split(Split s) const;
};

Corpus gen_listops_corpus(const ListOpsConfig& base, const SplitCounts& counts);
/// Train and val use base.max_operators; test uses `test_max_operators`.
Corpus gen_lrt_corpus(const LrtConfig& base, const SplitCounts& counts, std::size_t test_max_operators);

/// Parses one sample line of the task and re-checks its label against the oracle.
Example parse_example(Task task, std::string_view line);

/// Reads a sample file; errors name the file and 1-based line.
std::vector<Example> load_examples(Task task, const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace treetensor::data
