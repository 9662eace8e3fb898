#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treetensor::data {

/// Malformed sample line. `position()` is the 0-based character offset of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t position, const std::string& reason)
        : std::runtime_error("at column " + std::to_string(position + 1) + ": " + reason), position_(position) {}
    [[nodiscard]] std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

struct Token {
    std::string_view text;
    std::size_t offset;
};

/// Splits on single spaces; empty tokens (doubled or edge spaces) are errors.
std::vector<Token> tokenize(std::string_view text, std::size_t base_offset = 0);

/// Splits a line on TAB into exactly `fields` parts, returning each part's offset.
std::vector<Token> split_fields(std::string_view line, std::size_t fields);

/// Cursor over a token list for recursive-descent parsers.
class TokenStream {
public:
    TokenStream(std::vector<Token> tokens, std::size_t end_offset)
        : tokens_(std::move(tokens)), end_(end_offset) {}

    [[nodiscard]] bool done() const { return pos_ == tokens_.size(); }
    [[nodiscard]] const Token& peek() const;
    const Token& next();
    void expect(std::string_view text);
    [[noreturn]] void fail(const std::string& reason) const;
    void finish() const;

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t end_;
};

}  // namespace treetensor::data
