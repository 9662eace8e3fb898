#include "treetensor/data/text.hpp"

namespace treetensor::data {

std::vector<Token> tokenize(std::string_view text, std::size_t base) {
    std::vector<Token> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i < text.size() && text[i] != ' ') continue;
        if (i == start) throw ParseError(base + i, "empty token (stray space)");
        out.push_back({text.substr(start, i - start), base + start});
        start = i + 1;
    }
    return out;
}

std::vector<Token> split_fields(std::string_view line, std::size_t fields) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<Token> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i < line.size() && line[i] != '\t') continue;
        if (out.size() == fields) throw ParseError(start, "expected " + std::to_string(fields) + " tab-separated fields");
        out.push_back({line.substr(start, i - start), start});
        start = i + 1;
    }
    if (out.size() != fields)
        throw ParseError(line.size(), "expected " + std::to_string(fields) + " tab-separated fields, found " +
                                          std::to_string(out.size()));
    return out;
}

const Token& TokenStream::peek() const {
    if (done()) fail("unexpected end of input");
    return tokens_[pos_];
}

const Token& TokenStream::next() {
    const Token& t = peek();
    ++pos_;
    return t;
}

void TokenStream::expect(std::string_view text) {
    const Token& t = peek();
    if (t.text != text) fail("expected '" + std::string(text) + "', found '" + std::string(t.text) + "'");
    ++pos_;
}

void TokenStream::fail(const std::string& reason) const {
    throw ParseError(done() ? end_ : tokens_[pos_].offset, reason);
}

void TokenStream::finish() const {
    if (!done()) fail("unexpected trailing token '" + std::string(tokens_[pos_].text) + "'");
}

}  // namespace treetensor::data
