#include "treetensor/data/lrt.hpp"

#include "treetensor/data/random.hpp"
#include "treetensor/data/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace treetensor::data {

namespace {

constexpr std::uint64_t kAll = ~std::uint64_t{0};

constexpr std::uint64_t variable_mask(std::size_t v) {
    std::uint64_t m = 0;
    for (std::uint64_t s = 0; s < 64; ++s)
        if ((s >> v) & 1u) m |= std::uint64_t{1} << s;
    return m;
}

}  // namespace

std::string_view to_string(Relation r) { return kRelationNames.at(static_cast<std::size_t>(r)); }

Relation parse_relation(std::string_view text) {
    const auto it = std::find(kRelationNames.begin(), kRelationNames.end(), text);
    if (it == kRelationNames.end()) throw std::invalid_argument("unknown relation '" + std::string(text) + "'");
    return static_cast<Relation>(it - kRelationNames.begin());
}

Vector encode_lrt_leaf(std::uint32_t token) {
    if (token >= kVariables) throw TreeError("unknown variable token " + std::to_string(token));
    Vector v(kVariables, 0.0);
    v[token] = 1.0;
    return v;
}

std::uint64_t truth_table(const Tree& f) {
    std::vector<std::uint64_t> val(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const TreeNode& n = f.node(i);
        if (n.is_leaf()) {
            if (n.token >= kVariables) throw TreeError("unknown variable token " + std::to_string(n.token));
            val[i] = variable_mask(n.token);
            continue;
        }
        switch (static_cast<LrtOp>(n.op)) {
        case LrtOp::Not:
            if (n.children.size() != 1) throw TreeError("not takes one operand");
            val[i] = ~val[n.children[0]];
            break;
        case LrtOp::And:
        case LrtOp::Or:
            if (n.children.size() != 2) throw TreeError("binary connective needs two operands");
            val[i] = n.op == static_cast<int>(LrtOp::And) ? (val[n.children[0]] & val[n.children[1]])
                                                           : (val[n.children[0]] | val[n.children[1]]);
            break;
        default: throw TreeError("unknown connective id " + std::to_string(n.op));
        }
    }
    if (f.empty()) throw TreeError("empty formula");
    return val.back();
}

Relation relation_of(std::uint64_t a, std::uint64_t b) {
    if (a == b) return Relation::Equiv;
    if ((a & ~b) == 0) return Relation::Fwd;
    if ((b & ~a) == 0) return Relation::Rev;
    const bool disjoint = (a & b) == 0;
    const bool exhaustive = (a | b) == kAll;
    if (disjoint && exhaustive) return Relation::Neg;
    if (disjoint) return Relation::Alt;
    if (exhaustive) return Relation::Cov;
    return Relation::Indep;
}

Relation lrt_relation(const Tree& left, const Tree& right) { return relation_of(truth_table(left), truth_table(right)); }

void LrtConfig::validate() const {
    if (count == 0) throw std::invalid_argument("count must be at least 1");
    if (!(not_probability >= 0.0 && not_probability <= 1.0))
        throw std::invalid_argument("not_probability must lie in [0, 1]");
}

namespace {

// Formula with exactly `ops` connectives.
std::uint32_t grow(Tree& t, Pcg32& rng, std::size_t ops, double not_p) {
    if (ops == 0) {
        const std::uint32_t v = rng.below(kVariables);
        return t.add_leaf(v, encode_lrt_leaf(v));
    }
    if (rng.bernoulli(not_p)) {
        const auto child = grow(t, rng, ops - 1, not_p);
        return t.add_internal(static_cast<int>(LrtOp::Not), {child});
    }
    const std::size_t left_ops = rng.below(static_cast<std::uint32_t>(ops));
    const auto l = grow(t, rng, left_ops, not_p);
    const auto r = grow(t, rng, ops - 1 - left_ops, not_p);
    const int op = static_cast<int>(rng.below(2));
    return t.add_internal(op, {l, r});
}

void render(const Tree& t, std::size_t i, std::string& out) {
    const TreeNode& n = t.node(i);
    if (n.is_leaf()) {
        out += static_cast<char>('a' + n.token);
        return;
    }
    out += "( ";
    if (n.op == static_cast<int>(LrtOp::Not)) {
        out += "not ";
        render(t, n.children.at(0), out);
    } else {
        render(t, n.children.at(0), out);
        out += ' ';
        out += kLrtOpNames.at(static_cast<std::size_t>(n.op));
        out += ' ';
        render(t, n.children.at(1), out);
    }
    out += " )";
}

std::uint32_t parse(TokenStream& ts, Tree& t) {
    const Token& tok = ts.peek();
    if (tok.text.size() == 1 && tok.text[0] >= 'a' && tok.text[0] < static_cast<char>('a' + kVariables)) {
        ts.next();
        const auto v = static_cast<std::uint32_t>(tok.text[0] - 'a');
        return t.add_leaf(v, encode_lrt_leaf(v));
    }
    if (tok.text != "(") ts.fail("expected a variable a-f or '(', found '" + std::string(tok.text) + "'");
    ts.next();
    if (ts.peek().text == "not") {
        ts.next();
        const auto child = parse(ts, t);
        ts.expect(")");
        return t.add_internal(static_cast<int>(LrtOp::Not), {child});
    }
    const auto l = parse(ts, t);
    const Token& conn = ts.peek();
    int op;
    if (conn.text == "and") op = static_cast<int>(LrtOp::And);
    else if (conn.text == "or") op = static_cast<int>(LrtOp::Or);
    else ts.fail("expected 'and' or 'or', found '" + std::string(conn.text) + "'");
    ts.next();
    const auto r = parse(ts, t);
    ts.expect(")");
    return t.add_internal(op, {l, r});
}

}  // namespace

std::vector<LrtSample> gen_lrt(const LrtConfig& cfg, const std::unordered_set<std::string>* exclude) {
    cfg.validate();
    const std::size_t cap = (cfg.count + 1) / 2;
    std::array<std::size_t, kRelationNames.size()> per_class{};
    std::vector<LrtSample> out;
    out.reserve(cfg.count);
    const std::uint64_t budget = 10000 * static_cast<std::uint64_t>(cfg.count) + 1000000;
    for (std::uint64_t attempt = 0; out.size() < cfg.count; ++attempt) {
        if (attempt == budget) throw std::runtime_error("could not draw enough distinct relation pairs");
        Pcg32 rng(mix(cfg.seed, attempt));
        LrtSample s;
        const auto max_ops = static_cast<std::uint32_t>(cfg.max_operators);
        grow(s.left, rng, rng.between(0, max_ops), cfg.not_probability);
        grow(s.right, rng, rng.between(0, max_ops), cfg.not_probability);
        const std::uint64_t a = truth_table(s.left), b = truth_table(s.right);
        if (a == 0 || a == kAll || b == 0 || b == kAll) continue;
        s.relation = relation_of(a, b);
        auto& n = per_class[static_cast<std::size_t>(s.relation)];
        if (cfg.cap_classes && n >= cap) continue;
        if (exclude && exclude->contains(render_lrt(s))) continue;
        ++n;
        out.push_back(std::move(s));
    }
    return out;
}

std::string render_formula(const Tree& f) {
    std::string out;
    render(f, f.root(), out);
    return out;
}

std::string render_lrt(const LrtSample& s) {
    return std::string(to_string(s.relation)) + "\t" + render_formula(s.left) + "\t" + render_formula(s.right);
}

Tree parse_formula(std::string_view text, std::size_t base) {
    TokenStream ts(tokenize(text, base), base + text.size());
    Tree t;
    parse(ts, t);
    ts.finish();
    return t;
}

LrtSample parse_lrt(std::string_view line) {
    const auto fields = split_fields(line, 3);
    LrtSample s;
    try {
        s.relation = parse_relation(fields[0].text);
    } catch (const std::invalid_argument& e) {
        throw ParseError(fields[0].offset, e.what());
    }
    s.left = parse_formula(fields[1].text, fields[1].offset);
    s.right = parse_formula(fields[2].text, fields[2].offset);
    return s;
}

Example to_example(const LrtSample& s) {
    return Example{{s.left, s.right}, static_cast<std::size_t>(s.relation)};
}

}  // namespace treetensor::data
