#include "treetensor/data/listops.hpp"

#include "treetensor/data/random.hpp"
#include "treetensor/data/text.hpp"

#include <algorithm>
#include <stdexcept>

namespace treetensor::data {

Vector encode_listops_leaf(std::uint32_t token) {
    if (token > kBlank) throw TreeError("unknown ListOps token " + std::to_string(token));
    Vector v(10, 0.0);
    if (token != kBlank) std::fill_n(v.begin(), token + 1, 1.0);
    return v;
}

int eval_listops(const Tree& tree) {
    std::vector<int> value(tree.size(), -1);
    std::vector<int> operands;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const TreeNode& n = tree.node(i);
        if (n.is_leaf()) {
            if (n.token > kBlank) throw TreeError("unknown ListOps token " + std::to_string(n.token));
            value[i] = n.token == kBlank ? -1 : static_cast<int>(n.token);
            continue;
        }
        operands.clear();
        for (auto c : n.children)
            if (value[c] >= 0) operands.push_back(value[c]);
        if (operands.empty()) throw TreeError("ListOps operator at node " + std::to_string(i) + " has no operands");
        std::sort(operands.begin(), operands.end());
        switch (static_cast<ListOp>(n.op)) {
        case ListOp::Min: value[i] = operands.front(); break;
        case ListOp::Max: value[i] = operands.back(); break;
        case ListOp::Med: value[i] = operands[(operands.size() + 1) / 2 - 1]; break;
        case ListOp::Sm: {
            int s = 0;
            for (int v : operands) s += v;
            value[i] = s % 10;
            break;
        }
        default: throw TreeError("unknown ListOps operator id " + std::to_string(n.op));
        }
    }
    if (tree.empty()) throw TreeError("empty tree");
    const int root = value.back();
    if (root < 0) throw TreeError("tree evaluates to a blank");
    return root;
}

void ListOpsConfig::validate() const {
    if (count == 0) throw std::invalid_argument("count must be at least 1");
    if (max_depth == 0) throw std::invalid_argument("max_depth must be at least 1");
    if (min_operands < 1 || min_operands > max_operands || max_operands > kListOpsArity)
        throw std::invalid_argument("operand counts must satisfy 1 <= min <= max <= 5");
    if (!(expand_probability >= 0.0 && expand_probability <= 1.0))
        throw std::invalid_argument("expand_probability must lie in [0, 1]");
}

namespace {

std::uint32_t grow(Tree& t, Pcg32& rng, const ListOpsConfig& cfg, std::size_t depth) {
    const int op = static_cast<int>(rng.below(4));
    const std::size_t n = rng.between(static_cast<std::uint32_t>(cfg.min_operands),
                                      static_cast<std::uint32_t>(cfg.max_operands));
    std::array<bool, kListOpsArity> present{};
    std::fill_n(present.begin(), n, true);
    for (std::size_t i = kListOpsArity - 1; i > 0; --i)
        std::swap(present[i], present[rng.below(static_cast<std::uint32_t>(i + 1))]);

    std::vector<std::uint32_t> kids;
    for (bool p : present) {
        if (!p) kids.push_back(t.add_leaf(kBlank, encode_listops_leaf(kBlank)));
        else if (depth < cfg.max_depth && rng.bernoulli(cfg.expand_probability)) kids.push_back(grow(t, rng, cfg, depth + 1));
        else {
            const std::uint32_t d = rng.below(10);
            kids.push_back(t.add_leaf(d, encode_listops_leaf(d)));
        }
    }
    return t.add_internal(op, std::move(kids));
}

void render(const Tree& t, std::size_t i, std::string& out) {
    const TreeNode& n = t.node(i);
    if (n.is_leaf()) {
        out += n.token == kBlank ? "_" : std::to_string(n.token);
        return;
    }
    out += "( ";
    out += kListOpNames.at(static_cast<std::size_t>(n.op));
    for (auto c : n.children) {
        out += ' ';
        render(t, c, out);
    }
    out += " )";
}

std::uint32_t parse_expr(TokenStream& ts, Tree& t) {
    ts.expect("(");
    const Token& name = ts.next();
    const auto it = std::find(kListOpNames.begin(), kListOpNames.end(), name.text);
    if (it == kListOpNames.end()) throw ParseError(name.offset, "unknown operator '" + std::string(name.text) + "'");
    std::vector<std::uint32_t> kids;
    for (std::size_t j = 0; j < kListOpsArity; ++j) {
        const Token& tok = ts.peek();
        if (tok.text == "(") {
            kids.push_back(parse_expr(ts, t));
        } else if (tok.text == "_") {
            ts.next();
            kids.push_back(t.add_leaf(kBlank, encode_listops_leaf(kBlank)));
        } else if (tok.text.size() == 1 && tok.text[0] >= '0' && tok.text[0] <= '9') {
            ts.next();
            const auto d = static_cast<std::uint32_t>(tok.text[0] - '0');
            kids.push_back(t.add_leaf(d, encode_listops_leaf(d)));
        } else {
            ts.fail("expected a digit, '_' or '(' as operand " + std::to_string(j + 1) + " of " +
                    std::string(name.text));
        }
    }
    ts.expect(")");
    return t.add_internal(static_cast<int>(it - kListOpNames.begin()), std::move(kids));
}

}  // namespace

std::vector<ListOpsSample> gen_listops(const ListOpsConfig& cfg, const std::unordered_set<std::string>* exclude) {
    cfg.validate();
    std::vector<ListOpsSample> out;
    out.reserve(cfg.count);
    const std::uint64_t budget = 10000 * static_cast<std::uint64_t>(cfg.count) + 1000000;
    for (std::uint64_t attempt = 0; out.size() < cfg.count; ++attempt) {
        if (attempt == budget) throw std::runtime_error("could not draw enough distinct expressions");
        Pcg32 rng(mix(cfg.seed, attempt));
        ListOpsSample s;
        grow(s.tree, rng, cfg, 1);
        s.label = eval_listops(s.tree);
        if (exclude && exclude->contains(render_listops(s))) continue;
        out.push_back(std::move(s));
    }
    return out;
}

std::string render_listops_expr(const Tree& tree) {
    std::string out;
    render(tree, tree.root(), out);
    return out;
}

std::string render_listops(const ListOpsSample& s) {
    return std::to_string(s.label) + "\t" + render_listops_expr(s.tree);
}

ListOpsSample parse_listops(std::string_view line) {
    const auto fields = split_fields(line, 2);
    const Token label = fields[0];
    if (label.text.size() != 1 || label.text[0] < '0' || label.text[0] > '9')
        throw ParseError(label.offset, "label must be a single digit");
    ListOpsSample s;
    s.label = label.text[0] - '0';
    TokenStream ts(tokenize(fields[1].text, fields[1].offset), fields[1].offset + fields[1].text.size());
    parse_expr(ts, s.tree);
    ts.finish();
    return s;
}

Example to_example(const ListOpsSample& s) {
    return Example{{s.tree}, static_cast<std::size_t>(s.label)};
}

}  // namespace treetensor::data
