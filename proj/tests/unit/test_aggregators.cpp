#include "treetensor/aggregators/aggregator.hpp"

#include "unit/test_support.hpp"

#include <doctest.h>

using namespace treetensor;
using treetensor::test::Rng;

namespace {

SumParams random_sum(Rng& rng, std::size_t L, std::size_t c, std::size_t m) {
    SumParams p = SumParams::zeros(L, c, m);
    for (auto& u : p.context_weights) u = rng.tensor({c, c});
    if (m > 0) p.label_weight = rng.tensor({c, m});
    p.bias = rng.tensor({c});
    return p;
}

std::vector<Vector> random_context(Rng& rng, std::size_t L, std::size_t c) {
    std::vector<Vector> ctx;
    for (std::size_t j = 0; j < L; ++j) ctx.push_back(rng.vector(c));
    return ctx;
}

// Direct evaluation of W x + sum_j U_j h_j + b, written out element by element.
Vector weighted_sum_oracle(const SumParams& p, const std::optional<Vector>& x, const std::vector<Vector>& h) {
    const std::size_t c = p.bias.size();
    Vector out(c);
    for (std::size_t k = 0; k < c; ++k) {
        double acc = p.bias[k];
        if (x)
            for (std::size_t i = 0; i < x->size(); ++i) acc += p.label_weight->at({k, i}) * (*x)[i];
        for (std::size_t j = 0; j < h.size(); ++j)
            for (std::size_t i = 0; i < c; ++i) acc += p.context_weights[j].at({k, i}) * h[j][i];
        out[k] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("sum aggregator") {
    Rng rng(20);
    SUBCASE("zero context weights return the bias") {
        SumParams p = SumParams::zeros(3, 2);
        p.bias = DenseTensor::vector({0.7, -0.1});
        CHECK(aggregate(p, std::nullopt, random_context(rng, 3, 2)) == Vector{0.7, -0.1});
    }
    SUBCASE("agrees with element-wise evaluation") {
        const SumParams p = random_sum(rng, 3, 4, 2);
        const Vector x = rng.vector(2);
        const auto ctx = random_context(rng, 3, 4);
        CHECK(max_abs_diff(aggregate(p, x, ctx), weighted_sum_oracle(p, x, ctx)) <= 1e-12);
    }
}

TEST_CASE("sum_to_tensor") {
    Rng rng(21);
    SUBCASE("zero parameters give the zero tensor") {
        const FullParams f = sum_to_tensor(SumParams::zeros(2, 3, 1));
        for (double v : f.map.tensor().data()) CHECK(v == 0.0);
    }
    SUBCASE("scalar hand example") {
        SumParams p = SumParams::zeros(1, 1);
        p.context_weights[0] = DenseTensor::matrix(1, 1, {2.0});
        p.bias = DenseTensor::vector({3.0});
        const FullParams f = sum_to_tensor(p);
        CHECK(f.map.tensor().shape() == Shape{2, 1});
        CHECK(f.map.tensor().values() == Vector{2.0, 3.0});
        const std::vector<Vector> ctx{{5.0}};
        CHECK(aggregate(f, std::nullopt, ctx) == Vector{13.0});
    }
    SUBCASE("embedded tensor reproduces the weighted sum") {
        const std::size_t Ls[] = {1, 2, 3, 5};
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t L = Ls[trial % 4];
            const std::size_t c = rng.index(1, L == 5 ? 4 : 8), m = rng.index(0, 3);
            const SumParams p = random_sum(rng, L, c, m);
            std::optional<Vector> x;
            if (m > 0) x = rng.vector(m);
            const auto ctx = random_context(rng, L, c);
            const Vector expected = weighted_sum_oracle(p, x, ctx);
            CHECK(max_abs_diff(aggregate(sum_to_tensor(p), x, ctx), expected) <= 1e-10);
            CHECK(max_abs_diff(aggregate(p, x, ctx), expected) <= 1e-10);
        }
    }
}

TEST_CASE("hosvd aggregator with full-rank factors matches the full tensor") {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t L = rng.index(1, 3), c = rng.index(1, 5), m = rng.index(0, 2);
        const MultiAffineMap map(L, c, m, rng.tensor(MultiAffineMap::tensor_shape(L, c, m)));
        const HosvdParams h{tucker_embed(map, std::max(c, m) + rng.index(0, 1))};
        std::optional<Vector> x;
        if (m > 0) x = rng.vector(m);
        const auto ctx = random_context(rng, L, c);
        CHECK(max_abs_diff(aggregate(h, x, ctx), aggregate(FullParams{map}, x, ctx)) <= 1e-8);
    }
}

TEST_CASE("parameter counts") {
    auto table = [](AggregatorTag tag, std::size_t c, std::size_t L, std::size_t r = 0) {
        return param_count(AggregatorKind{tag, c, L, 0, r}, CountConvention::PaperTable);
    };
    using enum AggregatorTag;

    SUBCASE("logical relations table, L = 2") {
        const std::size_t cs[] = {3, 5, 10, 20, 50, 100};
        const std::uint64_t full[] = {48, 180, 1210, 8820, 130050, 1020100};
        const std::uint64_t sum[] = {18, 50, 200, 800, 5000, 20000};
        for (int i = 0; i < 6; ++i) {
            CHECK(table(Full, cs[i], 2) == full[i]);
            CHECK(table(Sum, cs[i], 2) == sum[i]);
        }
        CHECK(table(Hosvd, 10, 2, 7) == 588);
        CHECK(table(Hosvd, 20, 2, 15) == 4440);
        CHECK(table(Hosvd, 50, 2, 30) == 31830);
        CHECK(table(Hosvd, 100, 2, 20) == 12820);
    }

    SUBCASE("list operations table, L = 5") {
        CHECK(table(Full, 3, 5) == 3072);
        CHECK(table(Full, 5, 5) == 38880);
        CHECK(table(Full, 7, 5) == 229376);
        CHECK(table(Sum, 25, 5) == 3125);
        CHECK(table(Sum, 88, 5) == 38720);
        CHECK(table(Sum, 214, 5) == 228980);
        CHECK(table(Hosvd, 10, 5, 3) == 3222);
        CHECK(table(Hosvd, 20, 5, 3) == 3372);
        CHECK(table(Hosvd, 50, 5, 3) == 3822);
    }

    SUBCASE("all-scalars convention follows the closed forms") {
        auto all = [](AggregatorTag tag, std::size_t c, std::size_t L, std::size_t m, std::size_t r = 0) {
            return param_count(AggregatorKind{tag, c, L, m, r}, CountConvention::AllScalars);
        };
        CHECK(all(Sum, 10, 2, 0) == 210);
        CHECK(all(Sum, 10, 2, 6) == 270);
        CHECK(all(Full, 3, 2, 0) == 48);
        CHECK(all(Full, 3, 2, 4) == 240);
        CHECK(all(Hosvd, 20, 5, 0, 3) == 6 * 20 * 3 + 3 * 1024);
        CHECK(all(Hosvd, 20, 5, 10, 3) == 30 + 6 * 20 * 3 + 3 * 4096);
    }

    SUBCASE("all-scalars equals the number of scalars a gate allocates") {
        for (auto tag : {Sum, Full, Hosvd}) {
            ParameterStore store;
            const AggregatorKind kind{tag, 4, 3, 0, 2};
            make_gate(store, kind, "g");
            CHECK(store.scalar_count() == param_count(kind, CountConvention::AllScalars));
        }
    }

    SUBCASE("hosvd table count grows strictly with rank and hidden size") {
        for (std::size_t L : {2, 5})
            for (std::size_t c = 1; c < 40; ++c)
                for (std::size_t r = 1; r < 12; ++r) {
                    CHECK(table(Hosvd, c, L, r + 1) > table(Hosvd, c, L, r));
                    CHECK(table(Hosvd, c + 1, L, r) > table(Hosvd, c, L, r));
                }
    }

    SUBCASE("invalid kinds") {
        CHECK_THROWS(param_count(AggregatorKind{Hosvd, 10, 2, 0, 0}, CountConvention::PaperTable));
        CHECK_THROWS(param_count(AggregatorKind{Sum, 0, 2, 0, 0}, CountConvention::PaperTable));
    }
}

TEST_CASE("tape gates agree with value-level aggregation") {
    Rng rng(23);
    for (auto tag : {AggregatorTag::Sum, AggregatorTag::Full, AggregatorTag::Hosvd}) {
        for (std::size_t m : {0, 3}) {
            ParameterStore store;
            const AggregatorKind kind{tag, 3, 2, m, 2};
            const GateParameters gate = make_gate(store, kind, "gate");
            for (auto& p : store) p->value = rng.tensor(p->value.shape());

            std::optional<Vector> x;
            if (m > 0) x = rng.vector(m);
            const auto ctx = random_context(rng, 2, 3);

            Tape tape;
            std::optional<Var> xv;
            if (x) xv = tape.constant(*x);
            const std::vector<Var> cv{tape.constant(ctx[0]), tape.constant(ctx[1])};
            const Var out = aggregate(tape, gate, xv, cv);
            const Vector direct = aggregate(gate_values(gate, kind), x, ctx);
            CHECK(max_abs_diff(tape.value(out), direct) <= 1e-14);

            // Round trip through assign_gate.
            const AggregatorParams snapshot = gate_values(gate, kind);
            for (auto& p : store) p->value.fill(0.0);
            assign_gate(gate, snapshot);
            CHECK(aggregate(gate_values(gate, kind), x, ctx) == direct);
        }
    }
}

TEST_CASE("gate parameters carry Kaiming fan-in") {
    ParameterStore store;
    make_gate(store, AggregatorKind{AggregatorTag::Full, 3, 2, 0, 0}, "f");
    CHECK(store.get("f.T").fan_in == 16);
    make_gate(store, AggregatorKind{AggregatorTag::Hosvd, 20, 5, 0, 3}, "h");
    CHECK(store.get("h.G").fan_in == 1024);
    CHECK(store.get("h.U1").fan_in == 20);
    CHECK(store.get("h.Q").fan_in == 3);
    make_gate(store, AggregatorKind{AggregatorTag::Sum, 4, 2, 0, 0}, "s");
    CHECK(store.get("s.U2").fan_in == 4);
    CHECK(store.get("s.b").fan_in == 0);
}
