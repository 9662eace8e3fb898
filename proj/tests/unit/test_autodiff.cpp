#include "treetensor/autodiff/gradcheck.hpp"
#include "treetensor/autodiff/parameter.hpp"
#include "treetensor/autodiff/tape.hpp"
#include "treetensor/tensor/multi_affine.hpp"

#include "unit/test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace treetensor;
using treetensor::test::Rng;

TEST_CASE("recording primitives computes forward values") {
    Tape tape;
    const Var a = tape.constant(Vector{1.0});
    const Var b = tape.constant(Vector{2.0});
    CHECK(tape.value(tape.add(a, b))[0] == 3.0);
    CHECK(tape.value(tape.sigmoid(tape.constant(Vector{0.0})))[0] == 0.5);
    CHECK(tape.value(tape.leaky_relu(tape.constant(Vector{-1.0, 2.0})))[0] == doctest::Approx(-0.01));
    CHECK(tape.value(tape.leaky_relu(tape.constant(Vector{-1.0, 2.0})))[1] == 2.0);

    const Var cat = tape.concat(std::vector<Var>{a, b, a});
    CHECK(std::vector<double>(tape.value(cat).begin(), tape.value(cat).end()) == Vector{1.0, 2.0, 1.0});

    const Var uniform = tape.softmax_cross_entropy(tape.constant(Vector(7, 0.0)), 3);
    CHECK(tape.value(uniform)[0] == doctest::Approx(std::log(7.0)));
}

TEST_CASE("multi-affine node matches the tensor-core contraction") {
    Rng rng(10);
    ParameterStore store;
    const MultiAffineMap map(2, 3, 0, rng.tensor(MultiAffineMap::tensor_shape(2, 3, 0)));
    Parameter& t = store.add("T", map.tensor());
    const std::vector<Vector> ctx{rng.vector(3), rng.vector(3)};

    Tape tape;
    const std::vector<Var> inputs{tape.constant(ctx[0]), tape.constant(ctx[1])};
    const Var out = tape.multi_affine(tape.param(t), inputs);
    const Vector direct = apply_multi_affine(map, std::nullopt, ctx);
    CHECK(Vector(tape.value(out).begin(), tape.value(out).end()) == direct);
}

TEST_CASE("graph errors") {
    Tape a, b;
    const Var x = a.constant(Vector{1.0});
    const Var y = b.constant(Vector{1.0});
    CHECK_THROWS_AS(a.add(x, y), GraphError);
    const Var v = a.constant(Vector{1.0, 2.0});
    CHECK_THROWS_AS(a.backward(v), GraphError);
    CHECK_THROWS_AS(a.add(x, v), ShapeError);
}

TEST_CASE("backward on simple losses") {
    ParameterStore store;
    Parameter& p = store.add("p", DenseTensor::vector({1.5, -2.0, 0.25}));
    Parameter& s = store.add("s", DenseTensor::vector({4.0}));

    SUBCASE("identity of a scalar parameter has unit gradient") {
        Tape tape;
        tape.backward(tape.param(s));
        CHECK(s.grad[0] == 1.0);
    }

    SUBCASE("half squared norm has gradient p") {
        Tape tape;
        tape.backward(tape.scale(tape.sum_squares(tape.param(p)), 0.5));
        CHECK(p.grad == p.value);
    }

    SUBCASE("two backward passes without zeroing double the gradient") {
        Tape tape;
        const Var loss = tape.sum_squares(tape.hadamard(tape.param(p), tape.param(p)));
        tape.backward(loss);
        const DenseTensor once = p.grad;
        tape.backward(loss);
        for (std::size_t i = 0; i < once.size(); ++i) CHECK(p.grad[i] == 2.0 * once[i]);
    }
}

TEST_CASE("gradients are linear in the loss") {
    Rng rng(11);
    ParameterStore store;
    Parameter& m = store.add("M", rng.tensor({3, 4}));
    Parameter& x = store.add("x", rng.tensor({4}));

    auto loss1 = [&](Tape& t) { return t.sum_squares(t.tanh(t.matvec(t.param(m), t.param(x)))); };
    auto loss2 = [&](Tape& t) { return t.softmax_cross_entropy(t.matvec(t.param(m), t.param(x)), 1); };

    store.zero_grad();
    { Tape t; t.backward(loss1(t)); }
    const DenseTensor g1m = m.grad, g1x = x.grad;
    store.zero_grad();
    { Tape t; t.backward(loss2(t)); }
    const DenseTensor g2m = m.grad, g2x = x.grad;
    store.zero_grad();
    { Tape t; t.backward(t.add(loss1(t), loss2(t))); }
    for (std::size_t i = 0; i < m.grad.size(); ++i) CHECK(std::abs(m.grad[i] - (g1m[i] + g2m[i])) <= 1e-12);
    for (std::size_t i = 0; i < x.grad.size(); ++i) CHECK(std::abs(x.grad[i] - (g1x[i] + g2x[i])) <= 1e-12);
}

TEST_CASE("per-sample tapes of different shapes do not interfere") {
    Rng rng(12);
    ParameterStore store;
    Parameter& w = store.add("w", rng.tensor({2, 2}));
    Parameter& h = store.add("h", rng.tensor({2}));

    auto deep = [&](Tape& t) {
        Var v = t.param(h);
        for (int i = 0; i < 3; ++i) v = t.tanh(t.matvec(t.param(w), v));
        return t.sum_squares(v);
    };
    auto shallow = [&](Tape& t) { return t.sum_squares(t.sigmoid(t.matvec(t.param(w), t.param(h)))); };

    store.zero_grad();
    { Tape t; t.backward(deep(t)); }
    const DenseTensor g_deep = w.grad;
    store.zero_grad();
    { Tape t; t.backward(shallow(t)); }
    const DenseTensor g_shallow = w.grad;

    store.zero_grad();
    Tape t1, t2;
    const Var l1 = deep(t1);
    const Var l2 = shallow(t2);
    t2.compute_gradients(l2);
    t1.compute_gradients(l1);
    t1.accumulate_parameter_gradients();
    t2.accumulate_parameter_gradients();
    for (std::size_t i = 0; i < w.grad.size(); ++i) CHECK(std::abs(w.grad[i] - (g_deep[i] + g_shallow[i])) <= 1e-15);
}

TEST_CASE("finite-difference check") {
    Rng rng(13);
    ParameterStore store;

    SUBCASE("quadratic loss") {
        Parameter& a = store.add("A", rng.tensor({3, 3}));
        Parameter& x = store.add("x", rng.tensor({3}));
        const auto report = finite_diff_check(
            [&](Tape& t) { return t.sum_squares(t.matvec(t.param(a), t.param(x))); }, store, 1e-5);
        CHECK(report.entries_checked == 12);
        CHECK(report.max_relative_error <= 1e-8);
    }

    SUBCASE("every primitive") {
        Parameter& t3 = store.add("T", rng.tensor(MultiAffineMap::tensor_shape(2, 3, 2)));
        Parameter& b = store.add("B", rng.tensor({4, 3, 3}));
        Parameter& h1 = store.add("h1", rng.tensor({3}));
        Parameter& h2 = store.add("h2", rng.tensor({3}));
        Parameter& x = store.add("x", rng.tensor({2}));
        Parameter& m = store.add("M", rng.tensor({5, 10}));
        const auto report = finite_diff_check(
            [&](Tape& t) {
                const std::vector<Var> in{t.param(x), t.param(h1), t.param(h2)};
                const Var agg = t.tanh(t.multi_affine(t.param(t3), in));
                const Var bil = t.leaky_relu(t.bilinear(t.param(b), agg, t.sigmoid(t.param(h2))));
                const std::vector<Var> parts{bil, agg, t.hadamard(t.param(h1), agg)};
                const Var logits = t.matvec(t.param(m), t.concat(parts));
                return t.add(t.softmax_cross_entropy(logits, 2), t.scale(t.sum_squares(t.param(h1)), 0.3));
            },
            store, 1e-5);
        CHECK(report.max_relative_error <= 1e-6);
    }

    SUBCASE("non-finite loss is reported") {
        Parameter& x = store.add("x", DenseTensor::vector({1e200}));
        CHECK_THROWS_AS(finite_diff_check([&](Tape& t) { return t.sum_squares(t.param(x)); }, store, 1e-5),
                        NumericError);
    }
}
