#include "treetensor/tensor/dense_tensor.hpp"
#include "treetensor/tensor/multi_affine.hpp"
#include "treetensor/tensor/tucker.hpp"

#include "unit/test_support.hpp"

#include <doctest.h>

using namespace treetensor;
using treetensor::test::Rng;

TEST_CASE("dense tensor enforces its shape invariants") {
    CHECK_THROWS_AS(DenseTensor(Shape{}), ShapeError);
    CHECK_THROWS_AS(DenseTensor(Shape{2, 0}), ShapeError);
    CHECK_THROWS_AS(DenseTensor(Shape{2, 2}, {1.0, 2.0, 3.0}), ShapeError);

    DenseTensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.strides() == Shape{12, 4, 1});
    t.at({1, 2, 3}) = 5.0;
    CHECK(t[23] == 5.0);
    CHECK_THROWS_AS(t.at({2, 0, 0}), ShapeError);
}

TEST_CASE("mode_product") {
    Rng rng(1);

    SUBCASE("identity at any mode leaves the tensor unchanged") {
        const DenseTensor t = rng.tensor({3, 4, 2});
        for (std::size_t mode = 0; mode < 3; ++mode)
            CHECK(mode_product(t, DenseTensor::identity(t.extent(mode)), mode) == t);
    }

    SUBCASE("row of ones sums the first mode") {
        DenseTensor ones({2, 2, 2});
        ones.fill(1.0);
        const DenseTensor out = mode_product(ones, DenseTensor::matrix(1, 2, {1.0, 1.0}), 0);
        CHECK(out.shape() == Shape{1, 2, 2});
        for (double v : out.data()) CHECK(v == 2.0);
    }

    SUBCASE("products along distinct modes commute") {
        for (int trial = 0; trial < 20; ++trial) {
            const DenseTensor t = rng.tensor({3, 4, 5});
            const DenseTensor a = rng.tensor({2, 3});
            const DenseTensor b = rng.tensor({6, 5});
            const DenseTensor ab = mode_product(mode_product(t, a, 0), b, 2);
            const DenseTensor ba = mode_product(mode_product(t, b, 2), a, 0);
            CHECK(max_abs_diff(ab, ba) <= 1e-12);
        }
    }

    SUBCASE("errors") {
        const DenseTensor t({2, 3});
        CHECK_THROWS_AS(mode_product(t, DenseTensor::identity(2), 2), ShapeError);
        CHECK_THROWS_AS(mode_product(t, DenseTensor::identity(2), 1), ShapeError);
    }
}

TEST_CASE("apply_multi_affine") {
    Rng rng(2);

    SUBCASE("pure bias tensor returns the bias for any input") {
        const std::size_t L = 2, c = 3, m = 2;
        MultiAffineMap map = MultiAffineMap::zeros(L, c, m);
        const Vector bias{0.5, -1.0, 2.0};
        for (std::size_t k = 0; k < c; ++k) map.tensor().at({m, c, c, k}) = bias[k];
        for (int trial = 0; trial < 5; ++trial) {
            const std::vector<Vector> ctx{rng.vector(c), rng.vector(c)};
            CHECK(apply_multi_affine(map, rng.vector(m), ctx) == bias);
        }
    }

    SUBCASE("hand contraction of a single product entry") {
        MultiAffineMap map = MultiAffineMap::zeros(2, 1, 0);
        map.tensor().at({0, 0, 0}) = 1.0;
        const std::vector<Vector> ctx{{2.0}, {3.0}};
        CHECK(apply_multi_affine(map, std::nullopt, ctx) == Vector{6.0});
    }

    SUBCASE("matches brute-force enumeration") {
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t L = rng.index(1, 3), c = rng.index(1, 4), m = rng.index(0, 3);
            const MultiAffineMap map(L, c, m, rng.tensor(MultiAffineMap::tensor_shape(L, c, m)));
            std::optional<Vector> label;
            std::vector<Vector> inputs;
            if (m > 0) {
                label = rng.vector(m);
                inputs.push_back(*label);
            }
            std::vector<Vector> ctx;
            for (std::size_t j = 0; j < L; ++j) ctx.push_back(rng.vector(c));
            inputs.insert(inputs.end(), ctx.begin(), ctx.end());
            const Vector got = apply_multi_affine(map, label, ctx);
            CHECK(max_abs_diff(got, test::brute_force_multi_affine(map.tensor(), inputs)) <= 1e-12);
        }
    }

    SUBCASE("affine in every slot") {
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t L = rng.index(1, 3), c = rng.index(1, 5);
            const MultiAffineMap map(L, c, 0, rng.tensor(MultiAffineMap::tensor_shape(L, c, 0)));
            std::vector<Vector> ctx;
            for (std::size_t j = 0; j < L; ++j) ctx.push_back(rng.vector(c));
            const std::size_t slot = rng.index(0, L - 1);
            const double alpha = rng.uniform(-2.0, 2.0);
            const Vector a = rng.vector(c), b = rng.vector(c);
            Vector mix(c);
            for (std::size_t i = 0; i < c; ++i) mix[i] = alpha * a[i] + (1 - alpha) * b[i];

            auto eval = [&](const Vector& v) {
                auto x = ctx;
                x[slot] = v;
                return apply_multi_affine(map, std::nullopt, x);
            };
            const Vector fa = eval(a), fb = eval(b), fmix = eval(mix);
            for (std::size_t k = 0; k < c; ++k)
                CHECK(std::abs(fmix[k] - (alpha * fa[k] + (1 - alpha) * fb[k])) <= 1e-9);
        }
    }

    SUBCASE("deterministic and shape checked") {
        const MultiAffineMap map(2, 3, 0, rng.tensor(MultiAffineMap::tensor_shape(2, 3, 0)));
        const std::vector<Vector> ctx{rng.vector(3), rng.vector(3)};
        CHECK(apply_multi_affine(map, std::nullopt, ctx) == apply_multi_affine(map, std::nullopt, ctx));
        const std::vector<Vector> bad{rng.vector(3), rng.vector(2)};
        CHECK_THROWS_AS(apply_multi_affine(map, std::nullopt, bad), ShapeError);
        CHECK_THROWS_AS(apply_multi_affine(map, Vector{1.0}, ctx), ShapeError);
        CHECK_THROWS_AS(MultiAffineMap(2, 3, 0, DenseTensor({4, 4, 4})), ShapeError);
    }
}

namespace {

TuckerFactors random_factors(Rng& rng, std::size_t r, std::size_t L, std::size_t c, std::size_t m) {
    TuckerFactors f = TuckerFactors::zeros(r, L, c, m);
    if (m > 0) f.label_mode = rng.tensor({r, m});
    for (auto& u : f.context_modes) u = rng.tensor({r, c});
    f.core = rng.tensor(f.core.shape());
    f.output_mode = rng.tensor({c, r});
    return f;
}

}  // namespace

TEST_CASE("tucker factors") {
    Rng rng(3);

    SUBCASE("zero core gives the zero vector") {
        TuckerFactors f = random_factors(rng, 3, 2, 4, 0);
        f.core.fill(0.0);
        const std::vector<Vector> ctx{rng.vector(4), rng.vector(4)};
        CHECK(tucker_apply(f, std::nullopt, ctx) == Vector(4, 0.0));
        const MultiAffineMap t = tucker_reconstruct(f);
        for (double v : t.tensor().data()) CHECK(v == 0.0);
    }

    SUBCASE("rank one sum of entries") {
        const std::size_t c = 4;
        TuckerFactors f = TuckerFactors::zeros(1, 1, c);
        f.context_modes[0].fill(1.0);
        f.core.at({0, 0}) = 1.0;
        f.output_mode.fill(1.0);
        const std::vector<Vector> ctx{{1.0, -2.0, 0.5, 4.0}};
        CHECK(tucker_apply(f, std::nullopt, ctx) == Vector(c, 3.5));
    }

    SUBCASE("application agrees with reconstruction") {
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t c = rng.index(1, 6), L = rng.index(1, 3), r = rng.index(1, 4), m = rng.index(0, 2);
            const TuckerFactors f = random_factors(rng, r, L, c, m);
            const MultiAffineMap t = tucker_reconstruct(f);
            std::optional<Vector> label;
            if (m > 0) label = rng.vector(m);
            std::vector<Vector> ctx;
            for (std::size_t j = 0; j < L; ++j) ctx.push_back(rng.vector(c));
            CHECK(max_abs_diff(tucker_apply(f, label, ctx), apply_multi_affine(t, label, ctx)) <= 1e-8);
        }
    }

    SUBCASE("full-rank identity embedding reproduces the tensor exactly") {
        const MultiAffineMap map(2, 2, 0, rng.tensor(MultiAffineMap::tensor_shape(2, 2, 0)));
        const TuckerFactors f = tucker_embed(map, 2);
        CHECK(tucker_reconstruct(f).tensor() == map.tensor());
        // Larger rank and a label input.
        const MultiAffineMap labeled(2, 3, 2, rng.tensor(MultiAffineMap::tensor_shape(2, 3, 2)));
        CHECK(tucker_reconstruct(tucker_embed(labeled, 5)).tensor() == labeled.tensor());
        CHECK_THROWS_AS(tucker_embed(labeled, 2), ShapeError);
    }

    SUBCASE("validation catches inconsistent factors") {
        TuckerFactors f = random_factors(rng, 2, 2, 3, 0);
        f.output_mode = DenseTensor({2, 3});
        CHECK_THROWS_AS(f.validate(), ShapeError);
        const std::vector<Vector> ctx{rng.vector(3), rng.vector(3)};
        CHECK_THROWS_AS(tucker_apply(f, std::nullopt, ctx), ShapeError);
    }
}
