#pragma once

// Helpers shared by the unit tests: seeded random values and brute-force
// reference contractions that do not go through the library kernels.

#include "treetensor/tensor/dense_tensor.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace treetensor::test {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo = -1.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
    }
    Vector vector(std::size_t n, double scale = 1.0) {
        Vector v(n);
        for (auto& x : v) x = scale * uniform();
        return v;
    }
    DenseTensor tensor(Shape shape, double scale = 1.0) {
        DenseTensor t(std::move(shape));
        for (auto& x : t.data()) x = scale * uniform();
        return t;
    }

private:
    std::mt19937_64 engine_;
};

/// out(k) = sum over every index tuple of T(i_1..i_p, k) * prod_s xbar_s(i_s).
inline Vector brute_force_multi_affine(const DenseTensor& t, const std::vector<Vector>& inputs) {
    const Shape& s = t.shape();
    const std::size_t p = inputs.size();
    Vector out(s.back(), 0.0);
    std::vector<std::size_t> idx(s.size(), 0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        double w = t[flat];
        for (std::size_t m = 0; m < p; ++m) w *= (idx[m] + 1 == s[m]) ? 1.0 : inputs[m][idx[m]];
        out[idx[p]] += w;
        for (std::size_t d = s.size(); d-- > 0;) {
            if (++idx[d] < s[d]) break;
            idx[d] = 0;
        }
    }
    return out;
}

}  // namespace treetensor::test
