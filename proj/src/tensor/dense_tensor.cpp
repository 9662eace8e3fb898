#include "treetensor/tensor/dense_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace treetensor {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_volume(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one mode");
    for (auto e : shape)
        if (e == 0) throw ShapeError("tensor extent must be positive: " + shape_to_string(shape));
}

}  // namespace

DenseTensor::DenseTensor() : shape_{1}, data_(1, 0.0) {}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_volume(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_volume(shape_))
        throw ShapeError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
}

DenseTensor DenseTensor::vector(std::vector<double> values) {
    Shape s{values.size()};
    return DenseTensor(std::move(s), std::move(values));
}

DenseTensor DenseTensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return DenseTensor({rows, cols}, std::move(values));
}

DenseTensor DenseTensor::identity(std::size_t n) {
    DenseTensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
    return t;
}

Shape DenseTensor::strides() const {
    Shape s(shape_.size(), 1);
    for (std::size_t i = shape_.size() - 1; i > 0; --i) s[i - 1] = s[i] * shape_[i];
    return s;
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size())
        throw ShapeError("index arity " + std::to_string(index.size()) + " for tensor of shape " +
                         shape_to_string(shape_));
    std::size_t flat = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= shape_[i])
            throw ShapeError("index out of range for shape " + shape_to_string(shape_));
        flat = flat * shape_[i] + index[i];
    }
    return flat;
}

double& DenseTensor::at(std::initializer_list<std::size_t> index) {
    return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double DenseTensor::at(std::initializer_list<std::size_t> index) const {
    return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

void DenseTensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

DenseTensor transpose(const DenseTensor& mat) {
    if (mat.order() != 2) throw ShapeError("transpose expects a matrix");
    const std::size_t rows = mat.extent(0), cols = mat.extent(1);
    DenseTensor out({cols, rows});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = mat[i * cols + j];
    return out;
}

Vector matvec(const DenseTensor& mat, std::span<const double> x) {
    if (mat.order() != 2) throw ShapeError("matvec expects a matrix");
    const std::size_t rows = mat.extent(0), cols = mat.extent(1);
    if (x.size() != cols)
        throw ShapeError("matvec: matrix " + shape_to_string(mat.shape()) + " against vector of length " +
                         std::to_string(x.size()));
    Vector y(rows, 0.0);
    const double* m = mat.data().data();
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += m[i * cols + j] * x[j];
        y[i] = acc;
    }
    return y;
}

DenseTensor mode_product(const DenseTensor& t, const DenseTensor& mat, std::size_t mode) {
    if (mode >= t.order())
        throw ShapeError("mode " + std::to_string(mode) + " out of range for tensor of order " +
                         std::to_string(t.order()));
    if (mat.order() != 2) throw ShapeError("mode_product expects a matrix operand");
    const std::size_t inner = t.extent(mode);
    if (mat.extent(1) != inner)
        throw ShapeError("mode_product: matrix " + shape_to_string(mat.shape()) +
                         " cannot act on mode of extent " + std::to_string(inner));
    const std::size_t rows = mat.extent(0);

    std::size_t outer = 1, trailing = 1;
    for (std::size_t i = 0; i < mode; ++i) outer *= t.extent(i);
    for (std::size_t i = mode + 1; i < t.order(); ++i) trailing *= t.extent(i);

    Shape out_shape = t.shape();
    out_shape[mode] = rows;
    DenseTensor out(out_shape);
    const double* src = t.data().data();
    const double* m = mat.data().data();
    double* dst = out.data().data();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* block = src + o * inner * trailing;
        double* out_block = dst + o * rows * trailing;
        for (std::size_t r = 0; r < rows; ++r) {
            double* row = out_block + r * trailing;
            for (std::size_t j = 0; j < inner; ++j) {
                const double w = m[r * inner + j];
                const double* in_row = block + j * trailing;
                for (std::size_t k = 0; k < trailing; ++k) row[k] += w * in_row[k];
            }
        }
    }
    return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("max_abs_diff: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("max_abs_diff: shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
    return max_abs_diff(a.data(), b.data());
}

}  // namespace treetensor
