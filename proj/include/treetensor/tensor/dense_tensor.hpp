#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace treetensor {

using Shape = std::vector<std::size_t>;
using Vector = std::vector<double>;

/// Raised when operand extents do not agree with what an operation expects.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string shape_to_string(const Shape& shape);
std::size_t shape_volume(const Shape& shape);

/// Dense N-way array of doubles stored in row-major order.
///
/// The shape is never empty and every extent is at least one; a scalar is
/// represented with shape {1}. Contraction routines take tensors by const
/// reference and return fresh values.
class DenseTensor {
public:
    DenseTensor();
    explicit DenseTensor(Shape shape);
    DenseTensor(Shape shape, std::vector<double> data);

    static DenseTensor vector(std::vector<double> values);
    static DenseTensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static DenseTensor identity(std::size_t n);

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] std::size_t order() const { return shape_.size(); }
    [[nodiscard]] std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] std::span<double> data() { return data_; }
    [[nodiscard]] const std::vector<double>& values() const { return data_; }

    [[nodiscard]] Shape strides() const;
    [[nodiscard]] std::size_t offset(std::span<const std::size_t> index) const;

    double& at(std::initializer_list<std::size_t> index);
    [[nodiscard]] double at(std::initializer_list<std::size_t> index) const;
    double& at(std::span<const std::size_t> index) { return data_[offset(index)]; }
    [[nodiscard]] double at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    void fill(double value);

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Matrix transpose of an order-2 tensor.
DenseTensor transpose(const DenseTensor& mat);

/// y = mat * x for an order-2 tensor `mat`.
Vector matvec(const DenseTensor& mat, std::span<const double> x);

/// Mode-n product: contracts mode `mode` of `t` against the columns of `mat`,
/// replacing that extent with the row count of `mat`.
DenseTensor mode_product(const DenseTensor& t, const DenseTensor& mat, std::size_t mode);

/// Largest absolute elementwise difference; shapes must match.
double max_abs_diff(const DenseTensor& a, const DenseTensor& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace treetensor
