// SPDX-License-Identifier: Apache-2.0
#include "grnlab/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace grnlab {

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
        throw ShapeError("tensor: buffer of " + std::to_string(data_.size()) + " values does not fit shape " +
                         shape_string(shape_));
    }
}

Tensor Tensor::vector(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor Tensor::diag(std::span<const double> values) {
    const std::size_t n = values.size();
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = values[i];
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("tensor: ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    require_matrix(*this, "rows");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    require_matrix(*this, "cols");
    return shape_[1];
}

double Tensor::item() const {
    if (data_.size() != 1) throw ShapeError("tensor: item() on " + shape_string(shape_));
    return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
        throw ShapeError("tensor: cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

void require_matrix(const Tensor& m, const char* op) {
    if (m.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(m.shape()));
}

void require_square(const Tensor& m, const char* op) {
    require_matrix(m, op);
    if (m.shape()[0] != m.shape()[1]) {
        throw ShapeError(std::string(op) + ": expected a square matrix, got " + shape_string(m.shape()));
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    add_inplace(out, b);
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.values()) v *= s;
    return out;
}

void add_inplace(Tensor& acc, const Tensor& b) {
    require_same_shape(acc, b, "add");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += b[i];
}

void axpy_inplace(Tensor& acc, double alpha, const Tensor& b) {
    require_same_shape(acc, b, "axpy");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += alpha * b[i];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw ShapeError("matmul: inner extents differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = pc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& m) {
    require_matrix(m, "transpose");
    const std::size_t r = m.shape()[0], c = m.shape()[1];
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(j, i) = m(i, j);
    return out;
}

double frobenius_norm_sq(const Tensor& m) {
    double s = 0.0;
    for (double v : m.values()) s += v * v;
    return s;
}

double frobenius_norm(const Tensor& m) { return std::sqrt(frobenius_norm_sq(m)); }

double trace(const Tensor& m) {
    require_square(m, "trace");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
    return s;
}

Tensor diagonal_part(const Tensor& m) {
    require_square(m, "diagonal_part");
    Tensor out(m.shape());
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, i) = m(i, i);
    return out;
}

double max_abs(const Tensor& m) {
    double r = 0.0;
    for (double v : m.values()) {
        const double a = std::abs(v);
        if (std::isnan(a)) return a;
        r = std::max(r, a);
    }
    return r;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        if (std::isnan(d)) return d;
        r = std::max(r, d);
    }
    return r;
}

}  // namespace grnlab
