#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "huruf/errors.hpp"

namespace huruf {

/// Dimensions of a rank-4 activation tensor in (samples, rows, cols, channels)
/// order.
struct Shape4 {
    std::size_t n = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t c = 0;

    std::size_t size() const { return n * h * w * c; }
    bool valid() const { return n >= 1 && h >= 1 && w >= 1 && c >= 1; }
    std::string str() const {
        return "(" + std::to_string(n) + "," + std::to_string(h) + "," + std::to_string(w) + "," +
               std::to_string(c) + ")";
    }

    friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense rank-4 tensor, row-major in (n, h, w, c) order. A default-constructed
/// tensor is empty; every constructed tensor has all four dimensions >= 1.
template <typename T>
class Tensor4 {
public:
    using value_type = T;

    Tensor4() = default;

    explicit Tensor4(Shape4 shape, T fill = T(0)) : shape_(shape) {
        check_shape(shape);
        data_.assign(shape.size(), fill);
    }

    Tensor4(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        check_shape(shape);
        if (data_.size() != shape.size()) {
            throw ShapeError("buffer of " + std::to_string(data_.size()) + " values does not fit shape " +
                             shape.str());
        }
    }

    const Shape4& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::size_t index(std::size_t n, std::size_t i, std::size_t j, std::size_t c) const {
        return ((n * shape_.h + i) * shape_.w + j) * shape_.c + c;
    }
    T& operator()(std::size_t n, std::size_t i, std::size_t j, std::size_t c) { return data_[index(n, i, j, c)]; }
    const T& operator()(std::size_t n, std::size_t i, std::size_t j, std::size_t c) const {
        return data_[index(n, i, j, c)];
    }

    /// Contiguous h*w*c slice of one sample.
    std::span<T> sample(std::size_t n) {
        const std::size_t stride = shape_.h * shape_.w * shape_.c;
        return std::span<T>(data_).subspan(n * stride, stride);
    }
    std::span<const T> sample(std::size_t n) const {
        const std::size_t stride = shape_.h * shape_.w * shape_.c;
        return std::span<const T>(data_).subspan(n * stride, stride);
    }

    friend bool operator==(const Tensor4&, const Tensor4&) = default;

private:
    static void check_shape(const Shape4& s) {
        if (!s.valid()) throw ShapeError("tensor dimensions must all be >= 1, got " + s.str());
    }

    Shape4 shape_{};
    std::vector<T> data_;
};

/// Row-major 2-D matrix used for feature vectors, logits and dense weights.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T(0)) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows * cols) {
            throw ShapeError("buffer of " + std::to_string(data_.size()) + " values does not fit " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return std::span<T>(data_).subspan(r * cols_, cols_); }
    std::span<const T> row(std::size_t r) const { return std::span<const T>(data_).subspan(r * cols_, cols_); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
Tensor4<T> reshape(const Tensor4<T>& t, Shape4 s) {
    if (s.size() != t.size()) {
        throw ShapeError("cannot reshape " + t.shape().str() + " into " + s.str() + ": element counts differ");
    }
    return Tensor4<T>(s, std::vector<T>(t.values().begin(), t.values().end()));
}

/// Swaps rows and columns of every (sample, channel) plane.
template <typename T>
Tensor4<T> transpose_hw(const Tensor4<T>& t) {
    const Shape4 in = t.shape();
    Tensor4<T> out(Shape4{in.n, in.w, in.h, in.c});
    for (std::size_t n = 0; n < in.n; ++n)
        for (std::size_t i = 0; i < in.h; ++i)
            for (std::size_t j = 0; j < in.w; ++j)
                for (std::size_t c = 0; c < in.c; ++c) out(n, j, i, c) = t(n, i, j, c);
    return out;
}

template <typename T>
Tensor4<T> scale(const Tensor4<T>& t, T k) {
    Tensor4<T> out = t;
    for (T& v : out.values()) v *= k;
    return out;
}

}  // namespace huruf
