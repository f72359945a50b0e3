#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mae/common.hpp"
#include "mae/errors.hpp"

namespace mae {

struct Dims4 {
    std::size_t b = 1; // batch
    std::size_t h = 1; // heads
    std::size_t n = 1; // sequence
    std::size_t e = 1; // per-head feature dim

    std::size_t count() const { return b * h * n * e; }
    bool operator==(const Dims4&) const = default;
    std::string str() const;
};

// Dense rank-4 array in row-major (B,H,N,E) order. Head-major layout keeps a
// head-range slice of one batch contiguous, which is what the tau head split
// wants. The carrier for Q/K/V, feature-mapped tensors and outputs.
template <typename T>
class Tensor4 {
public:
    Tensor4() : dims_{1, 1, 1, 1}, data_(1, T(0)) {}
    explicit Tensor4(Dims4 dims);
    Tensor4(Dims4 dims, std::vector<T> data);

    static Tensor4 zeros(Dims4 dims) { return Tensor4(dims); }

    const Dims4& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    // Contiguous (N,E) slice of one (batch, head) pair.
    T* slice(std::size_t b, std::size_t h) {
        return data_.data() + (b * dims_.h + h) * dims_.n * dims_.e;
    }
    const T* slice(std::size_t b, std::size_t h) const {
        return data_.data() + (b * dims_.h + h) * dims_.n * dims_.e;
    }

    // Contiguous E-length row of one token.
    T* row(std::size_t b, std::size_t h, std::size_t n) {
        return slice(b, h) + n * dims_.e;
    }
    const T* row(std::size_t b, std::size_t h, std::size_t n) const {
        return slice(b, h) + n * dims_.e;
    }

    T& at(std::size_t b, std::size_t h, std::size_t n, std::size_t e) {
        return data_[((b * dims_.h + h) * dims_.n + n) * dims_.e + e];
    }
    const T& at(std::size_t b, std::size_t h, std::size_t n, std::size_t e) const {
        return data_[((b * dims_.h + h) * dims_.n + n) * dims_.e + e];
    }

    std::span<const T> flat() const { return {data_.data(), data_.size()}; }
    std::span<T> flat() { return {data_.data(), data_.size()}; }

    bool all_finite() const;

    static constexpr Precision precision() {
        return sizeof(T) == 4 ? Precision::F32 : Precision::F64;
    }

private:
    Dims4 dims_;
    std::vector<T> data_;
};

// Row-major 2-D matrix; houses projection weights and random-feature blocks.
template <typename T>
class Matrix2 {
public:
    Matrix2() : rows_(0), cols_(0) {}
    Matrix2(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
    Matrix2(std::size_t rows, std::size_t cols, std::vector<T> data);

    static Matrix2 identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T* row(std::size_t r) { return data_.data() + r * cols_; }
    const T* row(std::size_t r) const { return data_.data() + r * cols_; }
    T& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<T> data_;
};

// Throws VerifyError if verify mode is on and t contains a NaN/Inf.
template <typename T>
void verify_finite(const Tensor4<T>& t, const char* op_name);

extern template class Tensor4<float>;
extern template class Tensor4<double>;
extern template class Matrix2<float>;
extern template class Matrix2<double>;
extern template void verify_finite<float>(const Tensor4<float>&, const char*);
extern template void verify_finite<double>(const Tensor4<double>&, const char*);

} // namespace mae
