#include "mae/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace mae {

namespace {
std::atomic<bool> g_verify{false};
std::atomic<unsigned> g_threads{0};
} // namespace

void set_verify_mode(bool enabled) { g_verify.store(enabled, std::memory_order_relaxed); }
bool verify_mode() { return g_verify.load(std::memory_order_relaxed); }

void set_thread_count(unsigned n) { g_threads.store(n, std::memory_order_relaxed); }
unsigned thread_count() { return g_threads.load(std::memory_order_relaxed); }

unsigned effective_threads() {
    unsigned n = thread_count();
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
    }
    return n;
}

std::string Dims4::str() const {
    std::ostringstream os;
    os << "(" << b << "," << h << "," << n << "," << e << ")";
    return os.str();
}

template <typename T>
Tensor4<T>::Tensor4(Dims4 dims) : dims_(dims), data_(dims.count(), T(0)) {
    if (dims.b < 1 || dims.h < 1 || dims.n < 1 || dims.e < 1) {
        throw ShapeError("Tensor4 dims must all be >= 1, got " + dims.str());
    }
}

template <typename T>
Tensor4<T>::Tensor4(Dims4 dims, std::vector<T> data) : dims_(dims), data_(std::move(data)) {
    if (dims.b < 1 || dims.h < 1 || dims.n < 1 || dims.e < 1) {
        throw ShapeError("Tensor4 dims must all be >= 1, got " + dims.str());
    }
    if (data_.size() != dims.count()) {
        throw ShapeError("Tensor4 data length " + std::to_string(data_.size()) +
                         " does not match dims " + dims.str());
    }
}

template <typename T>
bool Tensor4<T>::all_finite() const {
    for (const T& v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template <typename T>
Matrix2<T>::Matrix2(std::size_t rows, std::size_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw ShapeError("Matrix2 data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

template <typename T>
Matrix2<T> Matrix2<T>::identity(std::size_t n) {
    Matrix2<T> m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = T(1);
    return m;
}

template <typename T>
void verify_finite(const Tensor4<T>& t, const char* op_name) {
    if (!verify_mode()) return;
    if (!t.all_finite()) {
        throw VerifyError(std::string(op_name) + " produced a non-finite value, dims " +
                          t.dims().str());
    }
}

template class Tensor4<float>;
template class Tensor4<double>;
template class Matrix2<float>;
template class Matrix2<double>;
template void verify_finite<float>(const Tensor4<float>&, const char*);
template void verify_finite<double>(const Tensor4<double>&, const char*);

} // namespace mae
