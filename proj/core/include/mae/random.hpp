#pragma once

#include <cstdint>
#include <random>

#include "mae/tensor.hpp"

namespace mae {

// Seeded generator with a fixed Gaussian transform (Box-Muller over
// mt19937_64) so streams do not depend on the standard library's
// normal_distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // N(0, 1)
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

template <typename T>
Tensor4<T> random_uniform_tensor(Dims4 dims, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

template <typename T>
Tensor4<T> random_normal_tensor(Dims4 dims, std::uint64_t seed);

// m x d matrix of norm-resampled orthogonal Gaussian features: rows are drawn
// in blocks of d, each block is a Gram-Schmidt-orthonormalized standard
// Gaussian d x d sample, and each emitted row is rescaled to the norm of an
// independent chi(d) draw. Blocks are mutually independent, so rows from
// different blocks need not be orthogonal. Deterministic given seed.
template <typename T>
Matrix2<T> gaussian_orthogonal_matrix(std::size_t m, std::size_t d, std::uint64_t seed);

extern template Tensor4<float> random_uniform_tensor<float>(Dims4, std::uint64_t, double, double);
extern template Tensor4<double> random_uniform_tensor<double>(Dims4, std::uint64_t, double, double);
extern template Tensor4<float> random_normal_tensor<float>(Dims4, std::uint64_t);
extern template Tensor4<double> random_normal_tensor<double>(Dims4, std::uint64_t);
extern template Matrix2<float> gaussian_orthogonal_matrix<float>(std::size_t, std::size_t, std::uint64_t);
extern template Matrix2<double> gaussian_orthogonal_matrix<double>(std::size_t, std::size_t, std::uint64_t);

} // namespace mae
