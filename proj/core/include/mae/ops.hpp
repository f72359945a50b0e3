#pragma once

#include "mae/tensor.hpp"

namespace mae {

// Pointwise maps used by the attention kernels. EluPlusOne is x+1 for x >= 0
// and exp(x) for x < 0 (alpha = 1). Scale multiplies by the constant c.
enum class UnaryMap { Exp, EluPlusOne, Reciprocal, Scale };

template <typename T>
Tensor4<T> elementwise(const Tensor4<T>& t, UnaryMap f, double c = 1.0);

// Per-(batch, head) matrix product. With transpose_b the slices of b are used
// transposed: out[i][j] = sum_e a[i][e] * b[j][e]. Inner accumulation is
// sequential, parallelism is across slices only.
template <typename T>
Tensor4<T> batched_matmul(const Tensor4<T>& a, const Tensor4<T>& b, bool transpose_b);

// Collapses the last dim: out[b,h,n,0] = sum_e t[b,h,n,e].
template <typename T>
Tensor4<T> row_reduce_sum(const Tensor4<T>& t);

// Layout converters. swap of axes 1 and 2: a tensor holding (B,N,H,E) data
// becomes the library-native head-major (B,H,N,E) and vice versa.
template <typename T>
Tensor4<T> transpose_heads_tokens(const Tensor4<T>& t);

// (B,H,N,E) -> (B,H,E,N); handy for expressing K^T V through batched_matmul.
template <typename T>
Tensor4<T> transpose_last2(const Tensor4<T>& t);

extern template Tensor4<float> elementwise<float>(const Tensor4<float>&, UnaryMap, double);
extern template Tensor4<double> elementwise<double>(const Tensor4<double>&, UnaryMap, double);
extern template Tensor4<float> batched_matmul<float>(const Tensor4<float>&, const Tensor4<float>&, bool);
extern template Tensor4<double> batched_matmul<double>(const Tensor4<double>&, const Tensor4<double>&, bool);
extern template Tensor4<float> row_reduce_sum<float>(const Tensor4<float>&);
extern template Tensor4<double> row_reduce_sum<double>(const Tensor4<double>&);
extern template Tensor4<float> transpose_heads_tokens<float>(const Tensor4<float>&);
extern template Tensor4<double> transpose_heads_tokens<double>(const Tensor4<double>&);
extern template Tensor4<float> transpose_last2<float>(const Tensor4<float>&);
extern template Tensor4<double> transpose_last2<double>(const Tensor4<double>&);

} // namespace mae
