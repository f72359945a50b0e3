#pragma once

#include "mae/tensor.hpp"

namespace mae {

// The x -> Q,K,V projection weights. All three are D_x rows by H*E columns;
// per-head output width is cols/heads.
template <typename T>
struct QkvProjection {
    Matrix2<T> w_q;
    Matrix2<T> w_k;
    Matrix2<T> w_v;

    void validate() const;
};

template <typename T>
struct QkvTensors {
    Tensor4<T> q;
    Tensor4<T> k;
    Tensor4<T> v;
};

// x must be (B, 1, N, D_x). Output tensors are (B, heads, N, cols/heads):
// per-slice product x W, columns split into heads.
template <typename T>
QkvTensors<T> project_qkv(const Tensor4<T>& x, const QkvProjection<T>& proj, std::size_t heads);

// Exact softmax attention, the ground-truth oracle: scores = Q K^T / sqrt(E),
// optional causal restriction (row i sees columns 0..i; masking is done by
// restricting the softmax index range, never by exponentiating -inf), per-row
// max subtraction, probs . V.
template <typename T>
Tensor4<T> softmax_attention(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                             bool causal);

extern template struct QkvProjection<float>;
extern template struct QkvProjection<double>;
extern template QkvTensors<float> project_qkv<float>(const Tensor4<float>&, const QkvProjection<float>&, std::size_t);
extern template QkvTensors<double> project_qkv<double>(const Tensor4<double>&, const QkvProjection<double>&, std::size_t);
extern template Tensor4<float> softmax_attention<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, bool);
extern template Tensor4<double> softmax_attention<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, bool);

} // namespace mae
