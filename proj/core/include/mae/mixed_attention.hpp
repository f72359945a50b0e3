#pragma once

#include <optional>

#include "mae/linear_attention.hpp"
#include "mae/reference_attention.hpp"
#include "mae/window_attention.hpp"

namespace mae {

// The head split: the first sparse_heads heads go through windowed attention,
// the remaining linear_heads through feature-map linear attention.
// sparse_heads = round(H * tau) with exact .5 ties rounding toward sparse.
template <typename T>
struct PartitionConfig {
    double tau = 0.0;
    std::size_t sparse_heads = 0; // H0
    std::size_t linear_heads = 0; // H1
    WindowConfig window;
    FeatureMapSpec<T> feature_map = FeatureMapSpec<T>::elu_plus_one();
    bool causal = true;

    static std::size_t heads_from_tau(std::size_t h, double tau);

    static PartitionConfig from_tau(std::size_t h, double tau, WindowConfig window,
                                    FeatureMapSpec<T> feature_map, bool causal);
    static PartitionConfig from_heads(std::size_t h, std::size_t h0, WindowConfig window,
                                      FeatureMapSpec<T> feature_map, bool causal);

    void validate(std::size_t h) const;
};

template <typename T>
struct HeadSplit {
    std::optional<QkvTensors<T>> sparse; // heads 0..H0, empty when H0 == 0
    std::optional<QkvTensors<T>> linear; // heads H0..H, empty when H1 == 0
};

// Copies head range [begin, end) into a fresh tensor.
template <typename T>
Tensor4<T> slice_heads(const Tensor4<T>& t, std::size_t begin, std::size_t end);

template <typename T>
HeadSplit<T> split_heads(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                         const PartitionConfig<T>& cfg);

// Routes the sparse group through windowed attention (causal band, or the
// symmetric band for bidirectional self-attention) and the linear group
// through the matching linear-attention formulation, then reassembles the
// heads in their original order. Output is (B, H, N, E_v) for every tau.
template <typename T>
Tensor4<T> mixed_attention_forward(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                                   const PartitionConfig<T>& cfg);

extern template struct PartitionConfig<float>;
extern template struct PartitionConfig<double>;
extern template Tensor4<float> slice_heads<float>(const Tensor4<float>&, std::size_t, std::size_t);
extern template Tensor4<double> slice_heads<double>(const Tensor4<double>&, std::size_t, std::size_t);
extern template HeadSplit<float> split_heads<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const PartitionConfig<float>&);
extern template HeadSplit<double> split_heads<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const PartitionConfig<double>&);
extern template Tensor4<float> mixed_attention_forward<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const PartitionConfig<float>&);
extern template Tensor4<double> mixed_attention_forward<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const PartitionConfig<double>&);

} // namespace mae
