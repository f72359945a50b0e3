#include "mae/mixed_attention.hpp"

#include <cmath>

namespace mae {

template <typename T>
std::size_t PartitionConfig<T>::heads_from_tau(std::size_t h, double tau) {
    // round(H * tau), exact .5 toward sparse
    return static_cast<std::size_t>(std::floor(static_cast<double>(h) * tau + 0.5));
}

template <typename T>
PartitionConfig<T> PartitionConfig<T>::from_tau(std::size_t h, double tau, WindowConfig window,
                                                FeatureMapSpec<T> feature_map, bool causal) {
    if (tau < 0.0 || tau > 1.0) {
        throw ConfigError("tau must lie in [0,1], got " + std::to_string(tau));
    }
    PartitionConfig<T> cfg;
    cfg.tau = tau;
    cfg.sparse_heads = heads_from_tau(h, tau);
    cfg.linear_heads = h - cfg.sparse_heads;
    cfg.window = window;
    cfg.feature_map = std::move(feature_map);
    cfg.causal = causal;
    cfg.validate(h);
    return cfg;
}

template <typename T>
PartitionConfig<T> PartitionConfig<T>::from_heads(std::size_t h, std::size_t h0,
                                                  WindowConfig window,
                                                  FeatureMapSpec<T> feature_map, bool causal) {
    if (h0 > h) {
        throw ConfigError("sparse head count " + std::to_string(h0) + " exceeds H = " +
                          std::to_string(h));
    }
    PartitionConfig<T> cfg;
    cfg.tau = h == 0 ? 0.0 : static_cast<double>(h0) / static_cast<double>(h);
    cfg.sparse_heads = h0;
    cfg.linear_heads = h - h0;
    cfg.window = window;
    cfg.feature_map = std::move(feature_map);
    cfg.causal = causal;
    cfg.validate(h);
    return cfg;
}

template <typename T>
void PartitionConfig<T>::validate(std::size_t h) const {
    if (sparse_heads + linear_heads != h) {
        throw ConfigError("head split " + std::to_string(sparse_heads) + "+" +
                          std::to_string(linear_heads) + " != H = " + std::to_string(h));
    }
    if (sparse_heads > 0) window.validate();
}

template <typename T>
Tensor4<T> slice_heads(const Tensor4<T>& t, std::size_t begin, std::size_t end) {
    const Dims4& d = t.dims();
    if (begin >= end || end > d.h) {
        throw ShapeError("head slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside tensor with H = " + std::to_string(d.h));
    }
    Tensor4<T> out({d.b, end - begin, d.n, d.e});
    const std::size_t slice_len = d.n * d.e;
    for (std::size_t b = 0; b < d.b; ++b) {
        for (std::size_t h = begin; h < end; ++h) {
            const T* src = t.slice(b, h);
            T* dst = out.slice(b, h - begin);
            std::copy(src, src + slice_len, dst);
        }
    }
    return out;
}

template <typename T>
HeadSplit<T> split_heads(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                         const PartitionConfig<T>& cfg) {
    const std::size_t h = q.dims().h;
    if (k.dims().h != h || v.dims().h != h) {
        throw ShapeError("split_heads Q/K/V head counts differ: " + q.dims().str() + ", " +
                         k.dims().str() + ", " + v.dims().str());
    }
    cfg.validate(h);

    HeadSplit<T> out;
    if (cfg.sparse_heads > 0) {
        out.sparse = QkvTensors<T>{slice_heads(q, 0, cfg.sparse_heads),
                                   slice_heads(k, 0, cfg.sparse_heads),
                                   slice_heads(v, 0, cfg.sparse_heads)};
    }
    if (cfg.linear_heads > 0) {
        out.linear = QkvTensors<T>{slice_heads(q, cfg.sparse_heads, h),
                                   slice_heads(k, cfg.sparse_heads, h),
                                   slice_heads(v, cfg.sparse_heads, h)};
    }
    return out;
}

namespace {

template <typename T>
void paste_heads(const Tensor4<T>& group, std::size_t dst_begin, Tensor4<T>& out) {
    const Dims4& dg = group.dims();
    const std::size_t slice_len = dg.n * dg.e;
    for (std::size_t b = 0; b < dg.b; ++b) {
        for (std::size_t h = 0; h < dg.h; ++h) {
            const T* src = group.slice(b, h);
            T* dst = out.slice(b, dst_begin + h);
            std::copy(src, src + slice_len, dst);
        }
    }
}

} // namespace

template <typename T>
Tensor4<T> mixed_attention_forward(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                                   const PartitionConfig<T>& cfg) {
    const Dims4& dq = q.dims();
    const HeadSplit<T> groups = split_heads(q, k, v, cfg);
    Tensor4<T> out({dq.b, dq.h, dq.n, v.dims().e});

    if (groups.sparse) {
        const QkvTensors<T>& g = *groups.sparse;
        const Tensor4<T> res = cfg.causal
                                   ? windowed_attention(g.q, g.k, g.v, cfg.window)
                                   : windowed_attention_symmetric(g.q, g.k, g.v, cfg.window);
        paste_heads(res, 0, out);
    }
    if (groups.linear) {
        const QkvTensors<T>& g = *groups.linear;
        const Tensor4<T> qp = apply_feature_map(g.q, cfg.feature_map);
        const Tensor4<T> kp = apply_feature_map(g.k, cfg.feature_map);
        const Tensor4<T> res = cfg.causal ? causal_linear_recurrent(qp, kp, g.v)
                                          : linear_attention_noncausal(qp, kp, g.v);
        paste_heads(res, cfg.sparse_heads, out);
    }
    return out;
}

template struct PartitionConfig<float>;
template struct PartitionConfig<double>;
template Tensor4<float> slice_heads<float>(const Tensor4<float>&, std::size_t, std::size_t);
template Tensor4<double> slice_heads<double>(const Tensor4<double>&, std::size_t, std::size_t);
template HeadSplit<float> split_heads<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const PartitionConfig<float>&);
template HeadSplit<double> split_heads<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const PartitionConfig<double>&);
template Tensor4<float> mixed_attention_forward<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const PartitionConfig<float>&);
template Tensor4<double> mixed_attention_forward<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const PartitionConfig<double>&);

} // namespace mae
