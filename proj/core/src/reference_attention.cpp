#include "mae/reference_attention.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mae/parallel.hpp"

namespace mae {

template <typename T>
void QkvProjection<T>::validate() const {
    if (w_q.rows() != w_k.rows() || w_q.rows() != w_v.rows() ||
        w_q.cols() != w_k.cols() || w_q.cols() != w_v.cols()) {
        throw ShapeError("QkvProjection weights disagree: W_Q " + std::to_string(w_q.rows()) +
                         "x" + std::to_string(w_q.cols()) + ", W_K " + std::to_string(w_k.rows()) +
                         "x" + std::to_string(w_k.cols()) + ", W_V " + std::to_string(w_v.rows()) +
                         "x" + std::to_string(w_v.cols()));
    }
}

namespace {

// x_slice (N x D) times W (D x C), columns regrouped into heads of width C/heads.
template <typename T>
void project_one(const Tensor4<T>& x, const Matrix2<T>& w, std::size_t heads, Tensor4<T>& out) {
    const Dims4& dx = x.dims();
    const std::size_t e_out = w.cols() / heads;
    std::vector<T> prod(dx.n * w.cols());

    for (std::size_t b = 0; b < dx.b; ++b) {
        const T* xs = x.slice(b, 0);
        for (std::size_t i = 0; i < dx.n; ++i) {
            T* pi = prod.data() + i * w.cols();
            std::fill(pi, pi + w.cols(), T(0));
            const T* xi = xs + i * dx.e;
            for (std::size_t k = 0; k < dx.e; ++k) {
                const T xik = xi[k];
                const T* wk = w.row(k);
                for (std::size_t c = 0; c < w.cols(); ++c) pi[c] += xik * wk[c];
            }
        }
        for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < dx.n; ++i) {
                T* dst = out.row(b, h, i);
                const T* src = prod.data() + i * w.cols() + h * e_out;
                for (std::size_t e = 0; e < e_out; ++e) dst[e] = src[e];
            }
        }
    }
}

} // namespace

template <typename T>
QkvTensors<T> project_qkv(const Tensor4<T>& x, const QkvProjection<T>& proj, std::size_t heads) {
    proj.validate();
    const Dims4& dx = x.dims();
    if (dx.h != 1) {
        throw ShapeError("project_qkv input must have H=1, got " + dx.str());
    }
    if (proj.w_q.rows() != dx.e) {
        throw ShapeError("project_qkv: x feature dim " + std::to_string(dx.e) +
                         " != weight rows " + std::to_string(proj.w_q.rows()));
    }
    if (heads == 0 || proj.w_q.cols() % heads != 0) {
        throw ShapeError("project_qkv: weight cols " + std::to_string(proj.w_q.cols()) +
                         " not divisible by heads " + std::to_string(heads));
    }
    const std::size_t e_out = proj.w_q.cols() / heads;
    QkvTensors<T> out{Tensor4<T>({dx.b, heads, dx.n, e_out}),
                      Tensor4<T>({dx.b, heads, dx.n, e_out}),
                      Tensor4<T>({dx.b, heads, dx.n, e_out})};
    project_one(x, proj.w_q, heads, out.q);
    project_one(x, proj.w_k, heads, out.k);
    project_one(x, proj.w_v, heads, out.v);
    verify_finite(out.q, "project_qkv");
    verify_finite(out.k, "project_qkv");
    verify_finite(out.v, "project_qkv");
    return out;
}

template <typename T>
Tensor4<T> softmax_attention(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                             bool causal) {
    const Dims4& dq = q.dims();
    const Dims4& dk = k.dims();
    const Dims4& dv = v.dims();
    if (dq.b != dk.b || dq.h != dk.h || dq.b != dv.b || dq.h != dv.h || dk.n != dv.n) {
        throw ShapeError("softmax_attention Q/K/V mismatch: " + dq.str() + ", " + dk.str() +
                         ", " + dv.str());
    }
    if (dq.e != dk.e) {
        throw ShapeError("softmax_attention Q/K feature dims differ: " + dq.str() + " vs " +
                         dk.str());
    }
    if (causal && dq.n != dk.n) {
        throw ShapeError("causal softmax_attention needs equal query/key counts: " + dq.str() +
                         " vs " + dk.str());
    }

    const T inv_sqrt_e = T(1) / std::sqrt(static_cast<T>(dq.e));
    Tensor4<T> out({dq.b, dq.h, dq.n, dv.e});

    parallel_for(dq.b * dq.h, [&](std::size_t s) {
        const std::size_t b = s / dq.h;
        const std::size_t h = s % dq.h;
        const T* Q = q.slice(b, h);
        const T* K = k.slice(b, h);
        const T* V = v.slice(b, h);
        T* O = out.slice(b, h);
        std::vector<T> p(dk.n);

        for (std::size_t i = 0; i < dq.n; ++i) {
            const std::size_t jmax = causal ? i + 1 : dk.n;
            const T* qi = Q + i * dq.e;

            T row_max = -std::numeric_limits<T>::infinity();
            for (std::size_t j = 0; j < jmax; ++j) {
                const T* kj = K + j * dk.e;
                T acc = T(0);
                for (std::size_t e = 0; e < dq.e; ++e) acc += qi[e] * kj[e];
                p[j] = acc * inv_sqrt_e;
                row_max = std::max(row_max, p[j]);
            }
            T denom = T(0);
            for (std::size_t j = 0; j < jmax; ++j) {
                p[j] = std::exp(p[j] - row_max);
                denom += p[j];
            }
            const T r = T(1) / denom;

            T* oi = O + i * dv.e;
            std::fill(oi, oi + dv.e, T(0));
            for (std::size_t j = 0; j < jmax; ++j) {
                const T w = p[j] * r;
                const T* vj = V + j * dv.e;
                for (std::size_t e = 0; e < dv.e; ++e) oi[e] += w * vj[e];
            }
        }
    });
    verify_finite(out, "softmax_attention");
    return out;
}

template struct QkvProjection<float>;
template struct QkvProjection<double>;
template QkvTensors<float> project_qkv<float>(const Tensor4<float>&, const QkvProjection<float>&, std::size_t);
template QkvTensors<double> project_qkv<double>(const Tensor4<double>&, const QkvProjection<double>&, std::size_t);
template Tensor4<float> softmax_attention<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, bool);
template Tensor4<double> softmax_attention<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, bool);

} // namespace mae
