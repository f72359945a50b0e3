#include "mae/ops.hpp"

#include <cmath>

#include "mae/parallel.hpp"

namespace mae {

template <typename T>
Tensor4<T> elementwise(const Tensor4<T>& t, UnaryMap f, double c) {
    Tensor4<T> out(t.dims());
    const T* src = t.data();
    T* dst = out.data();
    const std::size_t n = t.size();

    switch (f) {
        case UnaryMap::Exp:
            for (std::size_t i = 0; i < n; ++i) dst[i] = std::exp(src[i]);
            break;
        case UnaryMap::EluPlusOne:
            for (std::size_t i = 0; i < n; ++i) {
                const T x = src[i];
                dst[i] = x >= T(0) ? x + T(1) : std::exp(x);
            }
            break;
        case UnaryMap::Reciprocal:
            for (std::size_t i = 0; i < n; ++i) {
                if (src[i] == T(0)) {
                    throw DomainError("elementwise reciprocal of zero at flat index " +
                                      std::to_string(i));
                }
                dst[i] = T(1) / src[i];
            }
            break;
        case UnaryMap::Scale: {
            const T k = static_cast<T>(c);
            for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] * k;
            break;
        }
    }
    verify_finite(out, "elementwise");
    return out;
}

template <typename T>
Tensor4<T> batched_matmul(const Tensor4<T>& a, const Tensor4<T>& b, bool transpose_b) {
    const Dims4& da = a.dims();
    const Dims4& db = b.dims();
    if (da.b != db.b || da.h != db.h) {
        throw ShapeError("batched_matmul batch/head mismatch: " + da.str() + " vs " + db.str());
    }
    const std::size_t contracted = transpose_b ? db.e : db.n;
    if (da.e != contracted) {
        throw ShapeError("batched_matmul inner dim mismatch: " + da.str() + " vs " + db.str() +
                         (transpose_b ? " (transpose_b)" : ""));
    }
    const std::size_t out_cols = transpose_b ? db.n : db.e;
    Tensor4<T> out({da.b, da.h, da.n, out_cols});

    parallel_for(da.b * da.h, [&](std::size_t s) {
        const std::size_t bi = s / da.h;
        const std::size_t hi = s % da.h;
        const T* A = a.slice(bi, hi);
        const T* B = b.slice(bi, hi);
        T* O = out.slice(bi, hi);

        if (transpose_b) {
            // out[i][j] = A row i . B row j, both contiguous
            for (std::size_t i = 0; i < da.n; ++i) {
                const T* ai = A + i * da.e;
                for (std::size_t j = 0; j < db.n; ++j) {
                    const T* bj = B + j * db.e;
                    T acc = T(0);
                    for (std::size_t e = 0; e < da.e; ++e) acc += ai[e] * bj[e];
                    O[i * out_cols + j] = acc;
                }
            }
        } else {
            // i-k-j order: accumulate across B rows, output row stays hot
            for (std::size_t i = 0; i < da.n; ++i) {
                const T* ai = A + i * da.e;
                T* oi = O + i * out_cols;
                for (std::size_t j = 0; j < out_cols; ++j) oi[j] = T(0);
                for (std::size_t k = 0; k < da.e; ++k) {
                    const T aik = ai[k];
                    const T* bk = B + k * out_cols;
                    for (std::size_t j = 0; j < out_cols; ++j) oi[j] += aik * bk[j];
                }
            }
        }
    });
    verify_finite(out, "batched_matmul");
    return out;
}

template <typename T>
Tensor4<T> row_reduce_sum(const Tensor4<T>& t) {
    const Dims4& d = t.dims();
    Tensor4<T> out({d.b, d.h, d.n, 1});
    parallel_for(d.b * d.h, [&](std::size_t s) {
        const T* src = t.data() + s * d.n * d.e;
        T* dst = out.data() + s * d.n;
        for (std::size_t i = 0; i < d.n; ++i) {
            T acc = T(0);
            const T* row = src + i * d.e;
            for (std::size_t e = 0; e < d.e; ++e) acc += row[e];
            dst[i] = acc;
        }
    });
    verify_finite(out, "row_reduce_sum");
    return out;
}

template <typename T>
Tensor4<T> transpose_heads_tokens(const Tensor4<T>& t) {
    const Dims4& d = t.dims();
    Tensor4<T> out({d.b, d.n, d.h, d.e});
    for (std::size_t b = 0; b < d.b; ++b) {
        for (std::size_t h = 0; h < d.h; ++h) {
            for (std::size_t n = 0; n < d.n; ++n) {
                const T* src = t.row(b, h, n);
                T* dst = out.row(b, n, h);
                for (std::size_t e = 0; e < d.e; ++e) dst[e] = src[e];
            }
        }
    }
    return out;
}

template <typename T>
Tensor4<T> transpose_last2(const Tensor4<T>& t) {
    const Dims4& d = t.dims();
    Tensor4<T> out({d.b, d.h, d.e, d.n});
    for (std::size_t b = 0; b < d.b; ++b) {
        for (std::size_t h = 0; h < d.h; ++h) {
            const T* src = t.slice(b, h);
            T* dst = out.slice(b, h);
            for (std::size_t n = 0; n < d.n; ++n) {
                for (std::size_t e = 0; e < d.e; ++e) dst[e * d.n + n] = src[n * d.e + e];
            }
        }
    }
    return out;
}

template Tensor4<float> elementwise<float>(const Tensor4<float>&, UnaryMap, double);
template Tensor4<double> elementwise<double>(const Tensor4<double>&, UnaryMap, double);
template Tensor4<float> batched_matmul<float>(const Tensor4<float>&, const Tensor4<float>&, bool);
template Tensor4<double> batched_matmul<double>(const Tensor4<double>&, const Tensor4<double>&, bool);
template Tensor4<float> row_reduce_sum<float>(const Tensor4<float>&);
template Tensor4<double> row_reduce_sum<double>(const Tensor4<double>&);
template Tensor4<float> transpose_heads_tokens<float>(const Tensor4<float>&);
template Tensor4<double> transpose_heads_tokens<double>(const Tensor4<double>&);
template Tensor4<float> transpose_last2<float>(const Tensor4<float>&);
template Tensor4<double> transpose_last2<double>(const Tensor4<double>&);

} // namespace mae
