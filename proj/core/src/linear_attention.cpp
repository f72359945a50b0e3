#include "mae/linear_attention.hpp"

#include <algorithm>
#include <cmath>

#include "mae/ops.hpp"
#include "mae/parallel.hpp"
#include "mae/random.hpp"

namespace mae {

template <typename T>
FeatureMapSpec<T> FeatureMapSpec<T>::elu_plus_one() {
    return FeatureMapSpec<T>{FeatureMapKind::EluPlusOne, 0, 0, Matrix2<T>()};
}

template <typename T>
FeatureMapSpec<T> FeatureMapSpec<T>::positive_orf(std::size_t m, std::size_t e,
                                                  std::uint64_t seed) {
    return FeatureMapSpec<T>{FeatureMapKind::PositiveOrf, m, seed,
                             gaussian_orthogonal_matrix<T>(m, e, seed)};
}

template <typename T>
void CausalState<T>::consume(const T* kp, const T* v) {
    for (std::size_t r = 0; r < feature_dim; ++r) {
        const T kr = kp[r];
        T* ar = a.data() + r * value_dim;
        for (std::size_t e = 0; e < value_dim; ++e) ar[e] += kr * v[e];
        z[r] += kr;
    }
}

template <typename T>
Tensor4<T> apply_feature_map(const Tensor4<T>& t, const FeatureMapSpec<T>& spec) {
    if (spec.kind == FeatureMapKind::EluPlusOne) {
        return elementwise(t, UnaryMap::EluPlusOne);
    }

    const Dims4& d = t.dims();
    if (spec.matrix.cols() != d.e) {
        throw ShapeError("PositiveOrf matrix is " + std::to_string(spec.matrix.rows()) + "x" +
                         std::to_string(spec.matrix.cols()) + " but input feature dim is " +
                         std::to_string(d.e));
    }
    const std::size_t m = spec.matrix.rows();
    Tensor4<T> out({d.b, d.h, d.n, m});
    const T pre_scale = static_cast<T>(std::pow(static_cast<double>(d.e), -0.25));
    const T inv_sqrt_m = T(1) / std::sqrt(static_cast<T>(m));

    parallel_for(d.b * d.h, [&](std::size_t s) {
        const std::size_t b = s / d.h;
        const std::size_t h = s % d.h;
        std::vector<T> x(d.e);
        for (std::size_t n = 0; n < d.n; ++n) {
            const T* src = t.row(b, h, n);
            T norm_sq = T(0);
            for (std::size_t e = 0; e < d.e; ++e) {
                x[e] = src[e] * pre_scale;
                norm_sq += x[e] * x[e];
            }
            const T half_norm = norm_sq / T(2);
            T* dst = out.row(b, h, n);
            for (std::size_t r = 0; r < m; ++r) {
                const T* w = spec.matrix.row(r);
                T dot = T(0);
                for (std::size_t e = 0; e < d.e; ++e) dot += w[e] * x[e];
                dst[r] = std::exp(dot - half_norm) * inv_sqrt_m;
            }
        }
    });
    verify_finite(out, "apply_feature_map");
    return out;
}

namespace {

template <typename T>
void check_linear_shapes(const Dims4& dq, const Dims4& dk, const Dims4& dv, const char* op) {
    if (dq.b != dk.b || dq.h != dk.h || dq.b != dv.b || dq.h != dv.h) {
        throw ShapeError(std::string(op) + " batch/head mismatch: " + dq.str() + ", " + dk.str() +
                         ", " + dv.str());
    }
    if (dq.e != dk.e) {
        throw ShapeError(std::string(op) + " feature dims differ: " + dq.str() + " vs " +
                         dk.str());
    }
    if (dq.n != dk.n || dk.n != dv.n) {
        throw ShapeError(std::string(op) + " sequence lengths differ: " + dq.str() + ", " +
                         dk.str() + ", " + dv.str());
    }
}

template <typename T>
[[noreturn]] void degenerate_row(const char* op, std::size_t b, std::size_t h, std::size_t n,
                                 T denom) {
    throw DomainError(std::string(op) + ": degenerate normalizer " + std::to_string(denom) +
                      " at (b=" + std::to_string(b) + ", h=" + std::to_string(h) +
                      ", row=" + std::to_string(n) + ")");
}

} // namespace

template <typename T>
Tensor4<T> linear_attention_noncausal(const Tensor4<T>& qp, const Tensor4<T>& kp,
                                      const Tensor4<T>& v) {
    const Dims4& dq = qp.dims();
    const Dims4& dk = kp.dims();
    const Dims4& dv = v.dims();
    check_linear_shapes<T>(dq, dk, dv, "linear_attention_noncausal");

    const std::size_t m = dq.e;
    Tensor4<T> out({dq.b, dq.h, dq.n, dv.e});

    parallel_for(dq.b * dq.h, [&](std::size_t s) {
        const std::size_t b = s / dq.h;
        const std::size_t h = s % dq.h;
        const T* Kp = kp.slice(b, h);
        const T* V = v.slice(b, h);
        const T* Qp = qp.slice(b, h);
        T* O = out.slice(b, h);

        // C = Kp^T V (m x E_v) and z = Kp^T 1, both in one sweep over tokens
        std::vector<T> c(m * dv.e, T(0));
        std::vector<T> z(m, T(0));
        for (std::size_t n = 0; n < dk.n; ++n) {
            const T* kn = Kp + n * m;
            const T* vn = V + n * dv.e;
            for (std::size_t r = 0; r < m; ++r) {
                const T kr = kn[r];
                T* cr = c.data() + r * dv.e;
                for (std::size_t e = 0; e < dv.e; ++e) cr[e] += kr * vn[e];
                z[r] += kr;
            }
        }

        for (std::size_t n = 0; n < dq.n; ++n) {
            const T* qn = Qp + n * m;
            T denom = T(0);
            for (std::size_t r = 0; r < m; ++r) denom += qn[r] * z[r];
            if (std::abs(denom) < static_cast<T>(kDegenerateNormalizer)) {
                degenerate_row("linear_attention_noncausal", b, h, n, denom);
            }
            T* on = O + n * dv.e;
            std::fill(on, on + dv.e, T(0));
            for (std::size_t r = 0; r < m; ++r) {
                const T qr = qn[r];
                const T* cr = c.data() + r * dv.e;
                for (std::size_t e = 0; e < dv.e; ++e) on[e] += qr * cr[e];
            }
            const T inv = T(1) / denom;
            for (std::size_t e = 0; e < dv.e; ++e) on[e] *= inv;
        }
    });
    verify_finite(out, "linear_attention_noncausal");
    return out;
}

template <typename T>
Tensor4<T> causal_linear_recurrent(const Tensor4<T>& qp, const Tensor4<T>& kp,
                                   const Tensor4<T>& v) {
    const Dims4& dq = qp.dims();
    const Dims4& dk = kp.dims();
    const Dims4& dv = v.dims();
    check_linear_shapes<T>(dq, dk, dv, "causal_linear_recurrent");

    const std::size_t m = dq.e;
    Tensor4<T> out({dq.b, dq.h, dq.n, dv.e});

    parallel_for(dq.b * dq.h, [&](std::size_t s) {
        const std::size_t b = s / dq.h;
        const std::size_t h = s % dq.h;
        const T* Qp = qp.slice(b, h);
        const T* Kp = kp.slice(b, h);
        const T* V = v.slice(b, h);
        T* O = out.slice(b, h);

        CausalState<T> state(m, dv.e);
        for (std::size_t n = 0; n < dq.n; ++n) {
            state.consume(Kp + n * m, V + n * dv.e);

            const T* qn = Qp + n * m;
            T denom = T(0);
            for (std::size_t r = 0; r < m; ++r) denom += qn[r] * state.z[r];
            if (std::abs(denom) < static_cast<T>(kDegenerateNormalizer)) {
                degenerate_row("causal_linear_recurrent", b, h, n, denom);
            }
            T* on = O + n * dv.e;
            std::fill(on, on + dv.e, T(0));
            for (std::size_t r = 0; r < m; ++r) {
                const T qr = qn[r];
                const T* ar = state.a.data() + r * dv.e;
                for (std::size_t e = 0; e < dv.e; ++e) on[e] += qr * ar[e];
            }
            const T inv = T(1) / denom;
            for (std::size_t e = 0; e < dv.e; ++e) on[e] *= inv;
        }
    });
    verify_finite(out, "causal_linear_recurrent");
    return out;
}

template <typename T>
Tensor4<T> causal_linear_cumsum(const Tensor4<T>& qp, const Tensor4<T>& kp, const Tensor4<T>& v) {
    const Dims4& dq = qp.dims();
    const Dims4& dk = kp.dims();
    const Dims4& dv = v.dims();
    check_linear_shapes<T>(dq, dk, dv, "causal_linear_cumsum");

    const std::size_t m = dq.e;
    const std::size_t mat = m * dv.e;
    Tensor4<T> out({dq.b, dq.h, dq.n, dv.e});

    parallel_for(dq.b * dq.h, [&](std::size_t s) {
        const std::size_t b = s / dq.h;
        const std::size_t h = s % dq.h;
        const T* Qp = qp.slice(b, h);
        const T* Kp = kp.slice(b, h);
        const T* V = v.slice(b, h);
        T* O = out.slice(b, h);

        // stage 1: all N outer products, materialized
        std::vector<T> g(dq.n * mat);
        for (std::size_t n = 0; n < dq.n; ++n) {
            const T* kn = Kp + n * m;
            const T* vn = V + n * dv.e;
            T* gn = g.data() + n * mat;
            for (std::size_t r = 0; r < m; ++r) {
                const T kr = kn[r];
                for (std::size_t e = 0; e < dv.e; ++e) gn[r * dv.e + e] = kr * vn[e];
            }
        }
        // stage 2: prefix-sum along the sequence, matrices and normalizer rows
        for (std::size_t n = 1; n < dq.n; ++n) {
            const T* prev = g.data() + (n - 1) * mat;
            T* cur = g.data() + n * mat;
            for (std::size_t i = 0; i < mat; ++i) cur[i] += prev[i];
        }
        std::vector<T> zsum(dq.n * m);
        for (std::size_t r = 0; r < m; ++r) zsum[r] = Kp[r];
        for (std::size_t n = 1; n < dq.n; ++n) {
            const T* prev = zsum.data() + (n - 1) * m;
            const T* kn = Kp + n * m;
            T* cur = zsum.data() + n * m;
            for (std::size_t r = 0; r < m; ++r) cur[r] = prev[r] + kn[r];
        }
        // stage 3: contract with Qp and normalize
        for (std::size_t n = 0; n < dq.n; ++n) {
            const T* qn = Qp + n * m;
            const T* zn = zsum.data() + n * m;
            T denom = T(0);
            for (std::size_t r = 0; r < m; ++r) denom += qn[r] * zn[r];
            if (std::abs(denom) < static_cast<T>(kDegenerateNormalizer)) {
                degenerate_row("causal_linear_cumsum", b, h, n, denom);
            }
            const T* gn = g.data() + n * mat;
            T* on = O + n * dv.e;
            std::fill(on, on + dv.e, T(0));
            for (std::size_t r = 0; r < m; ++r) {
                const T qr = qn[r];
                const T* gr = gn + r * dv.e;
                for (std::size_t e = 0; e < dv.e; ++e) on[e] += qr * gr[e];
            }
            const T inv = T(1) / denom;
            for (std::size_t e = 0; e < dv.e; ++e) on[e] *= inv;
        }
    });
    verify_finite(out, "causal_linear_cumsum");
    return out;
}

template <typename T>
Matrix2<T> outer_product_broadcast(std::span<const T> a, std::span<const T> b,
                                   std::size_t vector_width) {
    if (vector_width == 0 || b.size() % vector_width != 0) {
        throw ShapeError("outer_product_broadcast: b length " + std::to_string(b.size()) +
                         " is not a multiple of vector_width " + std::to_string(vector_width));
    }
    Matrix2<T> out(a.size(), b.size());
    const std::size_t rows = a.size();

    std::size_t r = 0;
    for (; r + 8 <= rows; r += 8) {
        // row loop unrolled in blocks of 8
        for (std::size_t u = 0; u < 8; ++u) {
            const T ax = a[r + u]; // broadcast element r+u across the lane
            T* dst = out.row(r + u);
            for (std::size_t w = 0; w < b.size(); w += vector_width) {
                for (std::size_t j = 0; j < vector_width; ++j) dst[w + j] = ax * b[w + j];
            }
        }
    }
    for (; r < rows; ++r) {
        const T ax = a[r];
        T* dst = out.row(r);
        for (std::size_t w = 0; w < b.size(); w += vector_width) {
            for (std::size_t j = 0; j < vector_width; ++j) dst[w + j] = ax * b[w + j];
        }
    }
    return out;
}

template <typename T>
OuterBatch<T> batched_outer_accumulate(const Tensor4<T>& kp, const Tensor4<T>& v, RowRange range) {
    const Dims4& dk = kp.dims();
    const Dims4& dv = v.dims();
    if (dk.b != dv.b || dk.h != dv.h || dk.n != dv.n) {
        throw ShapeError("batched_outer_accumulate Kp/V mismatch: " + dk.str() + " vs " +
                         dv.str());
    }
    if (range.begin > range.end || range.end > dk.n) {
        throw ConfigError("row range [" + std::to_string(range.begin) + ", " +
                          std::to_string(range.end) + ") outside 0.." + std::to_string(dk.n));
    }

    OuterBatch<T> out;
    out.batches = dk.b;
    out.heads = dk.h;
    out.range = range;
    out.feature_dim = dk.e;
    out.value_dim = dv.e;
    out.data.assign(dk.b * dk.h * range.count() * dk.e * dv.e, T(0));
    if (range.count() == 0) return out;

    parallel_for(dk.b * dk.h, [&](std::size_t s) {
        const std::size_t b = s / dk.h;
        const std::size_t h = s % dk.h;
        const T* Kp = kp.slice(b, h);
        const T* V = v.slice(b, h);
        for (std::size_t i = 0; i < range.count(); ++i) {
            const std::size_t n = range.begin + i;
            const Matrix2<T> prod = outer_product_broadcast<T>(
                {Kp + n * dk.e, dk.e}, {V + n * dv.e, dv.e},
                dv.e % 64 == 0 ? 64 : (dv.e % 8 == 0 ? 8 : 1));
            std::span<T> dst = out.matrix(b, h, i);
            std::copy(prod.data(), prod.data() + prod.size(), dst.begin());
        }
    });
    return out;
}

std::vector<RowRange> partition_rows(std::size_t n, std::size_t workers) {
    if (workers == 0) workers = 1;
    std::vector<RowRange> ranges;
    ranges.reserve(workers);
    const std::size_t base = n / workers;
    const std::size_t extra = n % workers;
    std::size_t at = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        ranges.push_back({at, at + len});
        at += len;
    }
    return ranges;
}

void validate_row_cover(std::span<const RowRange> ranges, std::size_t n) {
    std::vector<RowRange> sorted(ranges.begin(), ranges.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const RowRange& a, const RowRange& b) { return a.begin < b.begin; });
    std::size_t at = 0;
    for (const RowRange& r : sorted) {
        if (r.begin > r.end) throw ConfigError("row range with begin > end");
        if (r.begin < at) {
            const std::string msg = "row ranges overlap at " + std::to_string(r.begin);
            if (verify_mode()) throw VerifyError(msg);
            throw ConfigError(msg);
        }
        if (r.begin > at) {
            const std::string msg = "row cover has a gap at " + std::to_string(at);
            if (verify_mode()) throw VerifyError(msg);
            throw ConfigError(msg);
        }
        at = r.end;
    }
    if (at != n) {
        const std::string msg = "row cover stops at " + std::to_string(at) + " of " +
                                std::to_string(n);
        if (verify_mode()) throw VerifyError(msg);
        throw ConfigError(msg);
    }
}

template struct FeatureMapSpec<float>;
template struct FeatureMapSpec<double>;
template struct CausalState<float>;
template struct CausalState<double>;
template Tensor4<float> apply_feature_map<float>(const Tensor4<float>&, const FeatureMapSpec<float>&);
template Tensor4<double> apply_feature_map<double>(const Tensor4<double>&, const FeatureMapSpec<double>&);
template Tensor4<float> linear_attention_noncausal<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> linear_attention_noncausal<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> causal_linear_recurrent<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> causal_linear_recurrent<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> causal_linear_cumsum<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> causal_linear_cumsum<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&);
template Matrix2<float> outer_product_broadcast<float>(std::span<const float>, std::span<const float>, std::size_t);
template Matrix2<double> outer_product_broadcast<double>(std::span<const double>, std::span<const double>, std::size_t);
template OuterBatch<float> batched_outer_accumulate<float>(const Tensor4<float>&, const Tensor4<float>&, RowRange);
template OuterBatch<double> batched_outer_accumulate<double>(const Tensor4<double>&, const Tensor4<double>&, RowRange);

} // namespace mae
