#include "mae/window_attention.hpp"

#include <algorithm>
#include <cmath>

#include "mae/parallel.hpp"

namespace mae {

void WindowConfig::validate() const {
    if (vector_width != 8 && vector_width != 16 && vector_width != 32 && vector_width != 64) {
        throw ConfigError("vector_width must be one of {8,16,32,64}, got " +
                          std::to_string(vector_width));
    }
    if (window == 0 || window % vector_width != 0) {
        throw ConfigError("window " + std::to_string(window) +
                          " must be a positive multiple of vector_width " +
                          std::to_string(vector_width));
    }
    if (window > kWindowScratchCap) {
        throw ConfigError("window " + std::to_string(window) + " exceeds the scratch cap of " +
                          std::to_string(kWindowScratchCap) + " scalars");
    }
}

namespace {

template <typename T>
void check_band_finite(const BandedScores<T>& s, const char* op_name) {
    if (!verify_mode()) return;
    for (std::size_t b = 0; b < s.dims.b; ++b) {
        for (std::size_t h = 0; h < s.dims.h; ++h) {
            for (std::size_t n = 0; n < s.dims.n; ++n) {
                const T* row = s.row(b, h, n);
                for (std::size_t j = s.live_lo(n); j < s.live_hi(n); ++j) {
                    if (!std::isfinite(row[j])) {
                        throw VerifyError(std::string(op_name) + " produced non-finite band entry");
                    }
                }
            }
        }
    }
}

} // namespace

template <typename T>
BandedScores<T> banded_scores(const Tensor4<T>& q, const Tensor4<T>& k, const WindowConfig& cfg,
                              BandKind kind) {
    cfg.validate();
    const Dims4& dq = q.dims();
    const Dims4& dk = k.dims();
    if (dq != dk) {
        throw ShapeError("banded_scores Q/K mismatch: " + dq.str() + " vs " + dk.str());
    }

    BandedScores<T> out;
    out.dims = {dq.b, dq.h, dq.n, cfg.window};
    out.kind = kind;
    out.data.assign(out.dims.count(), T(0));
    const T inv_sqrt_e = T(1) / std::sqrt(static_cast<T>(dq.e));

    parallel_for(dq.b * dq.h, [&](std::size_t s) {
        const std::size_t b = s / dq.h;
        const std::size_t h = s % dq.h;
        const T* Q = q.slice(b, h);
        const T* K = k.slice(b, h);
        for (std::size_t n = 0; n < dq.n; ++n) {
            const T* qn = Q + n * dq.e;
            T* row = out.row(b, h, n);
            const std::ptrdiff_t start = out.band_start(n);
            for (std::size_t j = out.live_lo(n); j < out.live_hi(n); ++j) {
                const T* kj = K + static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(j)) * dq.e;
                T acc = T(0);
                for (std::size_t e = 0; e < dq.e; ++e) acc += qn[e] * kj[e];
                row[j] = acc * inv_sqrt_e;
            }
        }
    });
    check_band_finite(out, "banded_scores");
    return out;
}

template <typename T>
BandedScores<T> windowed_softmax(const BandedScores<T>& s, std::size_t vector_width) {
    if (vector_width == 0 || s.window() % vector_width != 0) {
        throw ConfigError("windowed_softmax vector_width " + std::to_string(vector_width) +
                          " does not divide window " + std::to_string(s.window()));
    }
    BandedScores<T> out;
    out.dims = s.dims;
    out.kind = s.kind;
    out.data.assign(s.data.size(), T(0));

    parallel_for(s.dims.b * s.dims.h, [&](std::size_t sl) {
        const std::size_t b = sl / s.dims.h;
        const std::size_t h = sl % s.dims.h;
        // exp_x scratch: the whole window's exponents, W/vector_width chunks
        T scratch[kWindowScratchCap];

        for (std::size_t n = 0; n < s.dims.n; ++n) {
            const T* row = s.row(b, h, n);
            T* dst = out.row(b, h, n);
            const std::size_t lo = s.live_lo(n);
            const std::size_t hi = s.live_hi(n);

            // pass 1: exponentiate chunk by chunk into scratch, accumulate sum
            T sum = T(0);
            std::size_t idx = 0;
            for (std::size_t c = lo; c < hi; c += vector_width) {
                const std::size_t ce = std::min(hi, c + vector_width);
                for (std::size_t j = c; j < ce; ++j) {
                    const T y = std::exp(row[j]);
                    scratch[idx++] = y;
                    sum += y;
                }
            }
            // pass 2: multiply by 1/(sum of exponents)
            const T r = T(1) / sum;
            idx = 0;
            for (std::size_t j = lo; j < hi; ++j) dst[j] = scratch[idx++] * r;
        }
    });
    check_band_finite(out, "windowed_softmax");
    return out;
}

template <typename T>
Tensor4<T> banded_weighted_sum(const BandedScores<T>& p, const Tensor4<T>& v) {
    const Dims4& dv = v.dims();
    if (p.dims.b != dv.b || p.dims.h != dv.h || p.dims.n != dv.n) {
        throw ShapeError("banded_weighted_sum band/V mismatch: " + p.dims.str() + " vs " +
                         dv.str());
    }
    Tensor4<T> out({dv.b, dv.h, p.dims.n, dv.e});

    parallel_for(dv.b * dv.h, [&](std::size_t s) {
        const std::size_t b = s / dv.h;
        const std::size_t h = s % dv.h;
        const T* V = v.slice(b, h);
        T* O = out.slice(b, h);
        for (std::size_t n = 0; n < p.dims.n; ++n) {
            const T* row = p.row(b, h, n);
            T* on = O + n * dv.e;
            std::fill(on, on + dv.e, T(0));
            const std::ptrdiff_t start = p.band_start(n);
            for (std::size_t j = p.live_lo(n); j < p.live_hi(n); ++j) {
                const T w = row[j];
                const T* vj = V + static_cast<std::size_t>(start + static_cast<std::ptrdiff_t>(j)) * dv.e;
                for (std::size_t e = 0; e < dv.e; ++e) on[e] += w * vj[e];
            }
        }
    });
    verify_finite(out, "banded_weighted_sum");
    return out;
}

template <typename T>
Tensor4<T> windowed_attention(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                              const WindowConfig& cfg) {
    const BandedScores<T> scores = banded_scores(q, k, cfg, BandKind::CausalLeft);
    const BandedScores<T> probs = windowed_softmax(scores, cfg.vector_width);
    return banded_weighted_sum(probs, v);
}

template <typename T>
Tensor4<T> windowed_attention_symmetric(const Tensor4<T>& q, const Tensor4<T>& k,
                                        const Tensor4<T>& v, const WindowConfig& cfg) {
    const BandedScores<T> scores = banded_scores(q, k, cfg, BandKind::Symmetric);
    const BandedScores<T> probs = windowed_softmax(scores, cfg.vector_width);
    return banded_weighted_sum(probs, v);
}

template struct BandedScores<float>;
template struct BandedScores<double>;
template BandedScores<float> banded_scores<float>(const Tensor4<float>&, const Tensor4<float>&, const WindowConfig&, BandKind);
template BandedScores<double> banded_scores<double>(const Tensor4<double>&, const Tensor4<double>&, const WindowConfig&, BandKind);
template BandedScores<float> windowed_softmax<float>(const BandedScores<float>&, std::size_t);
template BandedScores<double> windowed_softmax<double>(const BandedScores<double>&, std::size_t);
template Tensor4<float> banded_weighted_sum<float>(const BandedScores<float>&, const Tensor4<float>&);
template Tensor4<double> banded_weighted_sum<double>(const BandedScores<double>&, const Tensor4<double>&);
template Tensor4<float> windowed_attention<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const WindowConfig&);
template Tensor4<double> windowed_attention<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const WindowConfig&);
template Tensor4<float> windowed_attention_symmetric<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const WindowConfig&);
template Tensor4<double> windowed_attention_symmetric<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const WindowConfig&);

} // namespace mae
