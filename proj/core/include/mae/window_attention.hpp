#pragma once

#include <cstddef>
#include <vector>

#include "mae/tensor.hpp"

namespace mae {

// Hard cap on the per-row exponent scratch buffer, in scalars. Mirrors an
// 80 KB vector-local-memory budget at f32.
inline constexpr std::size_t kWindowScratchCap = 4096;

struct WindowConfig {
    std::size_t window = 64;       // tokens attended per query, query included
    std::size_t vector_width = 64; // SIMD lane count the kernel is organized around

    void validate() const;
};

// Band geometry. CausalLeft: query n attends keys n-W+1..n. Symmetric: keys
// n-W/2..n+W/2-1 (the bidirectional window used for self-attention).
enum class BandKind { CausalLeft, Symmetric };

// Scores (or probabilities) of each query against its window of keys, stored
// as a dense (B,H,N,W) band. Row n column j maps to key band_start(n)+j;
// positions outside [0,N) are sentinel entries, represented by the live range
// [live_lo(n), live_hi(n)) rather than by payload values. Sentinel slots hold
// zero and are never read.
template <typename T>
struct BandedScores {
    Dims4 dims;     // e field holds W
    BandKind kind = BandKind::CausalLeft;
    std::vector<T> data;

    std::size_t window() const { return dims.e; }

    std::ptrdiff_t band_start(std::size_t n) const {
        return kind == BandKind::CausalLeft
                   ? static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(dims.e) + 1
                   : static_cast<std::ptrdiff_t>(n) - static_cast<std::ptrdiff_t>(dims.e / 2);
    }
    std::size_t live_lo(std::size_t n) const {
        const std::ptrdiff_t s = band_start(n);
        return s < 0 ? static_cast<std::size_t>(-s) : 0;
    }
    std::size_t live_hi(std::size_t n) const {
        const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(dims.n) - band_start(n);
        return std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(dims.e), hi);
    }
    std::size_t live_count(std::size_t n) const { return live_hi(n) - live_lo(n); }

    T* row(std::size_t b, std::size_t h, std::size_t n) {
        return data.data() + ((b * dims.h + h) * dims.n + n) * dims.e;
    }
    const T* row(std::size_t b, std::size_t h, std::size_t n) const {
        return data.data() + ((b * dims.h + h) * dims.n + n) * dims.e;
    }
};

// out[b,h,n,j] = Q[n] . K[band_start(n)+j] / sqrt(E) over live j.
template <typename T>
BandedScores<T> banded_scores(const Tensor4<T>& q, const Tensor4<T>& k, const WindowConfig& cfg,
                              BandKind kind = BandKind::CausalLeft);

// Streaming windowed softmax: per row, exponents are staged chunk by chunk
// into a scratch buffer of at most W/vector_width chunks, summed, then scaled
// by the reciprocal of the sum. No max subtraction, matching the kernel this
// models. Sentinels stay sentinel.
template <typename T>
BandedScores<T> windowed_softmax(const BandedScores<T>& s, std::size_t vector_width = 64);

// out[n] = sum over live j of p[n,j] * V[band_start(n)+j].
template <typename T>
Tensor4<T> banded_weighted_sum(const BandedScores<T>& p, const Tensor4<T>& v);

// Composition of the three stages above with a causal band.
template <typename T>
Tensor4<T> windowed_attention(const Tensor4<T>& q, const Tensor4<T>& k, const Tensor4<T>& v,
                              const WindowConfig& cfg);

// Same pipeline with the symmetric (bidirectional) band.
template <typename T>
Tensor4<T> windowed_attention_symmetric(const Tensor4<T>& q, const Tensor4<T>& k,
                                        const Tensor4<T>& v, const WindowConfig& cfg);

extern template struct BandedScores<float>;
extern template struct BandedScores<double>;
extern template BandedScores<float> banded_scores<float>(const Tensor4<float>&, const Tensor4<float>&, const WindowConfig&, BandKind);
extern template BandedScores<double> banded_scores<double>(const Tensor4<double>&, const Tensor4<double>&, const WindowConfig&, BandKind);
extern template BandedScores<float> windowed_softmax<float>(const BandedScores<float>&, std::size_t);
extern template BandedScores<double> windowed_softmax<double>(const BandedScores<double>&, std::size_t);
extern template Tensor4<float> banded_weighted_sum<float>(const BandedScores<float>&, const Tensor4<float>&);
extern template Tensor4<double> banded_weighted_sum<double>(const BandedScores<double>&, const Tensor4<double>&);
extern template Tensor4<float> windowed_attention<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const WindowConfig&);
extern template Tensor4<double> windowed_attention<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const WindowConfig&);
extern template Tensor4<float> windowed_attention_symmetric<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&, const WindowConfig&);
extern template Tensor4<double> windowed_attention_symmetric<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&, const WindowConfig&);

} // namespace mae
