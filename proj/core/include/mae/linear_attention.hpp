#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mae/tensor.hpp"

namespace mae {

// Normalizers smaller than this are reported as degenerate rows instead of
// dividing through to Inf. Unreachable for strictly positive feature maps.
inline constexpr double kDegenerateNormalizer = 1e-30;

enum class FeatureMapKind { EluPlusOne, PositiveOrf };

// Selects and parameterizes the kernel feature map phi. EluPlusOne maps
// pointwise and keeps the feature dim. PositiveOrf projects each row x
// through m orthogonal Gaussian features: the row is pre-scaled by E^(-1/4)
// (splitting the 1/sqrt(E) softmax temperature between queries and keys),
// then phi(x)[r] = exp(w_r.x - |x|^2/2) / sqrt(m).
template <typename T>
struct FeatureMapSpec {
    FeatureMapKind kind = FeatureMapKind::EluPlusOne;
    std::size_t num_features = 0; // m, PositiveOrf only
    std::uint64_t seed = 0;
    Matrix2<T> matrix;            // m x E, PositiveOrf only

    static FeatureMapSpec elu_plus_one();
    static FeatureMapSpec positive_orf(std::size_t m, std::size_t e, std::uint64_t seed);
};

// Running sums of the causal recurrence after consuming i tokens:
// a = sum_{j<=i} phi(K_j) (x) V_j and z = sum_{j<=i} phi(K_j).
template <typename T>
struct CausalState {
    std::size_t feature_dim = 0;
    std::size_t value_dim = 0;
    std::vector<T> a; // feature_dim x value_dim, row-major
    std::vector<T> z; // feature_dim

    CausalState(std::size_t features, std::size_t values)
        : feature_dim(features), value_dim(values), a(features * values, T(0)), z(features, T(0)) {}

    void consume(const T* kp, const T* v);
};

template <typename T>
Tensor4<T> apply_feature_map(const Tensor4<T>& t, const FeatureMapSpec<T>& spec);

// phi(Q) (phi(K)^T V) with row normalization; never materializes the N x N
// attention matrix.
template <typename T>
Tensor4<T> linear_attention_noncausal(const Tensor4<T>& qp, const Tensor4<T>& kp,
                                      const Tensor4<T>& v);

// Causal recurrence: per slice, tokens are consumed in order while a
// CausalState accumulates; H_i = (Qp_i^T A) / (Qp_i . Z). O(m * E_v) state.
template <typename T>
Tensor4<T> causal_linear_recurrent(const Tensor4<T>& qp, const Tensor4<T>& kp,
                                   const Tensor4<T>& v);

// Batched formulation: every token's outer product Kp_i (x) V_i is
// materialized, both it and Kp are prefix-summed along the sequence, then
// contracted with Qp. Deliberately memory-heavy (O(N * m * E_v) per slice);
// the baseline whose cost motivates mapping outer products onto the vector
// path.
template <typename T>
Tensor4<T> causal_linear_cumsum(const Tensor4<T>& qp, const Tensor4<T>& kp, const Tensor4<T>& v);

// Rank-1 product out[r][:] = a[r] * b[:], organized like the SIMD kernel:
// a[r] is broadcast across a lane of vector_width entries of b, the row loop
// is unrolled in blocks of 8. b length must be a multiple of vector_width.
// Exact: each output element is a single multiplication.
template <typename T>
Matrix2<T> outer_product_broadcast(std::span<const T> a, std::span<const T> b,
                                   std::size_t vector_width = 64);

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t count() const { return end - begin; }
};

// One outer product per row of the range, for every (batch, head) slice.
// data holds (B, H, end-begin) matrices of feature_dim x value_dim.
template <typename T>
struct OuterBatch {
    std::size_t batches = 0;
    std::size_t heads = 0;
    RowRange range;
    std::size_t feature_dim = 0;
    std::size_t value_dim = 0;
    std::vector<T> data;

    std::size_t matrix_count() const { return batches * heads * range.count(); }
    std::span<const T> matrix(std::size_t b, std::size_t h, std::size_t i) const {
        const std::size_t sz = feature_dim * value_dim;
        return {data.data() + ((b * heads + h) * range.count() + i) * sz, sz};
    }
    std::span<T> matrix(std::size_t b, std::size_t h, std::size_t i) {
        const std::size_t sz = feature_dim * value_dim;
        return {data.data() + ((b * heads + h) * range.count() + i) * sz, sz};
    }
};

// Computes Kp_n (x) V_n for every n in row_range. Ranges handed to parallel
// workers must form a disjoint cover of 0..N; validate_row_cover enforces
// that in verify mode.
template <typename T>
OuterBatch<T> batched_outer_accumulate(const Tensor4<T>& kp, const Tensor4<T>& v, RowRange range);

// Splits 0..n into `workers` contiguous ranges (some possibly empty).
std::vector<RowRange> partition_rows(std::size_t n, std::size_t workers);

// Throws VerifyError (verify mode) or ConfigError if ranges overlap or fail
// to cover 0..n exactly.
void validate_row_cover(std::span<const RowRange> ranges, std::size_t n);

extern template struct FeatureMapSpec<float>;
extern template struct FeatureMapSpec<double>;
extern template struct CausalState<float>;
extern template struct CausalState<double>;
extern template Tensor4<float> apply_feature_map<float>(const Tensor4<float>&, const FeatureMapSpec<float>&);
extern template Tensor4<double> apply_feature_map<double>(const Tensor4<double>&, const FeatureMapSpec<double>&);
extern template Tensor4<float> linear_attention_noncausal<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&);
extern template Tensor4<double> linear_attention_noncausal<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&);
extern template Tensor4<float> causal_linear_recurrent<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&);
extern template Tensor4<double> causal_linear_recurrent<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&);
extern template Tensor4<float> causal_linear_cumsum<float>(const Tensor4<float>&, const Tensor4<float>&, const Tensor4<float>&);
extern template Tensor4<double> causal_linear_cumsum<double>(const Tensor4<double>&, const Tensor4<double>&, const Tensor4<double>&);
extern template Matrix2<float> outer_product_broadcast<float>(std::span<const float>, std::span<const float>, std::size_t);
extern template Matrix2<double> outer_product_broadcast<double>(std::span<const double>, std::span<const double>, std::size_t);
extern template OuterBatch<float> batched_outer_accumulate<float>(const Tensor4<float>&, const Tensor4<float>&, RowRange);
extern template OuterBatch<double> batched_outer_accumulate<double>(const Tensor4<double>&, const Tensor4<double>&, RowRange);

} // namespace mae
