#include "mae/random.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace mae {

double Rng::uniform() {
    // 53-bit mantissa from the top bits of one 64-bit draw.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

template <typename T>
Tensor4<T> random_uniform_tensor(Dims4 dims, std::uint64_t seed, double lo, double hi) {
    Tensor4<T> t(dims);
    Rng rng(seed);
    for (T& v : t.flat()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

template <typename T>
Tensor4<T> random_normal_tensor(Dims4 dims, std::uint64_t seed) {
    Tensor4<T> t(dims);
    Rng rng(seed);
    for (T& v : t.flat()) v = static_cast<T>(rng.normal());
    return t;
}

namespace {

// Modified Gram-Schmidt over the rows of a d x d block, in double regardless
// of the target precision. Rows that collapse under projection (probability
// zero for Gaussian draws) are redrawn.
void orthonormalize_block(std::vector<double>& block, std::size_t d, Rng& rng) {
    for (std::size_t i = 0; i < d; ++i) {
        double* ri = block.data() + i * d;
        for (;;) {
            for (std::size_t j = 0; j < i; ++j) {
                const double* rj = block.data() + j * d;
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += ri[c] * rj[c];
                for (std::size_t c = 0; c < d; ++c) ri[c] -= dot * rj[c];
            }
            double norm_sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) norm_sq += ri[c] * ri[c];
            if (norm_sq > 1e-24) {
                const double inv = 1.0 / std::sqrt(norm_sq);
                for (std::size_t c = 0; c < d; ++c) ri[c] *= inv;
                break;
            }
            for (std::size_t c = 0; c < d; ++c) ri[c] = rng.normal();
        }
    }
}

double chi_draw(std::size_t d, Rng& rng) {
    double sum_sq = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        const double g = rng.normal();
        sum_sq += g * g;
    }
    return std::sqrt(sum_sq);
}

} // namespace

template <typename T>
Matrix2<T> gaussian_orthogonal_matrix(std::size_t m, std::size_t d, std::uint64_t seed) {
    if (m < 1 || d < 1) {
        throw ShapeError("gaussian_orthogonal_matrix needs m >= 1 and d >= 1, got m=" +
                         std::to_string(m) + " d=" + std::to_string(d));
    }
    Matrix2<T> out(m, d);
    Rng rng(seed);
    std::vector<double> block(d * d);

    std::size_t emitted = 0;
    while (emitted < m) {
        for (double& v : block) v = rng.normal();
        orthonormalize_block(block, d, rng);
        const std::size_t take = std::min(d, m - emitted);
        for (std::size_t r = 0; r < take; ++r) {
            const double scale = chi_draw(d, rng);
            T* dst = out.row(emitted + r);
            const double* src = block.data() + r * d;
            for (std::size_t c = 0; c < d; ++c) dst[c] = static_cast<T>(scale * src[c]);
        }
        emitted += take;
    }
    return out;
}

template Tensor4<float> random_uniform_tensor<float>(Dims4, std::uint64_t, double, double);
template Tensor4<double> random_uniform_tensor<double>(Dims4, std::uint64_t, double, double);
template Tensor4<float> random_normal_tensor<float>(Dims4, std::uint64_t);
template Tensor4<double> random_normal_tensor<double>(Dims4, std::uint64_t);
template Matrix2<float> gaussian_orthogonal_matrix<float>(std::size_t, std::size_t, std::uint64_t);
template Matrix2<double> gaussian_orthogonal_matrix<double>(std::size_t, std::size_t, std::uint64_t);

} // namespace mae
