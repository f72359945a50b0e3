#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mae/io.hpp"
#include "mae/ops.hpp"
#include "mae/random.hpp"

#include "oracles.hpp"

using namespace mae;

TEST_CASE("Tensor4 rejects inconsistent construction") {
    CHECK_THROWS_AS(Tensor4<float>({0, 1, 1, 1}), ShapeError);
    CHECK_THROWS_AS(Tensor4<float>({1, 2, 3, 4}, std::vector<float>(5)), ShapeError);
    const Tensor4<float> t({2, 3, 4, 5});
    CHECK(t.size() == 2 * 3 * 4 * 5);
}

TEST_CASE("batched_matmul identity cases") {
    // a = per-slice identity -> returns b
    Tensor4<double> eye({1, 2, 3, 3});
    for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t i = 0; i < 3; ++i) eye.at(0, h, i, i) = 1.0;
    const Tensor4<double> b = random_uniform_tensor<double>({1, 2, 3, 4}, 11);
    CHECK(oracles::max_abs_diff(batched_matmul(eye, b, false), b) == 0.0);

    // 1x1x2x2: a = [[1,2],[3,4]], b = I -> a
    Tensor4<double> a({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor4<double> i2({1, 1, 2, 2}, {1, 0, 0, 1});
    CHECK(oracles::max_abs_diff(batched_matmul(a, i2, false), a) == 0.0);
}

TEST_CASE("batched_matmul matches the triple-loop oracle") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Tensor4<float> a = random_uniform_tensor<float>({2, 2, 8, 4}, seed);
        const Tensor4<float> bt = random_uniform_tensor<float>({2, 2, 6, 4}, seed + 50);
        const Tensor4<float> bn = random_uniform_tensor<float>({2, 2, 4, 6}, seed + 51);
        CHECK(oracles::max_rel_diff(batched_matmul(a, bt, true),
                                    oracles::naive_matmul(a, bt, true)) < 1e-6);
        CHECK(oracles::max_rel_diff(batched_matmul(a, bn, false),
                                    oracles::naive_matmul(a, bn, false)) < 1e-6);

        const Tensor4<double> ad = random_uniform_tensor<double>({2, 2, 8, 4}, seed);
        const Tensor4<double> bd = random_uniform_tensor<double>({2, 2, 6, 4}, seed + 50);
        CHECK(oracles::max_rel_diff(batched_matmul(ad, bd, true),
                                    oracles::naive_matmul(ad, bd, true)) < 1e-12);
    }
}

TEST_CASE("batched_matmul names both shapes on mismatch") {
    const Tensor4<float> a = random_uniform_tensor<float>({1, 1, 2, 3}, 0);
    const Tensor4<float> b = random_uniform_tensor<float>({1, 1, 2, 4}, 1);
    try {
        batched_matmul(a, b, true);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(1,1,2,3)") != std::string::npos);
        CHECK(msg.find("(1,1,2,4)") != std::string::npos);
    }
}

TEST_CASE("elementwise elu_plus_one branch values") {
    Tensor4<double> t({1, 1, 1, 3}, {0.0, 1.0, -20.0});
    const Tensor4<double> out = elementwise(t, UnaryMap::EluPlusOne);
    CHECK(out.at(0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(out.at(0, 0, 0, 1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(out.at(0, 0, 0, 2) == doctest::Approx(std::exp(-20.0)).epsilon(1e-12));
    CHECK(out.at(0, 0, 0, 2) == doctest::Approx(2.061e-9).epsilon(1e-3));
}

TEST_CASE("elementwise reciprocal guards zero") {
    Tensor4<float> ok({1, 1, 1, 2}, {2.0f, -4.0f});
    const Tensor4<float> r = elementwise(ok, UnaryMap::Reciprocal);
    CHECK(r.at(0, 0, 0, 0) == 0.5f);
    CHECK(r.at(0, 0, 0, 1) == -0.25f);

    Tensor4<float> bad({1, 1, 1, 2}, {1.0f, 0.0f});
    CHECK_THROWS_AS(elementwise(bad, UnaryMap::Reciprocal), DomainError);
}

TEST_CASE("elementwise scale and exp") {
    const Tensor4<double> t = random_uniform_tensor<double>({1, 2, 4, 8}, 3);
    const Tensor4<double> s = elementwise(t, UnaryMap::Scale, -2.5);
    const Tensor4<double> x = elementwise(t, UnaryMap::Exp);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(s.data()[i] == t.data()[i] * -2.5);
        CHECK(x.data()[i] == std::exp(t.data()[i]));
    }
}

TEST_CASE("row_reduce_sum") {
    Tensor4<double> ones({1, 1, 2, 64});
    for (double& v : ones.flat()) v = 1.0;
    const Tensor4<double> s = row_reduce_sum(ones);
    CHECK(s.dims() == Dims4{1, 1, 2, 1});
    CHECK(s.at(0, 0, 0, 0) == 64.0);

    const Tensor4<double> single = random_uniform_tensor<double>({2, 1, 3, 1}, 4);
    CHECK(oracles::max_abs_diff(row_reduce_sum(single), single) == 0.0);

    // sequential scalar accumulation is the contract: exact match in f64
    const Tensor4<double> t = random_uniform_tensor<double>({2, 2, 5, 7}, 5);
    const Tensor4<double> got = row_reduce_sum(t);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t h = 0; h < 2; ++h)
            for (std::size_t n = 0; n < 5; ++n) {
                double acc = 0.0;
                for (std::size_t e = 0; e < 7; ++e) acc += t.at(b, h, n, e);
                CHECK(got.at(b, h, n, 0) == acc);
            }
}

TEST_CASE("gaussian_orthogonal_matrix block structure") {
    // m = d: one block, W W^T diagonal
    const Matrix2<double> w = gaussian_orthogonal_matrix<double>(4, 4, 42);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < 4; ++c) dot += w.at(i, c) * w.at(j, c);
            if (i != j) CHECK(std::abs(dot) < 1e-6);
        }

    // determinism
    const Matrix2<double> w2 = gaussian_orthogonal_matrix<double>(4, 4, 42);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w.data()[i] == w2.data()[i]);

    // m = 8, d = 4: rows 0-3 and 4-7 orthogonal within their blocks
    const Matrix2<double> big = gaussian_orthogonal_matrix<double>(8, 4, 7);
    for (std::size_t block = 0; block < 2; ++block)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < 4; ++c)
                    dot += big.at(block * 4 + i, c) * big.at(block * 4 + j, c);
                CHECK(std::abs(dot) < 1e-6);
            }
}

TEST_CASE("gaussian_orthogonal_matrix row norms follow chi(d)") {
    const std::size_t d = 16;
    double total = 0.0;
    for (std::uint64_t s = 0; s < 400; ++s) {
        const Matrix2<double> w = gaussian_orthogonal_matrix<double>(d, d, 1000 + s);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) total += w.at(r, c) * w.at(r, c);
        }
    }
    const double mean_sq = total / (400.0 * d);
    CHECK(mean_sq == doctest::Approx(static_cast<double>(d)).epsilon(0.10));
}

TEST_CASE("gaussian_orthogonal_matrix partial tail block") {
    const Matrix2<float> w = gaussian_orthogonal_matrix<float>(10, 4, 3);
    CHECK(w.rows() == 10);
    CHECK(w.cols() == 4);
}

TEST_CASE("transpose utilities round-trip") {
    const Tensor4<float> t = random_uniform_tensor<float>({2, 3, 5, 7}, 9);
    const Tensor4<float> swapped = transpose_heads_tokens(t);
    CHECK(swapped.dims() == Dims4{2, 5, 3, 7});
    CHECK(oracles::max_abs_diff(transpose_heads_tokens(swapped), t) == 0.0);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t h = 0; h < 3; ++h)
            for (std::size_t n = 0; n < 5; ++n)
                for (std::size_t e = 0; e < 7; ++e)
                    CHECK(swapped.at(b, n, h, e) == t.at(b, h, n, e));

    const Tensor4<float> tl = transpose_last2(t);
    CHECK(tl.dims() == Dims4{2, 3, 7, 5});
    for (std::size_t n = 0; n < 5; ++n)
        for (std::size_t e = 0; e < 7; ++e) CHECK(tl.at(1, 2, e, n) == t.at(1, 2, n, e));
}

TEST_CASE("verify mode flags non-finite results") {
    set_verify_mode(true);
    Tensor4<double> t({1, 1, 1, 2}, {1e308, 1e308});
    CHECK_THROWS_AS(elementwise(t, UnaryMap::Scale, 10.0), VerifyError);
    set_verify_mode(false);
    CHECK_NOTHROW(elementwise(t, UnaryMap::Scale, 10.0));
}

TEST_CASE("thread count does not change results") {
    const Tensor4<float> a = random_uniform_tensor<float>({2, 4, 16, 8}, 21);
    const Tensor4<float> b = random_uniform_tensor<float>({2, 4, 16, 8}, 22);
    set_thread_count(1);
    const Tensor4<float> serial = batched_matmul(a, b, true);
    set_thread_count(4);
    const Tensor4<float> parallel = batched_matmul(a, b, true);
    set_thread_count(0);
    CHECK(oracles::max_abs_diff(serial, parallel) == 0.0);
}
