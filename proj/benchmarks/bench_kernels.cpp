#include <benchmark/benchmark.h>

#include "mae/mixed_attention.hpp"
#include "mae/random.hpp"

using namespace mae;

namespace {

struct Inputs {
    Tensor4<float> q, k, v;
};

Inputs make_inputs(std::size_t n, std::size_t heads = 4, std::size_t e = 64) {
    const Dims4 d{1, heads, n, e};
    return {random_uniform_tensor<float>(d, 1), random_uniform_tensor<float>(d, 2),
            random_uniform_tensor<float>(d, 3)};
}

} // namespace

static void BM_DenseCausal(benchmark::State& state) {
    const Inputs in = make_inputs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto out = softmax_attention(in.q, in.k, in.v, true);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DenseCausal)->RangeMultiplier(2)->Range(256, 4096)->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_Windowed(benchmark::State& state) {
    const Inputs in = make_inputs(static_cast<std::size_t>(state.range(0)));
    const WindowConfig cfg{64, 64};
    for (auto _ : state) {
        auto out = windowed_attention(in.q, in.k, in.v, cfg);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Windowed)->RangeMultiplier(2)->Range(256, 8192)->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_LinearCausalRecurrent(benchmark::State& state) {
    const Inputs in = make_inputs(static_cast<std::size_t>(state.range(0)));
    const FeatureMapSpec<float> fmap = FeatureMapSpec<float>::elu_plus_one();
    const Tensor4<float> qp = apply_feature_map(in.q, fmap);
    const Tensor4<float> kp = apply_feature_map(in.k, fmap);
    for (auto _ : state) {
        auto out = causal_linear_recurrent(qp, kp, in.v);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LinearCausalRecurrent)->RangeMultiplier(2)->Range(256, 4096)->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_LinearCausalCumsum(benchmark::State& state) {
    const Inputs in = make_inputs(static_cast<std::size_t>(state.range(0)));
    const FeatureMapSpec<float> fmap = FeatureMapSpec<float>::elu_plus_one();
    const Tensor4<float> qp = apply_feature_map(in.q, fmap);
    const Tensor4<float> kp = apply_feature_map(in.k, fmap);
    for (auto _ : state) {
        auto out = causal_linear_cumsum(qp, kp, in.v);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LinearCausalCumsum)->RangeMultiplier(2)->Range(256, 2048)->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_OuterProductBatch(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const Dims4 d{1, 4, n, 64};
    const Tensor4<float> kp = apply_feature_map(random_uniform_tensor<float>(d, 5),
                                                FeatureMapSpec<float>::elu_plus_one());
    const Tensor4<float> v = random_uniform_tensor<float>(d, 6);
    for (auto _ : state) {
        auto batch = batched_outer_accumulate(kp, v, {0, n});
        benchmark::DoNotOptimize(batch.data.data());
    }
    state.counters["outer_products"] = benchmark::Counter(
        static_cast<double>(4 * n), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_OuterProductBatch)->RangeMultiplier(2)->Range(256, 2048)
    ->Unit(benchmark::kMillisecond);

static void BM_FeatureMapOrf(benchmark::State& state) {
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const Tensor4<float> x = random_uniform_tensor<float>({1, 4, 1024, 64}, 7);
    const FeatureMapSpec<float> fmap = FeatureMapSpec<float>::positive_orf(m, 64, 8);
    for (auto _ : state) {
        auto out = apply_feature_map(x, fmap);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_FeatureMapOrf)->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond);

static void BM_Mixed(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const Inputs in = make_inputs(n, 16, 64);
    const auto cfg = PartitionConfig<float>::from_tau(16, 3.0 / 16.0, WindowConfig{64, 64},
                                                      FeatureMapSpec<float>::elu_plus_one(), true);
    for (auto _ : state) {
        auto out = mixed_attention_forward(in.q, in.k, in.v, cfg);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Mixed)->RangeMultiplier(2)->Range(256, 2048)->Complexity()
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
