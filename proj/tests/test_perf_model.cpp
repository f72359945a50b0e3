#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "mae/bench.hpp"
#include "mae/perf_model.hpp"

using namespace mae;

TEST_CASE("flops_linear frozen values") {
    const WorkloadSize size{4, 4096, 16, 64, 64};
    CHECK(flops_linear(size, 0) == 0);
    CHECK(flops_linear({1, 1, 1, 1, 1}, 1) == 8);
    // 8 * 4 * 4096 * (13*64)^2, evaluated independently: 131072 * 692224
    CHECK(flops_linear(size, 13) == 90731184128ull);
    CHECK(flops_linear(size, 13) == 131072ull * 692224ull);
}

TEST_CASE("flops_sparse frozen values in both modes") {
    const WorkloadSize size{4, 4096, 16, 64, 64};
    CHECK(flops_sparse(size, 0, FlopsMode::PaperSimplified) == 0);
    CHECK(flops_sparse(size, 0, FlopsMode::Exact) == 0);
    CHECK(flops_sparse({1, 1, 1, 1, 1}, 1, FlopsMode::PaperSimplified) == 5);

    // paper total: 5 * B*h0*N*W
    const std::uint64_t unit = 4ull * 3 * 4096 * 64; // 3,145,728
    CHECK(flops_sparse(size, 3, FlopsMode::PaperSimplified) == 5 * unit);

    // exact: unit*(2E+3) + 2*unit*E = unit*131 + unit*128 = unit*259
    CHECK(flops_sparse(size, 3, FlopsMode::Exact) == unit * 131 + unit * 128);
    CHECK(flops_sparse(size, 3, FlopsMode::Exact) == 814743552ull);
}

TEST_CASE("estimate_latency limit and frozen cases") {
    const WorkloadSize size{4, 4096, 16, 64, 64};
    const PerfProfile paper = gaudi_paper_profile(FlopsMode::PaperSimplified, 64);

    SUBCASE("h0=0 puts everything on path1") {
        const LatencyEstimate est =
            estimate_latency(size, 0, 16, paper, FlopsMode::PaperSimplified);
        CHECK(est.latency0 == 0.0);
        CHECK(est.bottleneck == Bottleneck::Path1);
    }

    SUBCASE("paper constants, h0=3: regression values") {
        const LatencyEstimate est =
            estimate_latency(size, 3, 13, paper, FlopsMode::PaperSimplified);
        // 5*4*3*4096*64 / 2.31e12 and 8*4*4096*832^2 / 13.37e12
        CHECK(est.latency0 == doctest::Approx(6.8089350649350645e-06).epsilon(1e-12));
        CHECK(est.latency1 == doctest::Approx(6.786176823335826e-03).epsilon(1e-12));
        CHECK(est.bottleneck == Bottleneck::Path1);
    }

    SUBCASE("doubling both perfs halves both latencies") {
        PerfProfile doubled = paper;
        doubled.perf0 *= 2.0;
        doubled.perf1 *= 2.0;
        const LatencyEstimate a = estimate_latency(size, 5, 11, paper, FlopsMode::Exact);
        const LatencyEstimate b = estimate_latency(size, 5, 11, doubled, FlopsMode::Exact);
        CHECK(b.latency0 == doctest::Approx(a.latency0 / 2.0).epsilon(1e-15));
        CHECK(b.latency1 == doctest::Approx(a.latency1 / 2.0).epsilon(1e-15));
        CHECK(b.bottleneck == a.bottleneck);
    }

    SUBCASE("head counts must partition H") {
        CHECK_THROWS_AS(estimate_latency(size, 3, 12, paper, FlopsMode::Exact), ConfigError);
    }

    SUBCASE("near-equal latencies report Balanced") {
        PerfProfile p = paper;
        const std::uint64_t fs = flops_sparse(size, 8, FlopsMode::Exact);
        const std::uint64_t fl = flops_linear(size, 8);
        p.perf0 = static_cast<double>(fs);        // latency0 = 1.0
        p.perf1 = static_cast<double>(fl) / 1.005; // latency1 = 1.005
        const LatencyEstimate est = estimate_latency(size, 8, 8, p, FlopsMode::Exact);
        CHECK(est.bottleneck == Bottleneck::Balanced);
    }
}

TEST_CASE("optimal_partition symmetric crossing lands on H/2") {
    // perf rates chosen so both path latencies equal 1.0 at h0 = H/2
    const WorkloadSize size{2, 512, 8, 32, 64};
    PerfProfile p;
    p.perf0 = static_cast<double>(flops_sparse(size, 4, FlopsMode::Exact));
    p.perf1 = static_cast<double>(flops_linear(size, 4));
    p.flops_per0 = 4.0 * 32 + 3;
    p.flops_per1 = 8.0;
    p.source = "synthetic";
    const PartitionResult res = optimal_partition(size, p, FlopsMode::Exact);
    CHECK(res.h0 == 4);
}

TEST_CASE("optimal_partition with a free sparse path routes everything sparse") {
    const WorkloadSize size{2, 1024, 8, 32, 64};
    PerfProfile p = gaudi_paper_profile(FlopsMode::Exact, 32);
    p.perf0 = 1e30;
    const PartitionResult res = optimal_partition(size, p, FlopsMode::Exact);
    CHECK(res.h0 == size.h);
}

TEST_CASE("optimal_partition equals an independent brute-force argmin") {
    const PerfProfile paper64 = gaudi_paper_profile(FlopsMode::Exact, 64);
    for (std::size_t w : {64, 128, 256}) {
        const WorkloadSize size{4, 4096, 16, 64, w};
        for (FlopsMode mode : {FlopsMode::PaperSimplified, FlopsMode::Exact}) {
            // independent grid loop over h0
            std::size_t best_h0 = 0;
            double best = 1e300;
            for (std::size_t h0 = 0; h0 <= size.h; ++h0) {
                const double l0 = static_cast<double>(flops_sparse(size, h0, mode)) / paper64.perf0;
                const double l1 =
                    static_cast<double>(flops_linear(size, size.h - h0)) / paper64.perf1;
                const double m = l0 > l1 ? l0 : l1;
                if (m < best) {
                    best = m;
                    best_h0 = h0;
                }
            }
            const PartitionResult res = optimal_partition(size, paper64, mode);
            CHECK(res.h0 == best_h0);
            CHECK(res.estimate.max_latency() == doctest::Approx(best).epsilon(1e-15));
        }
    }
}

TEST_CASE("calibrate aggregates as total FLOPs over total seconds") {
    const std::vector<PathMeasurement> ms{
        {0, 1e9, 0.5}, {0, 2e9, 1.0}, {0, 4e9, 2.0},
        {1, 2e9, 0.5}, {1, 4e9, 1.0}, {1, 8e9, 2.0},
    };
    const PerfProfile p = calibrate(ms, "t1", FlopsMode::Exact, 64);
    CHECK(p.perf0 == doctest::Approx(2e9).epsilon(1e-12));
    CHECK(p.perf1 == doctest::Approx(4e9).epsilon(1e-12));
    CHECK(p.source == "calibrated:t1");
    CHECK(p.flops_per0 == 4.0 * 64 + 3);
    CHECK(p.flops_per1 == 8.0);
}

TEST_CASE("calibrate rejects bad measurements") {
    SUBCASE("zero elapsed time") {
        const std::vector<PathMeasurement> ms{
            {0, 1e9, 0.0}, {0, 2e9, 1.0}, {0, 4e9, 2.0},
            {1, 2e9, 0.5}, {1, 4e9, 1.0}, {1, 8e9, 2.0},
        };
        CHECK_THROWS_AS(calibrate(ms, "t", FlopsMode::Exact, 64), CalibrationError);
    }
    SUBCASE("missing path coverage is named") {
        const std::vector<PathMeasurement> ms{{0, 1e9, 0.5}, {0, 2e9, 1.0}, {0, 4e9, 2.0}};
        try {
            calibrate(ms, "t", FlopsMode::Exact, 64);
            FAIL("expected CalibrationError");
        } catch (const CalibrationError& e) {
            CHECK(std::string(e.what()).find("path1") != std::string::npos);
        }
    }
    SUBCASE("narrow FLOPs span is rejected") {
        const std::vector<PathMeasurement> ms{
            {0, 1e9, 0.5}, {0, 1.5e9, 1.0}, {0, 2e9, 2.0},
            {1, 2e9, 0.5}, {1, 4e9, 1.0}, {1, 8e9, 2.0},
        };
        CHECK_THROWS_AS(calibrate(ms, "t", FlopsMode::Exact, 64), CalibrationError);
    }
}

TEST_CASE("measure_kernel sample bookkeeping") {
    BenchRequest req;
    req.kernel = KernelId::Windowed;
    req.size = {1, 128, 2, 16, 64};
    req.repeats = 3;
    req.seed = 5;

    const BenchReport rep = measure_kernel(req);
    CHECK(rep.seconds.size() == 3);
    CHECK(rep.warmup_seconds > 0.0);
    CHECK(rep.flops == flops_sparse(req.size, 2, FlopsMode::Exact));
    CHECK(rep.h0 == 2);
    CHECK(rep.h1 == 0);

    CHECK_THROWS_AS((measure_kernel([&] { auto r = req; r.repeats = 2; return r; }())),
                    ConfigError);
}

TEST_CASE("measure_kernel is deterministic per seed in verify mode") {
    set_verify_mode(true);
    BenchRequest req;
    req.kernel = KernelId::LinearCausalRecurrent;
    req.size = {1, 64, 2, 16, 64};
    req.repeats = 3;
    req.seed = 9;
    const BenchReport a = measure_kernel(req);
    const BenchReport b = measure_kernel(req);
    set_verify_mode(false);
    CHECK(a.checksum == b.checksum);
}

TEST_CASE("measure_kernel refuses work past the memory cap") {
    setenv("MAE_MEM_CAP_BYTES", "100000", 1);
    BenchRequest req;
    req.kernel = KernelId::LinearCausalCumsum;
    req.size = {1, 2048, 4, 64, 64};
    req.repeats = 3;
    try {
        measure_kernel(req);
        FAIL("expected MemoryCapError");
    } catch (const MemoryCapError& e) {
        CHECK(e.required_bytes() > e.cap_bytes());
        CHECK(e.cap_bytes() == 100000);
    }
    unsetenv("MAE_MEM_CAP_BYTES");
    CHECK(memory_cap_bytes() == (4ull << 30));
}

TEST_CASE("kernel_flops attribution") {
    const WorkloadSize size{2, 256, 4, 32, 64};
    CHECK(kernel_flops(KernelId::Mixed, size, FlopsMode::Exact, 1, 3, 32) ==
          flops_sparse(size, 1, FlopsMode::Exact) + flops_linear(size, 3));
    // dense causal triangle at E=32: pairs * (4E+3)
    const std::uint64_t pairs = 256ull * 257 / 2;
    CHECK(kernel_flops(KernelId::DenseCausal, size, FlopsMode::Exact, 0, 0, 32) ==
          2ull * 4 * pairs * 131);
    CHECK(kernel_flops(KernelId::OuterProductBatch, size, FlopsMode::Exact, 0, 4, 48) ==
          2ull * 4 * 256 * 48 * 32);
}

TEST_CASE("to_path_measurements maps kernels onto model paths") {
    BenchReport windowed;
    windowed.kernel = KernelId::Windowed;
    windowed.flops = 100;
    windowed.seconds = {0.5, 0.4, 0.6};
    BenchReport dense;
    dense.kernel = KernelId::DenseCausal;
    dense.flops = 999;
    dense.seconds = {0.1};
    BenchReport lin;
    lin.kernel = KernelId::LinearCausalCumsum;
    lin.flops = 200;
    lin.seconds = {1.0, 0.9, 1.1};

    const std::vector<BenchReport> reports{windowed, dense, lin};
    const std::vector<PathMeasurement> ms = to_path_measurements(reports);
    REQUIRE(ms.size() == 2); // dense is not a calibration kernel
    CHECK(ms[0].path == 0);
    CHECK(ms[0].seconds == 0.4); // min of repeats
    CHECK(ms[1].path == 1);
    CHECK(ms[1].flops == 200.0);
}
