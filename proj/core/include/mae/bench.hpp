#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mae/common.hpp"
#include "mae/linear_attention.hpp"
#include "mae/perf_model.hpp"

namespace mae {

enum class KernelId {
    DenseCausal,
    Windowed,
    LinearNoncausal,
    LinearCausalRecurrent,
    LinearCausalCumsum,
    OuterProductBatch,
    Mixed,
};

const char* kernel_name(KernelId k);
KernelId parse_kernel(const std::string& name);

// Which latency-model path a kernel calibrates: 0 = sparse, 1 = linear,
// -1 = neither (dense baseline, mixed).
int kernel_path(KernelId k);

struct BenchRequest {
    KernelId kernel = KernelId::Windowed;
    WorkloadSize size;
    FlopsMode mode = FlopsMode::Exact;
    std::size_t repeats = 3;
    std::uint64_t seed = 0;
    Precision precision = Precision::F32;

    // Mixed / linear parameters
    double tau = 0.25;
    FeatureMapKind feature_map = FeatureMapKind::EluPlusOne;
    std::size_t num_features = 0; // m for PositiveOrf; 0 means E
    bool causal = true;
};

struct BenchReport {
    KernelId kernel = KernelId::Windowed;
    FlopsMode mode = FlopsMode::Exact;
    WorkloadSize size;
    std::size_t h0 = 0;
    std::size_t h1 = 0;
    std::vector<double> seconds; // one entry per repeat, warm-up excluded
    double warmup_seconds = 0.0;
    std::uint64_t flops = 0;
    unsigned threads = 1;
    bool multithreaded = false; // flagged when timing ran with > 1 worker
    std::uint64_t seed = 0;
    Precision precision = Precision::F32;
    std::uint64_t checksum = 0; // output checksum; repeat-invariant
    std::string run_id;

    double min_seconds() const;
    double median_seconds() const;
    double mean_seconds() const;
};

// Model FLOPs attached to one kernel invocation at the given size.
// DenseCausal counts the exact causal triangle; Windowed and the linear
// kernels use the two-path formulas; OuterProductBatch counts one multiply
// per output element.
std::uint64_t kernel_flops(KernelId kernel, const WorkloadSize& size, FlopsMode mode,
                           std::size_t h0, std::size_t h1, std::size_t feature_dim);

// MAE_MEM_CAP_BYTES env var, default 4 GiB.
std::uint64_t memory_cap_bytes();

// Working-set estimate used for the memory refusal check.
std::uint64_t estimate_bytes(const BenchRequest& req);

// Seeded inputs, one discarded warm-up run, `repeats` timed runs on the
// monotonic clock. Throws MemoryCapError when the estimate exceeds the cap;
// in verify mode the per-repeat output checksums must agree.
BenchReport measure_kernel(const BenchRequest& req);

// CSV schema for bench rows (schema version first).
extern const char* kCsvHeader;

void write_csv_row(std::ostream& os, const BenchReport& report, std::size_t repeat_index);
void write_csv(std::ostream& os, const BenchReport& report); // all repeats

// Calibration view of a set of reports: one PathMeasurement per report using
// min-of-repeats, reports from non-path kernels dropped.
std::vector<PathMeasurement> to_path_measurements(std::span<const BenchReport> reports);

std::uint64_t fnv1a64_bytes(const void* data, std::size_t len);

} // namespace mae
