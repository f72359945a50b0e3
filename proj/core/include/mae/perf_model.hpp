#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mae/errors.hpp"

namespace mae {

struct WorkloadSize {
    std::size_t b = 1; // batch
    std::size_t n = 1; // sequence length
    std::size_t h = 1; // total heads
    std::size_t e = 1; // head size
    std::size_t w = 64; // window size for the sparse path

    void validate() const;
};

// PaperSimplified reproduces the stated sparse total 5*B*H0*N*W verbatim.
// Exact keeps the score term's E factor and adds the probs.V product the
// census omits: B*H0*N*W*(2E+3) + 2*B*H0*N*W*E.
enum class FlopsMode { PaperSimplified, Exact };

const char* flops_mode_name(FlopsMode m);
FlopsMode parse_flops_mode(const std::string& s);

// Calibrated throughput of the two execution paths plus the per-unit FLOPs
// coefficients: path 0 (sparse/vector) counts flops_per0 per B*H0*N*W unit of
// work, path 1 (linear/matmul) counts flops_per1 per B*N*(H1*E)^2 unit.
struct PerfProfile {
    double perf0 = 0.0; // FLOP/s, sparse path
    double perf1 = 0.0; // FLOP/s, linear path
    double flops_per0 = 0.0;
    double flops_per1 = 0.0;
    std::string source; // "paper-constants" or "calibrated:<run id>"

    void validate() const;
};

// The published two-engine constants (2.31e12 / 13.37e12 FLOP/s) as a named
// built-in profile for reproducing the partition arithmetic. Never a
// desk-machine default.
PerfProfile gaudi_paper_profile(FlopsMode mode, std::size_t e);

enum class Bottleneck { Path0, Path1, Balanced };
const char* bottleneck_name(Bottleneck b);

struct LatencyEstimate {
    double latency0 = 0.0; // seconds, sparse path
    double latency1 = 0.0; // seconds, linear path
    Bottleneck bottleneck = Bottleneck::Balanced;

    double max_latency() const { return latency0 > latency1 ? latency0 : latency1; }
};

// Linear path: 8*B*N*(H1*E)^2, decomposed as 4BN(H1 E)^2 feature mapping
// plus 2BN(H1 E)^2 for phi(K)^T V plus 2BN(H1 E)^2 for phi(Q) C.
std::uint64_t flops_linear(const WorkloadSize& size, std::size_t h1);

std::uint64_t flops_sparse(const WorkloadSize& size, std::size_t h0, FlopsMode mode);

LatencyEstimate estimate_latency(const WorkloadSize& size, std::size_t h0, std::size_t h1,
                                 const PerfProfile& profile, FlopsMode mode);

struct PartitionResult {
    std::size_t h0 = 0;
    LatencyEstimate estimate;
};

// Exhaustive search over h0 in 0..H for the split minimizing
// max(latency0, latency1); ties break toward smaller h0. The discrete
// realization of "find p' let latency0 = latency1".
PartitionResult optimal_partition(const WorkloadSize& size, const PerfProfile& profile,
                                  FlopsMode mode);

// One calibration sample: which path it exercised, the model FLOPs attached
// to the run, and the measured wall time.
struct PathMeasurement {
    int path = 0; // 0 = sparse, 1 = linear
    double flops = 0.0;
    double seconds = 0.0;
};

// perf per path = total FLOPs / total seconds (the harmonic-mean-consistent
// aggregate). Requires >= 3 measurements per path spanning a >= 4x FLOPs
// range; rejects nonpositive elapsed times.
PerfProfile calibrate(std::span<const PathMeasurement> measurements, const std::string& run_id,
                      FlopsMode mode, std::size_t e);

} // namespace mae
