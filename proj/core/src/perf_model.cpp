#include "mae/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mae {

void WorkloadSize::validate() const {
    if (b < 1 || n < 1 || h < 1 || e < 1 || w < 1) {
        throw ConfigError("workload dims must all be >= 1");
    }
}

const char* flops_mode_name(FlopsMode m) {
    return m == FlopsMode::PaperSimplified ? "paper" : "exact";
}

FlopsMode parse_flops_mode(const std::string& s) {
    if (s == "paper") return FlopsMode::PaperSimplified;
    if (s == "exact") return FlopsMode::Exact;
    throw ConfigError("unknown FLOPs mode '" + s + "' (expected paper|exact)");
}

void PerfProfile::validate() const {
    if (!(perf0 > 0.0) || !(perf1 > 0.0)) {
        throw ConfigError("perf rates must be positive, got perf0=" + std::to_string(perf0) +
                          " perf1=" + std::to_string(perf1));
    }
}

PerfProfile gaudi_paper_profile(FlopsMode mode, std::size_t e) {
    PerfProfile p;
    p.perf0 = 2.31e12;  // vector path
    p.perf1 = 13.37e12; // matmul path
    p.flops_per0 = mode == FlopsMode::PaperSimplified ? 5.0 : 4.0 * static_cast<double>(e) + 3.0;
    p.flops_per1 = 8.0;
    p.source = "paper-constants";
    return p;
}

const char* bottleneck_name(Bottleneck b) {
    switch (b) {
        case Bottleneck::Path0: return "path0";
        case Bottleneck::Path1: return "path1";
        default: return "balanced";
    }
}

std::uint64_t flops_linear(const WorkloadSize& size, std::size_t h1) {
    const std::uint64_t he = static_cast<std::uint64_t>(h1) * size.e;
    return 8ull * size.b * size.n * he * he;
}

std::uint64_t flops_sparse(const WorkloadSize& size, std::size_t h0, FlopsMode mode) {
    const std::uint64_t unit =
        static_cast<std::uint64_t>(size.b) * h0 * size.n * size.w;
    if (mode == FlopsMode::PaperSimplified) return 5ull * unit;
    // scores (2E), windowed softmax (3), probs.V (2E)
    return unit * (2ull * size.e + 3ull) + 2ull * unit * size.e;
}

LatencyEstimate estimate_latency(const WorkloadSize& size, std::size_t h0, std::size_t h1,
                                 const PerfProfile& profile, FlopsMode mode) {
    size.validate();
    profile.validate();
    if (h0 + h1 != size.h) {
        throw ConfigError("h0 + h1 = " + std::to_string(h0 + h1) + " != H = " +
                          std::to_string(size.h));
    }
    LatencyEstimate est;
    est.latency0 = static_cast<double>(flops_sparse(size, h0, mode)) / profile.perf0;
    est.latency1 = static_cast<double>(flops_linear(size, h1)) / profile.perf1;

    const double hi = std::max(est.latency0, est.latency1);
    if (hi == 0.0 || std::abs(est.latency0 - est.latency1) <= 0.01 * hi) {
        est.bottleneck = Bottleneck::Balanced;
    } else {
        est.bottleneck = est.latency0 > est.latency1 ? Bottleneck::Path0 : Bottleneck::Path1;
    }
    return est;
}

PartitionResult optimal_partition(const WorkloadSize& size, const PerfProfile& profile,
                                  FlopsMode mode) {
    size.validate();
    PartitionResult best;
    double best_max = std::numeric_limits<double>::infinity();
    for (std::size_t h0 = 0; h0 <= size.h; ++h0) {
        const LatencyEstimate est = estimate_latency(size, h0, size.h - h0, profile, mode);
        if (est.max_latency() < best_max) {
            best_max = est.max_latency();
            best = {h0, est};
        }
    }
    return best;
}

PerfProfile calibrate(std::span<const PathMeasurement> measurements, const std::string& run_id,
                      FlopsMode mode, std::size_t e) {
    double total_flops[2] = {0.0, 0.0};
    double total_seconds[2] = {0.0, 0.0};
    double min_flops[2] = {std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
    double max_flops[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};

    for (const PathMeasurement& m : measurements) {
        if (m.path != 0 && m.path != 1) {
            throw CalibrationError("measurement with unknown path " + std::to_string(m.path));
        }
        if (!(m.seconds > 0.0)) {
            throw CalibrationError("measurement with nonpositive elapsed time " +
                                   std::to_string(m.seconds));
        }
        if (!(m.flops > 0.0)) {
            throw CalibrationError("measurement with nonpositive FLOPs");
        }
        total_flops[m.path] += m.flops;
        total_seconds[m.path] += m.seconds;
        min_flops[m.path] = std::min(min_flops[m.path], m.flops);
        max_flops[m.path] = std::max(max_flops[m.path], m.flops);
        ++count[m.path];
    }

    std::ostringstream missing;
    for (int p = 0; p < 2; ++p) {
        if (count[p] < 3) {
            missing << " path" << p << ": " << count[p] << " of 3 required measurements;";
        } else if (max_flops[p] < 4.0 * min_flops[p]) {
            missing << " path" << p << ": FLOPs span " << (max_flops[p] / min_flops[p])
                    << "x, need >= 4x;";
        }
    }
    if (!missing.str().empty()) {
        throw CalibrationError("insufficient calibration coverage:" + missing.str());
    }

    PerfProfile profile;
    profile.perf0 = total_flops[0] / total_seconds[0];
    profile.perf1 = total_flops[1] / total_seconds[1];
    profile.flops_per0 =
        mode == FlopsMode::PaperSimplified ? 5.0 : 4.0 * static_cast<double>(e) + 3.0;
    profile.flops_per1 = 8.0;
    profile.source = "calibrated:" + run_id;
    return profile;
}

} // namespace mae
