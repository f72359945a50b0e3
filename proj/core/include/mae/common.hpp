#pragma once

#include <cstdint>
#include <string>

namespace mae {

// Scalar precision of a tensor payload. Library-wide run choice: every
// operation requires all of its operands to share one precision, mixing is
// rejected at the dispatch layer.
enum class Precision : std::uint8_t {
    F32 = 4, // tag value doubles as the GFT4 on-disk tag (bytes per scalar)
    F64 = 8,
};

inline const char* precision_name(Precision p) {
    return p == Precision::F32 ? "f32" : "f64";
}

// Verify mode turns on the expensive runtime checks: finiteness scans after
// every kernel, band-liveness validation, disjoint-range enforcement for
// partitioned outer products. Reduction order inside a row is sequential
// regardless of this flag, so results never depend on the thread count.
void set_verify_mode(bool enabled);
bool verify_mode();

// Worker count for slice-parallel kernels. 0 = hardware concurrency,
// 1 = pinned single-thread mode (stable timing).
void set_thread_count(unsigned n);
unsigned thread_count();        // as configured (0 = auto)
unsigned effective_threads();   // resolved, >= 1

} // namespace mae
