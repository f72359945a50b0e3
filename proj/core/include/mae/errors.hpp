#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mae {

// Conformance failure between tensor/matrix shapes. Messages name both shapes.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid scalar input to an elementwise map (e.g. reciprocal of zero) or a
// degenerate normalizer in linear attention.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent run configuration (bad head split, window not a multiple of
// the vector width, unknown kernel name, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed tensor file. Carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& msg, std::uint64_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

// Calibration input does not meet the coverage preconditions.
class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A benchmark point would exceed the configured memory cap. Carries both the
// requirement and the cap so callers can report the shortfall.
class MemoryCapError : public std::runtime_error {
public:
    MemoryCapError(const std::string& msg, std::uint64_t required_bytes, std::uint64_t cap_bytes)
        : std::runtime_error(msg),
          required_bytes_(required_bytes),
          cap_bytes_(cap_bytes) {}
    std::uint64_t required_bytes() const { return required_bytes_; }
    std::uint64_t cap_bytes() const { return cap_bytes_; }

private:
    std::uint64_t required_bytes_;
    std::uint64_t cap_bytes_;
};

// Verify-mode violation: a numeric invariant (finiteness, band liveness,
// disjoint row ranges) failed after an operation.
class VerifyError : public std::runtime_error {
public:
    explicit VerifyError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mae
