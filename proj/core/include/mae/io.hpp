#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "mae/tensor.hpp"

namespace mae {

// GFT4 tensor dump: magic "GFT4", u8 precision tag (4 = f32, 8 = f64), four
// u32 little-endian dims (B,H,N,E), then raw little-endian scalars.
inline constexpr char kGft4Magic[4] = {'G', 'F', 'T', '4'};
inline constexpr std::size_t kGft4HeaderBytes = 4 + 1 + 4 * 4;

using AnyTensor = std::variant<Tensor4<float>, Tensor4<double>>;

template <typename T>
void write_gft4(const std::string& path, const Tensor4<T>& t);

// Throws FormatError with the failing byte offset on malformed input.
AnyTensor read_gft4(const std::string& path);

Precision tensor_precision(const AnyTensor& t);
Dims4 tensor_dims(const AnyTensor& t);

// FNV-1a 64 over the raw bytes of a file; the checksum printed by the CLI.
std::uint64_t fnv1a64_file(const std::string& path);

extern template void write_gft4<float>(const std::string&, const Tensor4<float>&);
extern template void write_gft4<double>(const std::string&, const Tensor4<double>&);

} // namespace mae
