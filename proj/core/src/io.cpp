#include "mae/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace mae {

namespace {

void put_u32_le(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

template <typename T>
void put_scalar_le(std::vector<unsigned char>& buf, T v) {
    if constexpr (sizeof(T) == 4) {
        put_u32_le(buf, std::bit_cast<std::uint32_t>(v));
    } else {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        put_u32_le(buf, static_cast<std::uint32_t>(bits & 0xffffffffu));
        put_u32_le(buf, static_cast<std::uint32_t>(bits >> 32));
    }
}

template <typename T>
T get_scalar_le(const unsigned char* p) {
    if constexpr (sizeof(T) == 4) {
        return std::bit_cast<T>(get_u32_le(p));
    } else {
        const std::uint64_t lo = get_u32_le(p);
        const std::uint64_t hi = get_u32_le(p + 4);
        return std::bit_cast<T>(lo | (hi << 32));
    }
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'", 0);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

template <typename T>
Tensor4<T> parse_payload(const std::vector<unsigned char>& bytes, Dims4 dims,
                         const std::string& path) {
    const std::size_t want = dims.count() * sizeof(T);
    if (bytes.size() - kGft4HeaderBytes != want) {
        const std::size_t have = bytes.size() - kGft4HeaderBytes;
        throw FormatError("'" + path + "' payload is " + std::to_string(have) +
                              " bytes, dims " + dims.str() + " need " + std::to_string(want),
                          kGft4HeaderBytes + std::min(have, want));
    }
    std::vector<T> data(dims.count());
    const unsigned char* p = bytes.data() + kGft4HeaderBytes;
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = get_scalar_le<T>(p + i * sizeof(T));
    return Tensor4<T>(dims, std::move(data));
}

} // namespace

template <typename T>
void write_gft4(const std::string& path, const Tensor4<T>& t) {
    std::vector<unsigned char> buf;
    buf.reserve(kGft4HeaderBytes + t.size() * sizeof(T));
    buf.insert(buf.end(), kGft4Magic, kGft4Magic + 4);
    buf.push_back(static_cast<unsigned char>(sizeof(T)));
    const Dims4& d = t.dims();
    put_u32_le(buf, static_cast<std::uint32_t>(d.b));
    put_u32_le(buf, static_cast<std::uint32_t>(d.h));
    put_u32_le(buf, static_cast<std::uint32_t>(d.n));
    put_u32_le(buf, static_cast<std::uint32_t>(d.e));
    for (const T v : t.flat()) put_scalar_le(buf, v);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing", 0);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("short write to '" + path + "'", 0);
}

AnyTensor read_gft4(const std::string& path) {
    const std::vector<unsigned char> bytes = slurp(path);
    if (bytes.empty()) throw FormatError("'" + path + "' is empty", 0);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kGft4Magic, 4) != 0) {
        throw FormatError("'" + path + "' lacks GFT4 magic", 0);
    }
    if (bytes.size() < 5) throw FormatError("'" + path + "' truncated before precision tag", 4);
    const unsigned char tag = bytes[4];
    if (tag != 4 && tag != 8) {
        throw FormatError("'" + path + "' has unknown precision tag " + std::to_string(tag), 4);
    }
    if (bytes.size() < kGft4HeaderBytes) {
        throw FormatError("'" + path + "' truncated inside dims", bytes.size());
    }
    Dims4 dims;
    dims.b = get_u32_le(bytes.data() + 5);
    dims.h = get_u32_le(bytes.data() + 9);
    dims.n = get_u32_le(bytes.data() + 13);
    dims.e = get_u32_le(bytes.data() + 17);
    if (dims.b < 1 || dims.h < 1 || dims.n < 1 || dims.e < 1) {
        throw FormatError("'" + path + "' has zero dim " + dims.str(), 5);
    }
    if (tag == 4) return parse_payload<float>(bytes, dims, path);
    return parse_payload<double>(bytes, dims, path);
}

Precision tensor_precision(const AnyTensor& t) {
    return std::holds_alternative<Tensor4<float>>(t) ? Precision::F32 : Precision::F64;
}

Dims4 tensor_dims(const AnyTensor& t) {
    return std::visit([](const auto& x) { return x.dims(); }, t);
}

std::uint64_t fnv1a64_file(const std::string& path) {
    const std::vector<unsigned char> bytes = slurp(path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

template void write_gft4<float>(const std::string&, const Tensor4<float>&);
template void write_gft4<double>(const std::string&, const Tensor4<double>&);

} // namespace mae
