#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mae/io.hpp"
#include "mae/random.hpp"

#include "oracles.hpp"

using namespace mae;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("GFT4 round-trips both precisions") {
    const std::string path = temp_path("mae_io_rt.gft4");

    const Tensor4<float> tf = random_uniform_tensor<float>({2, 3, 5, 7}, 1);
    write_gft4(path, tf);
    const AnyTensor back_f = read_gft4(path);
    CHECK(tensor_precision(back_f) == Precision::F32);
    CHECK(oracles::max_abs_diff(std::get<Tensor4<float>>(back_f), tf) == 0.0);

    const Tensor4<double> td = random_uniform_tensor<double>({1, 2, 4, 3}, 2);
    write_gft4(path, td);
    const AnyTensor back_d = read_gft4(path);
    CHECK(tensor_precision(back_d) == Precision::F64);
    CHECK(oracles::max_abs_diff(std::get<Tensor4<double>>(back_d), td) == 0.0);

    std::remove(path.c_str());
}

TEST_CASE("GFT4 malformed files report byte offsets") {
    const std::string path = temp_path("mae_io_bad.gft4");

    SUBCASE("empty file fails at offset 0") {
        write_bytes(path, {});
        try {
            read_gft4(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == 0);
        }
    }

    SUBCASE("bad magic fails at offset 0") {
        write_bytes(path, {'N', 'O', 'P', 'E', 4, 1, 0, 0, 0});
        try {
            read_gft4(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == 0);
        }
    }

    SUBCASE("unknown precision tag fails at offset 4") {
        std::vector<unsigned char> bytes{'G', 'F', 'T', '4', 7};
        bytes.resize(kGft4HeaderBytes, 1);
        write_bytes(path, bytes);
        try {
            read_gft4(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() == 4);
        }
    }

    SUBCASE("truncated payload reports the payload offset") {
        const Tensor4<float> t = random_uniform_tensor<float>({1, 1, 2, 2}, 3);
        write_gft4(path, t);
        std::vector<unsigned char> bytes;
        {
            std::ifstream in(path, std::ios::binary);
            bytes.assign(std::istreambuf_iterator<char>(in), {});
        }
        bytes.resize(bytes.size() - 5);
        write_bytes(path, bytes);
        try {
            read_gft4(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.offset() >= kGft4HeaderBytes);
        }
    }

    std::remove(path.c_str());
}

TEST_CASE("GFT4 writes are byte-deterministic") {
    const std::string p1 = temp_path("mae_io_a.gft4");
    const std::string p2 = temp_path("mae_io_b.gft4");
    const Tensor4<double> t = random_uniform_tensor<double>({2, 2, 8, 4}, 9);
    write_gft4(p1, t);
    write_gft4(p2, t);
    CHECK(fnv1a64_file(p1) == fnv1a64_file(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
