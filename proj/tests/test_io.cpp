#include <bit>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "oracle.hpp"
#include "w4a16/io.hpp"
#include "w4a16/util.hpp"

using namespace w4a16;

namespace {

std::string temp_path(const char* stem) {
    static int counter = 0;
    return (std::filesystem::temp_directory_path() /
            (std::string("w4a16_io_test_") + stem + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++)))
        .string();
}

struct FileGuard {
    std::string path;
    ~FileGuard() { std::filesystem::remove(path); }
};

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("f16m encode/decode round-trips bit-exactly") {
    SplitMix64 rng(40);
    auto m = oracle::make_random_unit_matrix(rng, 13, 7);
    m.at(0, 0) = F16{0x7C00};  // inf
    m.at(1, 1) = F16{0xFC00};
    m.at(2, 2) = F16{0x8000};  // -0
    const auto bytes = encode_f16m(m);
    const auto back = decode_f16m(bytes);
    REQUIRE(back.rows == m.rows);
    REQUIRE(back.cols == m.cols);
    for (size_t i = 0; i < m.size(); ++i) CHECK(back.data[i].bits == m.data[i].bits);
}

TEST_CASE("f16m file write/read round-trips") {
    SplitMix64 rng(41);
    const auto m = oracle::make_random_unit_matrix(rng, 5, 9);
    FileGuard guard{temp_path("f16m")};
    write_f16m(guard.path, m);
    const auto back = read_f16m(guard.path);
    CHECK(encode_f16m(back) == encode_f16m(m));
}

TEST_CASE("f16m parse errors carry byte offsets") {
    SplitMix64 rng(42);
    const auto bytes = encode_f16m(oracle::make_random_unit_matrix(rng, 4, 4));

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_f16m(bad_magic), doctest::Contains("byte offset 0"), ParseError);

    const auto truncated = std::span(bytes).first(bytes.size() - 3);
    CHECK_THROWS_AS(decode_f16m(truncated), ParseError);

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_f16m(trailing), ParseError);

    const auto header_only = std::span(bytes).first(7);
    try {
        decode_f16m(header_only);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset <= header_only.size());
    }
}

TEST_CASE("w4a16 packed file round-trips bit-exactly in both modes") {
    SplitMix64 rng(43);
    for (QuantMode mode : {QuantMode::per_channel, QuantMode::per_tensor}) {
        const auto wf = oracle::make_random_unit_matrix(rng, 20, 16);
        const auto qw = quantize_matrix(wf, mode);
        const auto bytes = encode_w4a16(qw.packed, qw.params);
        const auto back = decode_w4a16(bytes);
        CHECK(back.packed.rows == qw.packed.rows);
        CHECK(back.packed.cols == qw.packed.cols);
        CHECK(back.packed.words == qw.packed.words);
        CHECK(back.params.mode == qw.params.mode);
        CHECK(back.params.zero_points == qw.params.zero_points);
        REQUIRE(back.params.scales.size() == qw.params.scales.size());
        for (size_t i = 0; i < qw.params.scales.size(); ++i) {
            CHECK(std::bit_cast<uint32_t>(back.params.scales[i]) ==
                  std::bit_cast<uint32_t>(qw.params.scales[i]));
        }

        FileGuard guard{temp_path("w4a16")};
        write_w4a16(guard.path, qw.packed, qw.params);
        const auto from_file = read_w4a16(guard.path);
        CHECK(encode_w4a16(from_file.packed, from_file.params) == bytes);
    }
}

TEST_CASE("w4a16 decode rejects bad headers") {
    SplitMix64 rng(44);
    const auto qw = quantize_matrix(oracle::make_random_unit_matrix(rng, 4, 8));
    const auto bytes = encode_w4a16(qw.packed, qw.params);

    auto bad_version = bytes;
    bad_version[6] = 9;
    CHECK_THROWS_AS(decode_w4a16(bad_version), ParseError);

    auto bad_mode = bytes;
    bad_mode[16] = 7;
    CHECK_THROWS_AS(decode_w4a16(bad_mode), ParseError);

    const auto truncated = std::span(bytes).first(bytes.size() - 1);
    CHECK_THROWS_AS(decode_w4a16(truncated), ParseError);
}

TEST_CASE("decoders survive random mutation and truncation") {
    // Any byte-level corruption must surface as ParseError (or decode to a
    // valid object), never crash or over-allocate.
    SplitMix64 rng(46);
    const auto wf = oracle::make_random_unit_matrix(rng, 6, 16);
    const auto qw = quantize_matrix(wf);
    const auto f16m_bytes = encode_f16m(wf);
    const auto w4_bytes = encode_w4a16(qw.packed, qw.params);

    auto fuzz = [&](const std::vector<uint8_t>& original, auto decode) {
        for (int trial = 0; trial < 300; ++trial) {
            auto bytes = original;
            const int edits = 1 + static_cast<int>(rng.next_below(4));
            for (int e = 0; e < edits; ++e) {
                bytes[rng.next_below(bytes.size())] = static_cast<uint8_t>(rng.next());
            }
            if (rng.next_below(3) == 0) bytes.resize(rng.next_below(bytes.size() + 1));
            try {
                decode(bytes);
            } catch (const ParseError&) {
            } catch (const DomainError&) {
            }
        }
    };
    fuzz(f16m_bytes, [](const std::vector<uint8_t>& b) { return decode_f16m(b); });
    fuzz(w4_bytes, [](const std::vector<uint8_t>& b) { return decode_w4a16(b); });

    // A header claiming a huge matrix over a tiny payload must be rejected
    // before any allocation happens.
    auto huge = w4_bytes;
    huge[8] = huge[9] = huge[10] = huge[11] = 0xFF;  // K = 2^32 - 1
    CHECK_THROWS_AS(decode_w4a16(huge), ParseError);
}

TEST_CASE("machine config parsing") {
    const auto cfg = parse_machine_config(
        "# test rig\n"
        "num_ai_cores = 8\n"
        "vec_per_core = 4\n"
        "gm_bandwidth = 2.5e11   # shared HBM\n"
        "overlap_efficiency = 0.75\n"
        "\n"
        "clock = 1e9\n");
    CHECK(cfg.num_ai_cores == 8);
    CHECK(cfg.vec_per_core == 4);
    CHECK(cfg.gm_bandwidth == 2.5e11);
    CHECK(cfg.overlap_efficiency == 0.75);
    CHECK(cfg.clock == 1e9);
    CHECK(cfg.cube_per_core == 1);                    // untouched default
    CHECK(cfg.cube_macs_per_cycle_per_core == 4096);  // untouched default

    CHECK_THROWS_WITH_AS(parse_machine_config("bogus_key = 1\n"), doctest::Contains("unknown key"),
                         Error);
    CHECK_THROWS_WITH_AS(parse_machine_config("clock = fast\n"), doctest::Contains("bad number"),
                         Error);
    CHECK_THROWS_AS(parse_machine_config("num_ai_cores\n"), Error);
    CHECK_THROWS_AS(parse_machine_config("overlap_efficiency = 2.0\n"), DomainError);
}

TEST_CASE("quantize -> file -> dequantize equals the in-memory path") {
    SplitMix64 rng(45);
    const auto wf = oracle::make_random_unit_matrix(rng, 24, 8);
    const auto qw = quantize_matrix(wf);

    FileGuard guard{temp_path("roundtrip")};
    write_w4a16(guard.path, qw.packed, qw.params);
    const auto loaded = read_w4a16(guard.path);

    const auto direct = dequantize_tile(qw.packed, qw.params, 0, 24, 0, 8);
    const auto via_file = dequantize_tile(loaded.packed, loaded.params, 0, 24, 0, 8);
    for (size_t i = 0; i < direct.size(); ++i) {
        CHECK(via_file.data[i].bits == direct.data[i].bits);
    }
}

TEST_SUITE_END();
