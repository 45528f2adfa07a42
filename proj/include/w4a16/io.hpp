#pragma once

// Binary file formats (all little-endian, bit-exact round trips required):
//
//   FP16 matrix (.f16m)
//     magic "F16M\0" (5 bytes), rows u32, cols u32,
//     rows*cols binary16 codes (u16), row-major.
//
//   Packed weights (.w4a16)
//     magic "W4A16\0" (6 bytes), version u16 (= 1), K u32, N u32,
//     mode u8 (0 = per-tensor, 1 = per-channel), reserved u8[7] (zero),
//     scales f32 x L, zero-points u8 x L, words u32 x K*N/8 row-major,
//     where L = 1 (per-tensor) or N (per-channel). Header is 24 bytes.
//
// Machine config: "key = value" text, one per line, '#' comments. Keys match
// the MachineConfig fields exactly.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "w4a16/machine.hpp"
#include "w4a16/matrix.hpp"
#include "w4a16/quant.hpp"

namespace w4a16 {

std::vector<uint8_t> encode_f16m(const Fp16Matrix& m);
Fp16Matrix decode_f16m(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_w4a16(const PackedInt4Matrix& w, const QuantParams& params);
QuantizedWeights decode_w4a16(std::span<const uint8_t> bytes);

void write_f16m(const std::string& path, const Fp16Matrix& m);
Fp16Matrix read_f16m(const std::string& path);

void write_w4a16(const std::string& path, const PackedInt4Matrix& w, const QuantParams& params);
QuantizedWeights read_w4a16(const std::string& path);

// Unknown keys, malformed lines, and out-of-domain values all throw; line
// numbers are reported in the message.
MachineConfig parse_machine_config(std::string_view text);
MachineConfig read_machine_config(const std::string& path);

}  // namespace w4a16
