#pragma once

// Uniform affine quantization to unsigned 4-bit codes, dequantization back to
// binary16, and 8-codes-per-word nibble packing.
//
//   code  = clamp(round_half_even(x / s) + z, 0, 15)
//   value = f16( s * (code - z) )        (integer subtract, binary32 product)
//
// Symmetric quantization is expressed with z = 8 (the unsigned convention;
// signed code q corresponds to unsigned q + 8).

#include <cstdint>
#include <span>
#include <vector>

#include "w4a16/matrix.hpp"

namespace w4a16 {

enum class QuantMode : uint8_t { per_tensor = 0, per_channel = 1 };

// K x N matrix of unsigned 4-bit codes packed 8 per 32-bit word, row-major by
// (row, col/8). Code i of a word occupies bits [4i, 4i+4) (little-nibble
// first). N must be a multiple of 8 so every row is whole words.
struct PackedInt4Matrix {
    uint32_t rows = 0;  // K
    uint32_t cols = 0;  // N, multiple of 8
    std::vector<uint32_t> words;  // rows * cols/8

    PackedInt4Matrix() = default;
    PackedInt4Matrix(uint32_t k, uint32_t n);

    uint32_t words_per_row() const { return cols / 8; }

    uint8_t code_at(uint32_t r, uint32_t c) const {
        const uint32_t w = words[static_cast<size_t>(r) * words_per_row() + c / 8];
        return static_cast<uint8_t>((w >> (4 * (c % 8))) & 0xFu);
    }
    void set_code(uint32_t r, uint32_t c, uint8_t code) {
        uint32_t& w = words[static_cast<size_t>(r) * words_per_row() + c / 8];
        const uint32_t shift = 4 * (c % 8);
        w = (w & ~(0xFu << shift)) | (static_cast<uint32_t>(code & 0xFu) << shift);
    }
};

// Scales and zero-points, one pair per output column (per_channel) or one
// global pair (per_tensor). All scales > 0 and finite; zero-points in [0,15].
struct QuantParams {
    QuantMode mode = QuantMode::per_channel;
    std::vector<float> scales;
    std::vector<uint8_t> zero_points;

    float scale_for(uint32_t col) const { return scales[mode == QuantMode::per_tensor ? 0 : col]; }
    uint8_t zero_for(uint32_t col) const {
        return zero_points[mode == QuantMode::per_tensor ? 0 : col];
    }
};

// Throws DomainError on invalid scale/zero arrays for the given column count.
void validate(const QuantParams& params, uint32_t cols);

// round_half_even(x/s) + z clamped to [0,15]. Throws DomainError when x is
// non-finite or s <= 0 (or non-finite).
uint8_t quantize(float x, float s, uint8_t z);

// f16(s * (code - z)). code must be in [0,15].
F16 dequantize(uint8_t code, float s, uint8_t z);

// word j = sum_i codes[8j+i] << 4i. Length must be a multiple of 8
// (ShapeError) and every code in [0,15] (DomainError).
std::vector<uint32_t> pack(std::span<const uint8_t> codes);

// Exact inverse of pack.
std::vector<uint8_t> unpack(std::span<const uint32_t> words);

// Symmetric calibration: per column (or globally), s = max|w| / 7 floored at
// 1e-8, z = 8, so the largest magnitude maps to code 15 or 1. All-zero
// columns quantize to code 8 everywhere and dequantize to exact zero.
struct QuantizedWeights {
    PackedInt4Matrix packed;
    QuantParams params;
};
QuantizedWeights quantize_matrix(const Fp16Matrix& weights,
                                 QuantMode mode = QuantMode::per_channel);

// Elementwise dequantize of rows [row_begin,row_end) x cols [col_begin,col_end).
// Column bounds must be multiples of 8 (whole packed nibbles inside a word
// boundary); ranges must lie inside the matrix. Empty ranges yield an empty
// matrix. This is the unit of work one vector core executes in the engine.
Fp16Matrix dequantize_tile(const PackedInt4Matrix& w, const QuantParams& params,
                           uint32_t row_begin, uint32_t row_end, uint32_t col_begin,
                           uint32_t col_end);

}  // namespace w4a16
