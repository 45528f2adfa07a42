#include "w4a16/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace w4a16 {

PackedInt4Matrix::PackedInt4Matrix(uint32_t k, uint32_t n) : rows(k), cols(n) {
    if (n % 8 != 0) throw ShapeError("packed matrix cols must be a multiple of 8, got " + std::to_string(n));
    words.assign(static_cast<size_t>(k) * (n / 8), 0u);
}

void validate(const QuantParams& params, uint32_t cols) {
    const size_t expect = params.mode == QuantMode::per_tensor ? 1 : cols;
    if (params.scales.size() != expect || params.zero_points.size() != expect) {
        throw ShapeError("quant params length mismatch: expected " + std::to_string(expect) +
                         ", got " + std::to_string(params.scales.size()) + " scales / " +
                         std::to_string(params.zero_points.size()) + " zero points");
    }
    for (float s : params.scales) {
        if (!std::isfinite(s) || s <= 0.0f) throw DomainError("scale must be finite and > 0");
    }
    for (uint8_t z : params.zero_points) {
        if (z > 15) throw DomainError("zero point must be in [0,15]");
    }
}

uint8_t quantize(float x, float s, uint8_t z) {
    if (!std::isfinite(x)) throw DomainError("quantize: non-finite input");
    if (!std::isfinite(s) || s <= 0.0f) throw DomainError("quantize: scale must be finite and > 0");

    const float q = x / s;
    // Any |round(q)| >= 32 clamps regardless of z in [0,15]; this also keeps
    // the integer conversion below safe for huge quotients.
    if (q >= 32.0f) return 15;
    if (q <= -32.0f) return 0;

    // round-half-even via exact floor/difference arithmetic (|q| < 32, so
    // both floor and q - floor are exact in binary32). No fenv dependence.
    const float fl = std::floor(q);
    const float diff = q - fl;
    int r = static_cast<int>(fl);
    if (diff > 0.5f) {
        r += 1;
    } else if (diff == 0.5f) {
        r += r & 1;  // ties to even
    }
    const int code = r + static_cast<int>(z);
    return static_cast<uint8_t>(std::clamp(code, 0, 15));
}

F16 dequantize(uint8_t code, float s, uint8_t z) {
    if (code > 15) throw DomainError("dequantize: code must be in [0,15]");
    // Exact integer subtract, then one binary32 product, then one f16 rounding.
    const float v = s * static_cast<float>(static_cast<int>(code) - static_cast<int>(z));
    return f16_from_f32(v);
}

std::vector<uint32_t> pack(std::span<const uint8_t> codes) {
    if (codes.size() % 8 != 0) {
        throw ShapeError("pack: length must be a multiple of 8, got " + std::to_string(codes.size()));
    }
    std::vector<uint32_t> words(codes.size() / 8, 0u);
    for (size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] > 15) throw DomainError("pack: code out of [0,15]");
        words[i / 8] |= static_cast<uint32_t>(codes[i]) << (4 * (i % 8));
    }
    return words;
}

std::vector<uint8_t> unpack(std::span<const uint32_t> words) {
    std::vector<uint8_t> codes(words.size() * 8);
    for (size_t j = 0; j < words.size(); ++j) {
        for (uint32_t i = 0; i < 8; ++i) {
            codes[j * 8 + i] = static_cast<uint8_t>((words[j] >> (4 * i)) & 0xFu);
        }
    }
    return codes;
}

namespace {

float column_absmax(const Fp16Matrix& m, uint32_t col) {
    float amax = 0.0f;
    for (uint32_t r = 0; r < m.rows; ++r) {
        const float v = f16_to_f32(m.at(r, col));
        if (!std::isfinite(v)) throw DomainError("quantize_matrix: non-finite weight");
        amax = std::max(amax, std::fabs(v));
    }
    return amax;
}

float scale_from_absmax(float amax) {
    return std::max(amax / 7.0f, 1e-8f);
}

}  // namespace

QuantizedWeights quantize_matrix(const Fp16Matrix& weights, QuantMode mode) {
    if (weights.rows < 1) throw ShapeError("quantize_matrix: need at least one row");
    if (weights.cols == 0 || weights.cols % 8 != 0) {
        throw ShapeError("quantize_matrix: cols must be a nonzero multiple of 8, got " +
                         std::to_string(weights.cols));
    }

    QuantizedWeights out;
    out.packed = PackedInt4Matrix(weights.rows, weights.cols);
    out.params.mode = mode;

    if (mode == QuantMode::per_tensor) {
        float amax = 0.0f;
        for (uint32_t c = 0; c < weights.cols; ++c) amax = std::max(amax, column_absmax(weights, c));
        out.params.scales = {scale_from_absmax(amax)};
        out.params.zero_points = {8};
    } else {
        out.params.scales.resize(weights.cols);
        out.params.zero_points.assign(weights.cols, 8);
        for (uint32_t c = 0; c < weights.cols; ++c) {
            out.params.scales[c] = scale_from_absmax(column_absmax(weights, c));
        }
    }

    for (uint32_t r = 0; r < weights.rows; ++r) {
        for (uint32_t c = 0; c < weights.cols; ++c) {
            const uint8_t code = quantize(f16_to_f32(weights.at(r, c)), out.params.scale_for(c),
                                          out.params.zero_for(c));
            out.packed.set_code(r, c, code);
        }
    }
    return out;
}

Fp16Matrix dequantize_tile(const PackedInt4Matrix& w, const QuantParams& params,
                           uint32_t row_begin, uint32_t row_end, uint32_t col_begin,
                           uint32_t col_end) {
    validate(params, w.cols);
    if (row_begin > row_end || row_end > w.rows || col_begin > col_end || col_end > w.cols) {
        throw ShapeError("dequantize_tile: range out of bounds");
    }
    if (col_begin % 8 != 0 || col_end % 8 != 0) {
        throw ShapeError("dequantize_tile: column range must be aligned to 8");
    }

    Fp16Matrix tile(row_end - row_begin, col_end - col_begin);
    for (uint32_t r = row_begin; r < row_end; ++r) {
        for (uint32_t c = col_begin; c < col_end; ++c) {
            tile.at(r - row_begin, c - col_begin) =
                dequantize(w.code_at(r, c), params.scale_for(c), params.zero_for(c));
        }
    }
    return tile;
}

}  // namespace w4a16
