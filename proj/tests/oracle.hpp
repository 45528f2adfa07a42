#pragma once

// Test-only reference implementations, deliberately independent of the
// library's conversion and engine code paths:
//   - binary16 decode from the IEEE field formula via ldexp,
//   - binary16 encode by nearest-neighbor search over the monotone code
//     ordering with exact midpoint tie comparisons,
//   - a plain triple-loop GEMM oracle (double dequantize + double accumulate),
//   - grid-aligned instance generation where every engine arithmetic step is
//     exact, so all accumulation orders must agree bit for bit.

#include <cmath>
#include <cstdint>
#include <vector>

#include "w4a16/matrix.hpp"
#include "w4a16/quant.hpp"
#include "w4a16/util.hpp"

namespace oracle {

// Field-formula decode of a binary16 code.
inline double f16_decode(uint16_t bits) {
    const int sign = (bits >> 15) & 1;
    const int exp = (bits >> 10) & 0x1F;
    const int frac = bits & 0x3FF;
    double mag;
    if (exp == 0x1F) {
        if (frac != 0) return std::numeric_limits<double>::quiet_NaN();
        mag = std::numeric_limits<double>::infinity();
    } else if (exp == 0) {
        mag = std::ldexp(static_cast<double>(frac), -24);
    } else {
        mag = std::ldexp(1.0 + static_cast<double>(frac) / 1024.0, exp - 15);
    }
    return sign ? -mag : mag;
}

// Nearest code under round-to-nearest-even. Works on the monotone ordering of
// non-negative codes 0x0000..0x7C00 (0x7C00 treated as the virtual value
// 2^16 so the overflow boundary at 65520 falls out of the same tie rule).
// All comparisons are exact: x + x is exact in double, and the sum of two
// adjacent half values needs at most 13 significand bits.
inline uint16_t f16_encode(double x) {
    if (std::isnan(x)) return std::signbit(x) ? 0xFE00 : 0x7E00;
    const uint16_t sign = std::signbit(x) ? 0x8000 : 0;
    const double a = std::fabs(x);
    if (std::isinf(x)) return sign | 0x7C00;

    auto value_of = [](uint16_t code) -> double {
        return code == 0x7C00 ? 65536.0 : f16_decode(code);
    };

    // Largest code lo in [0, 0x7BFF] with value(lo) <= a.
    uint16_t lo = 0, hi = 0x7BFF;
    if (a >= value_of(0x7BFF)) {
        lo = 0x7BFF;
    } else {
        while (lo < hi) {
            const uint16_t mid = static_cast<uint16_t>((lo + hi + 1) / 2);
            if (value_of(mid) <= a) {
                lo = mid;
            } else {
                hi = static_cast<uint16_t>(mid - 1);
            }
        }
    }
    const uint16_t next = static_cast<uint16_t>(lo + 1);
    const double twice = a + a;
    const double midpoint_sum = value_of(lo) + value_of(next);
    uint16_t code;
    if (twice > midpoint_sum) {
        code = next;
    } else if (twice < midpoint_sum) {
        code = lo;
    } else {
        code = (lo & 1) == 0 ? lo : next;  // tie: even significand wins
    }
    return sign | code;
}

// Plain triple-loop reference: double dequantize, double accumulate with k
// ascending, one final cast. On grid-aligned instances every step is exact,
// so this pins the bit pattern every engine must produce.
inline w4a16::Fp16Matrix w4a16_gemm(const w4a16::Fp16Matrix& a, const w4a16::PackedInt4Matrix& w,
                                    const w4a16::QuantParams& params) {
    w4a16::Fp16Matrix c(a.rows, w.cols);
    for (uint32_t i = 0; i < a.rows; ++i) {
        for (uint32_t j = 0; j < w.cols; ++j) {
            double acc = 0.0;
            const double s = static_cast<double>(params.scale_for(j));
            const int z = params.zero_for(j);
            for (uint32_t k = 0; k < w.rows; ++k) {
                const double av = f16_decode(a.at(i, k).bits);
                const double bv = s * (static_cast<int>(w.code_at(k, j)) - z);
                acc += av * bv;
            }
            c.at(i, j) = w4a16::F16{f16_encode(acc)};
        }
    }
    return c;
}

struct GridInstance {
    w4a16::Fp16Matrix a;
    w4a16::PackedInt4Matrix w;
    w4a16::QuantParams params;
};

// A has small-integer entries, W arbitrary codes, power-of-two per-channel
// scales with z = 8. Every product is int * int * 2^-e, every partial sum
// stays far below 2^24, and every output value is exactly representable in
// binary16, so all engines and the oracle agree exactly.
inline GridInstance make_grid_instance(w4a16::SplitMix64& rng, uint32_t m, uint32_t n, uint32_t k) {
    GridInstance inst;
    inst.a = w4a16::Fp16Matrix(m, k);
    for (auto& h : inst.a.data) {
        h = w4a16::F16{f16_encode(static_cast<double>(rng.next_in(-4, 4)))};
    }
    inst.w = w4a16::PackedInt4Matrix(k, n);
    for (uint32_t r = 0; r < k; ++r) {
        for (uint32_t c = 0; c < n; ++c) {
            inst.w.set_code(r, c, static_cast<uint8_t>(rng.next_below(16)));
        }
    }
    inst.params.mode = w4a16::QuantMode::per_channel;
    inst.params.scales.resize(n);
    inst.params.zero_points.assign(n, 8);
    for (uint32_t c = 0; c < n; ++c) {
        inst.params.scales[c] = std::ldexp(1.0f, -static_cast<int>(rng.next_below(4)));
    }
    return inst;
}

// Random binary16 values in [-1, 1] on a fine grid (exact in binary16).
inline w4a16::Fp16Matrix make_random_unit_matrix(w4a16::SplitMix64& rng, uint32_t rows,
                                                 uint32_t cols) {
    w4a16::Fp16Matrix m(rows, cols);
    for (auto& h : m.data) {
        h = w4a16::F16{f16_encode(static_cast<double>(rng.next_in(-256, 256)) / 256.0)};
    }
    return m;
}

}  // namespace oracle
