#pragma once

// Software binary16 (IEEE half) and binary32 arithmetic with deterministic
// round-to-nearest-even. Conversions are pure bit manipulation so every
// result is reproducible on any host regardless of FPU extensions or
// rounding-environment state. No hardware half types are involved.

#include <array>
#include <cstdint>

namespace w4a16 {

// A binary16 code. Value semantics only; arithmetic goes through binary32.
struct F16 {
    uint16_t bits = 0;
    friend bool operator==(F16, F16) = default;
};

// A binary32 accumulator. Additions happen in one fixed order per operation
// contract; wrapping the float marks accumulation sites in signatures.
struct F32Acc {
    float value = 0.0f;
};

inline constexpr F16 kF16Zero{0x0000};
inline constexpr F16 kF16One{0x3C00};
inline constexpr F16 kF16Inf{0x7C00};
inline constexpr F16 kF16NaN{0x7E00};

// Nearest binary16 under round-to-nearest-even, ties to even significand.
// Overflow saturates to the infinity code; NaN input yields a quiet NaN code.
F16 f16_from_f32(float x) noexcept;

// Exact widening (binary16 is a subset of binary32), including subnormals,
// infinities and NaN payloads.
float f16_to_f32(F16 h) noexcept;

// acc + widen(a)*widen(b). The product of two binary16 values is always exact
// in binary32 (22-bit significand, exponent range well inside binary32), so
// the only rounding is the final nearest-even add.
F32Acc fma_acc(F32Acc acc, F16 a, F16 b) noexcept;

bool f16_is_nan(F16 h) noexcept;

// Full 65536-entry widening table; the hot engine loops decode through this.
// Entries are produced by f16_to_f32, so table lookups are bit-equivalent to
// the software path by construction (and asserted by tests).
const std::array<float, 65536>& f16_widen_table();

}  // namespace w4a16
