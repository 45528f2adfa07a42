#include "w4a16/numerics.hpp"

#include <bit>

namespace w4a16 {

F16 f16_from_f32(float x) noexcept {
    const uint32_t u = std::bit_cast<uint32_t>(x);
    const auto sign = static_cast<uint16_t>((u >> 16) & 0x8000u);
    const uint32_t exp = (u >> 23) & 0xFFu;
    const uint32_t frac = u & 0x007FFFFFu;

    if (exp == 0xFFu) {
        if (frac != 0) return F16{static_cast<uint16_t>(sign | 0x7E00u)};  // quiet NaN
        return F16{static_cast<uint16_t>(sign | 0x7C00u)};                 // +-inf
    }
    if (exp == 0) {
        // binary32 subnormal: magnitude < 2^-126, far below half the smallest
        // half subnormal (2^-25), so it rounds to signed zero.
        return F16{sign};
    }

    // Half exponent field for the same value: exp - 127 + 15.
    const int he = static_cast<int>(exp) - 112;

    if (he >= 31) return F16{static_cast<uint16_t>(sign | 0x7C00u)};  // overflow

    if (he <= 0) {
        // Subnormal half. Value = 1.frac * 2^(exp-127); expressed in units of
        // 2^-24 (the half subnormal ulp) the integer part is sig >> shift.
        const uint32_t sig = frac | 0x00800000u;  // 24-bit significand
        const int shift = 126 - static_cast<int>(exp);  // >= 14
        if (shift > 24) return F16{sign};  // < 2^-25 after any rounding
        uint32_t m = sig >> shift;
        const uint32_t guard = (sig >> (shift - 1)) & 1u;
        const uint32_t sticky = (sig & ((1u << (shift - 1)) - 1u)) != 0 ? 1u : 0u;
        m += guard & (sticky | (m & 1u));
        // m may carry to 0x400; that bit pattern is exactly the smallest
        // normal half, so the carry needs no special case.
        return F16{static_cast<uint16_t>(sign | m)};
    }

    // Normal half: keep top 10 fraction bits, round the 13 dropped bits.
    uint32_t m = frac >> 13;
    const uint32_t guard = (frac >> 12) & 1u;
    const uint32_t sticky = (frac & 0x0FFFu) != 0 ? 1u : 0u;
    m += guard & (sticky | (m & 1u));
    // Fraction carry propagates into the exponent; 0x7C00 or above means the
    // rounded value reached 2^16 and saturates to infinity.
    const uint32_t em = (static_cast<uint32_t>(he) << 10) + m;
    if (em >= 0x7C00u) return F16{static_cast<uint16_t>(sign | 0x7C00u)};
    return F16{static_cast<uint16_t>(sign | em)};
}

float f16_to_f32(F16 h) noexcept {
    const uint32_t sign = static_cast<uint32_t>(h.bits & 0x8000u) << 16;
    const uint32_t exp = (h.bits >> 10) & 0x1Fu;
    const uint32_t frac = h.bits & 0x03FFu;

    if (exp == 0x1Fu) {
        return std::bit_cast<float>(sign | 0x7F800000u | (frac << 13));
    }
    if (exp == 0) {
        if (frac == 0) return std::bit_cast<float>(sign);
        // Subnormal: value = frac * 2^-24. Normalize into binary32 form.
        const int msb = 31 - std::countl_zero(frac);  // 0..9
        const uint32_t e32 = static_cast<uint32_t>(msb + 103);  // msb - 24 + 127
        const uint32_t m32 = (frac << (23 - msb)) & 0x007FFFFFu;
        return std::bit_cast<float>(sign | (e32 << 23) | m32);
    }
    return std::bit_cast<float>(sign | ((exp + 112) << 23) | (frac << 13));
}

F32Acc fma_acc(F32Acc acc, F16 a, F16 b) noexcept {
    return F32Acc{acc.value + f16_to_f32(a) * f16_to_f32(b)};
}

bool f16_is_nan(F16 h) noexcept {
    return (h.bits & 0x7C00u) == 0x7C00u && (h.bits & 0x03FFu) != 0;
}

const std::array<float, 65536>& f16_widen_table() {
    static const std::array<float, 65536> table = [] {
        std::array<float, 65536> t{};
        for (uint32_t i = 0; i < 65536; ++i) t[i] = f16_to_f32(F16{static_cast<uint16_t>(i)});
        return t;
    }();
    return table;
}

}  // namespace w4a16
