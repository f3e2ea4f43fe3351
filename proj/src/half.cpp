#include "fastnn/half.hpp"

#include <bit>

namespace fastnn {

namespace {
// Smallest float magnitude that rounds to binary16 infinity: 65520.0f.
constexpr std::uint32_t kOverflowMag = 0x477FF000u;
// Below this magnitude (2^-14) the result is a half subnormal.
constexpr std::uint32_t kNormalMinMag = 0x38800000u;
constexpr std::uint16_t kHalfMaxBits = 0x7BFFu;  // 65504
}  // namespace

std::uint16_t float_to_half_bits(float x, bool* saturated) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
    const std::uint16_t sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
    const std::uint32_t mag = bits & 0x7FFFFFFFu;

    if (mag > 0x7F800000u) {
        return static_cast<std::uint16_t>(sign | 0x7E00u);  // canonical quiet NaN
    }
    if (mag >= kOverflowMag) {  // includes infinity
        if (saturated) *saturated = true;
        return static_cast<std::uint16_t>(sign | kHalfMaxBits);
    }
    if (mag >= kNormalMinMag) {
        // Normal half. Round the 13 dropped mantissa bits to nearest-even;
        // a carry out of the mantissa bumps the exponent, which is exactly
        // the IEEE behaviour.
        const std::uint32_t rounded = mag + 0x0FFFu + ((mag >> 13) & 1u);
        return static_cast<std::uint16_t>(sign | ((rounded - (112u << 23)) >> 13));
    }
    if (mag == 0) return sign;

    // Subnormal half: round magnitude to a multiple of 2^-24.
    const std::uint32_t exp_f = mag >> 23;
    if (exp_f + 24 < 126) return sign;  // too small for the smallest subnormal
    const std::uint32_t shift = 126u - exp_f;
    const std::uint32_t m32 = (mag & 0x7FFFFFu) | 0x800000u;
    std::uint32_t kept = m32 >> shift;
    const std::uint32_t rem = m32 & ((1u << shift) - 1u);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (kept & 1u))) ++kept;
    // kept <= 0x400; the 0x400 case is the smallest normal, encoded naturally.
    return static_cast<std::uint16_t>(sign | kept);
}

float half_bits_to_float(std::uint16_t h) {
    const std::uint32_t sign = (static_cast<std::uint32_t>(h) & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1Fu;
    const std::uint32_t man = h & 0x3FFu;

    if (exp == 0x1Fu) {
        const std::uint32_t payload = man == 0 ? 0u : (man << 13) | 0x400000u;
        return std::bit_cast<float>(sign | 0x7F800000u | payload);
    }
    if (exp == 0) {
        if (man == 0) return std::bit_cast<float>(sign);
        const float v = static_cast<float>(man) * 0x1p-24f;  // exact
        return std::bit_cast<float>(sign | std::bit_cast<std::uint32_t>(v));
    }
    return std::bit_cast<float>(sign | ((exp + 112u) << 23) | (man << 13));
}

float to_half_round(float x) {
    return half_bits_to_float(float_to_half_bits(x));
}

float to_half_round(float x, bool& saturated) {
    return half_bits_to_float(float_to_half_bits(x, &saturated));
}

}  // namespace fastnn
