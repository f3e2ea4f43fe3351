#pragma once

#include <cstdint>

namespace fastnn {

/// IEEE 754 binary16 conversion, round to nearest, ties to even.
///
/// Finite inputs whose rounded magnitude would overflow the half range
/// (|x| >= 65520, where rounding reaches infinity) saturate to +/-65504 and
/// set *saturated; matching must not abort mid-run, so overflow is never
/// fatal. Infinite inputs saturate the same way. NaN maps to a canonical
/// quiet NaN. Signed zero is preserved.
std::uint16_t float_to_half_bits(float x, bool* saturated = nullptr);

/// Exact widening of a binary16 bit pattern back to single precision.
float half_bits_to_float(std::uint16_t h);

/// Nearest half-representable value of x, widened back to single precision.
float to_half_round(float x);
float to_half_round(float x, bool& saturated);

inline constexpr float kHalfMax = 65504.0f;

}  // namespace fastnn
