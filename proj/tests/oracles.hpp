#pragma once

// Test-side oracles, written independently of the library code paths they
// check. They share only the numeric contract (fused multiply-add
// accumulation in channel order), never the implementation.

#include <cstdint>
#include <vector>

#include "fastnn/core.hpp"

namespace oracles {

struct NnAnswer {
    std::vector<std::uint32_t> nearest;
    std::vector<float> min_dist;
};

/// Plain double-loop-over-pixels exact NN, lowest-index ties.
NnAnswer nn_pixels(const fastnn::FeatureMap& A, const fastnn::FeatureMap& B,
                   fastnn::DistanceMetric metric);

/// Exhaustive mutual nearest neighbors built on nn_pixels.
std::vector<std::pair<std::uint32_t, std::uint32_t>> mutual_pixels(
    const fastnn::FeatureMap& D1, const fastnn::FeatureMap& D2, fastnn::DistanceMetric metric);

/// Nearest finite binary16 value of x with ties to even, computed from a
/// table of all half values; saturates beyond the half range.
/// Reference for the bit-twiddling converter.
std::uint16_t nearest_half_bits(double x);

/// Rigorous upper bound on |hybrid distance - full distance| for one
/// descriptor pair, from the actual input magnitudes: input rounding error
/// (half a half-ulp each), f32 arithmetic error, and the final rounding of
/// the distance to half precision.
double hybrid_error_bound(const float* a, const float* b, std::uint32_t dim,
                          fastnn::DistanceMetric metric);

/// Smallest relative gap g such that for every positive normal half value v,
/// any value >= v*(1+g) is guaranteed to round strictly above v. The frozen
/// margin constant in the tests must exceed twice this.
double derive_safe_relative_gap();

/// Spacing of the binary16 grid at |x|.
double half_ulp(double x);

/// Margin-separated instance: all descriptor channels exactly half
/// representable, every query's best distance strictly below
/// margin_ratio * second-best under full precision. Returns false if the
/// construction failed the margin check (callers assert success).
struct MarginInstance {
    fastnn::FeatureMap queries;
    fastnn::FeatureMap targets;
    std::vector<std::uint32_t> expected_nearest;
    bool margin_ok = false;
};
MarginInstance make_margin_instance(std::uint32_t num_queries, std::uint32_t num_targets,
                                    std::uint32_t dim, std::uint64_t seed, double margin_ratio);

}  // namespace oracles
