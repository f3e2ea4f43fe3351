#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fastnn/core.hpp"
#include "fastnn/instrument.hpp"

namespace fastnn {

/// Borrowed view over `count` rows of `dim` contiguous floats.
struct DescriptorsView {
    const float* data = nullptr;
    std::uint32_t count = 0;
    std::uint32_t dim = 0;

    static DescriptorsView of(const FeatureMap& m) {
        return {m.data.data(), m.pixel_count(), m.dim};
    }
    DescriptorsView slice(std::uint32_t begin, std::uint32_t end) const {
        return {data + static_cast<std::size_t>(begin) * dim, end - begin, dim};
    }
    const float* row(std::uint32_t r) const {
        return data + static_cast<std::size_t>(r) * dim;
    }
};

/// One query's distances against the scored targets.
struct DistanceRow {
    std::uint32_t query = 0;
    std::span<const float> distances;
};

struct DistanceMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> data;  // row-major rows x cols

    DistanceRow row(std::uint32_t q) const {
        return {q, {data.data() + static_cast<std::size_t>(q) * cols, cols}};
    }
};

/// Pointwise distance between two descriptors. Accumulates with fused
/// multiply-add in element order; every other distance path in the library
/// reproduces this sequence bit for bit.
/// Throws std::invalid_argument on length mismatch.
float dist_scalar(std::span<const float> a, std::span<const float> b, DistanceMetric metric);

struct ArgminResult {
    std::uint32_t index = 0;
    float value = 0.0f;
    bool operator==(const ArgminResult&) const = default;
};

/// Index of the strictly smallest value; exact ties resolve to the smallest
/// index, so the result is independent of any chunked reduction order.
/// Throws std::invalid_argument on an empty row.
ArgminResult argmin_row(std::span<const float> row);
ArgminResult argmin_row(const DistanceRow& row);

/// Scores one query block against one target block and materializes the full
/// distance sub-matrix. Registers exactly one B-block fetch on the counter.
///
/// Hybrid mode rounds both inputs to half precision (round to nearest even),
/// computes differences/products and the accumulation in single precision
/// over the rounded values, rounds each resulting distance to half precision
/// and widens it back -- the cast-in / FP32-aggregate / cast-out contract of
/// mixed-precision matmul hardware. Saturation events (inputs or distances
/// beyond the half range) are counted on the counter and never fatal.
DistanceMatrix block_distances(DescriptorsView query_block, DescriptorsView targets,
                               DistanceMetric metric, PrecisionMode precision,
                               FetchCounter& counter);

namespace detail {

/// Targets repacked for 8-wide lane-parallel scoring: full strips hold 8
/// descriptors interleaved per channel, the remainder rows stay row-major.
struct PackedTargets {
    std::uint32_t count = 0;
    std::uint32_t dim = 0;
    std::uint32_t full_strips = 0;
    std::vector<float> lanes;  // [strip][channel][8]
    std::vector<float> tail;   // (count % 8) rows x dim
    float max_abs = 0.0f;      // largest |value| after any rounding

    std::uint32_t tail_count() const { return count - full_strips * 8; }
};

PackedTargets pack_targets(DescriptorsView targets);
/// Values pre-rounded to half precision and widened; saturations counted.
PackedTargets pack_targets_half(DescriptorsView targets, std::uint64_t& saturation_events);

/// Fused score-and-argmin of a query block against packed targets. Writes
/// nearest/min_dist per query. Identical per-pair arithmetic to fill_block.
void nn_scan_block(const float* queries, std::uint32_t num_queries, std::uint32_t dim,
                   const PackedTargets& targets, DistanceMetric metric, PrecisionMode precision,
                   std::uint32_t* nearest, float* min_dist, std::uint64_t& saturation_events);

/// Materializing variant: writes the num_queries x targets.count distance
/// matrix row-major into out.
void fill_block(const float* queries, std::uint32_t num_queries, std::uint32_t dim,
                const PackedTargets& targets, DistanceMetric metric, PrecisionMode precision,
                float* out, std::uint64_t& saturation_events);

}  // namespace detail

}  // namespace fastnn
