#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fastnn {

/// Dense H x W grid of d-dimensional descriptors for one image.
/// Storage is row-major, pixel-major then channel, single precision.
/// Instances are treated as immutable once filled; concurrent readers are safe.
struct FeatureMap {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t dim = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(std::uint32_t height, std::uint32_t width, std::uint32_t dim);

    /// Takes ownership of `values`; throws std::invalid_argument if the size
    /// does not equal height*width*dim or any value is non-finite.
    static FeatureMap from_data(std::uint32_t height, std::uint32_t width, std::uint32_t dim,
                                std::vector<float> values);

    std::uint32_t pixel_count() const { return height * width; }
    std::size_t value_count() const { return static_cast<std::size_t>(pixel_count()) * dim; }

    const float* descriptor(std::uint32_t flat_pixel) const {
        return data.data() + static_cast<std::size_t>(flat_pixel) * dim;
    }
    std::span<const float> descriptor_span(std::uint32_t flat_pixel) const {
        return {descriptor(flat_pixel), dim};
    }
};

struct PixelCoord {
    std::uint32_t w = 0;  // column
    std::uint32_t h = 0;  // row
    bool operator==(const PixelCoord&) const = default;
};

/// Flat row-major pixel index in [0, H*W). The universal index currency;
/// coordinates are a view.
struct PixelId {
    std::uint32_t index = 0;
    bool operator==(const PixelId&) const = default;
};

PixelId pixel_id_from_coord(PixelCoord c, std::uint32_t width);
PixelCoord pixel_coord_from_id(PixelId id, std::uint32_t width);

struct BlockRange {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;  // exclusive
    std::uint32_t size() const { return end - begin; }
    bool operator==(const BlockRange&) const = default;
};

/// Division of [0, total_pixels) into contiguous blocks of block_size pixels;
/// the last block may be short, never padded (padding would perturb argmin
/// results with sentinel values).
struct BlockPartition {
    std::uint32_t total_pixels = 0;
    std::uint32_t block_size = 0;
    std::vector<BlockRange> ranges;

    std::uint32_t num_blocks() const { return static_cast<std::uint32_t>(ranges.size()); }
};

/// Throws std::invalid_argument when total_pixels or block_size is zero.
BlockPartition make_partition(std::uint32_t total_pixels, std::uint32_t block_size);

enum class DistanceMetric {
    SquaredL2,    // sum_i (a_i - b_i)^2
    NegativeDot,  // -sum_i a_i * b_i, descriptors consumed as-is
};

enum class PrecisionMode {
    Full,    // single precision end to end
    Hybrid,  // half precision distances, single precision aggregation and argmin
};

std::string to_string(DistanceMetric m);
std::string to_string(PrecisionMode p);
DistanceMetric metric_from_string(const std::string& s);
PrecisionMode precision_from_string(const std::string& s);

/// Matching configuration. Exactly one of grid_stride / k governs the initial
/// subsample: a nonzero grid_stride wins and k is derived from the grid.
struct MatchConfig {
    std::uint32_t k = 0;
    std::uint32_t grid_stride = 8;
    std::uint32_t max_iters = 10;
    double convergence_fraction = 0.99;
    DistanceMetric metric = DistanceMetric::SquaredL2;
    PrecisionMode precision = PrecisionMode::Full;
    std::uint32_t block_size = 4096;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

struct MatchPair {
    std::uint32_t i = 0;          // flat pixel in the first map
    std::uint32_t j = 0;          // flat pixel in the second map
    std::uint32_t iteration = 0;  // iteration at which the pair converged
    bool operator==(const MatchPair&) const = default;
};

/// Set of reciprocal matches. No first-map pixel and no second-map pixel
/// appears twice; converged points never re-enter iteration.
struct MatchSet {
    std::vector<MatchPair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool contains_pair(std::uint32_t i, std::uint32_t j) const;
};

}  // namespace fastnn
