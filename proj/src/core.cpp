#include "fastnn/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fastnn {

FeatureMap::FeatureMap(std::uint32_t h, std::uint32_t w, std::uint32_t d)
    : height(h), width(w), dim(d) {
    if (h == 0 || w == 0 || d == 0)
        throw std::invalid_argument("FeatureMap: height, width and dim must all be >= 1");
    data.assign(value_count(), 0.0f);
}

FeatureMap FeatureMap::from_data(std::uint32_t h, std::uint32_t w, std::uint32_t d,
                                 std::vector<float> values) {
    FeatureMap m(h, w, d);
    if (values.size() != m.value_count())
        throw std::invalid_argument("FeatureMap: data length must equal height*width*dim");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw std::invalid_argument("FeatureMap: non-finite value at flat index " +
                                        std::to_string(i));
    }
    m.data = std::move(values);
    return m;
}

PixelId pixel_id_from_coord(PixelCoord c, std::uint32_t width) {
    return PixelId{c.h * width + c.w};
}

PixelCoord pixel_coord_from_id(PixelId id, std::uint32_t width) {
    return PixelCoord{id.index % width, id.index / width};
}

BlockPartition make_partition(std::uint32_t total_pixels, std::uint32_t block_size) {
    if (total_pixels == 0) throw std::invalid_argument("make_partition: total_pixels must be >= 1");
    if (block_size == 0) throw std::invalid_argument("make_partition: block_size must be >= 1");
    BlockPartition part;
    part.total_pixels = total_pixels;
    part.block_size = block_size;
    part.ranges.reserve((total_pixels + block_size - 1) / block_size);
    for (std::uint32_t begin = 0; begin < total_pixels; begin += block_size) {
        part.ranges.push_back({begin, std::min(begin + block_size, total_pixels)});
    }
    return part;
}

std::string to_string(DistanceMetric m) {
    return m == DistanceMetric::SquaredL2 ? "l2" : "dot";
}

std::string to_string(PrecisionMode p) {
    return p == PrecisionMode::Full ? "full" : "hybrid";
}

DistanceMetric metric_from_string(const std::string& s) {
    if (s == "l2") return DistanceMetric::SquaredL2;
    if (s == "dot") return DistanceMetric::NegativeDot;
    throw std::invalid_argument("unknown metric '" + s + "' (expected l2 or dot)");
}

PrecisionMode precision_from_string(const std::string& s) {
    if (s == "full") return PrecisionMode::Full;
    if (s == "hybrid") return PrecisionMode::Hybrid;
    throw std::invalid_argument("unknown precision '" + s + "' (expected full or hybrid)");
}

void MatchConfig::validate() const {
    if (grid_stride == 0 && k == 0)
        throw std::invalid_argument("MatchConfig: one of k or grid_stride must be >= 1");
    if (max_iters == 0) throw std::invalid_argument("MatchConfig: max_iters must be >= 1");
    if (!(convergence_fraction > 0.0) || convergence_fraction > 1.0)
        throw std::invalid_argument("MatchConfig: convergence_fraction must be in (0, 1]");
    if (block_size == 0) throw std::invalid_argument("MatchConfig: block_size must be >= 1");
}

bool MatchSet::contains_pair(std::uint32_t i, std::uint32_t j) const {
    return std::any_of(pairs.begin(), pairs.end(),
                       [&](const MatchPair& p) { return p.i == i && p.j == j; });
}

}  // namespace fastnn
