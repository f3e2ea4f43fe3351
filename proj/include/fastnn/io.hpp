#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastnn/core.hpp"

namespace fastnn {

// FmapFile binary layout (version 1), little-endian throughout:
//   bytes 0..3   magic "FMAP"
//   bytes 4..7   format version, u32
//   bytes 8..11  height, u32
//   bytes 12..15 width, u32
//   bytes 16..19 dim, u32
//   byte  20     dtype tag, u8 (0 = single precision)
//   bytes 21..   height*width*dim f32 scalars, row-major, pixel-major then
//                channel
// Half precision is a compute mode, never a storage mode.

inline constexpr std::uint32_t kFmapVersion = 1;
inline constexpr std::uint8_t kFmapDtypeF32 = 0;
inline constexpr std::size_t kFmapHeaderBytes = 21;

enum class FmapErrorKind {
    BadMagic,
    BadVersion,
    BadDtype,
    BadDims,
    Truncated,
    TrailingData,
    NonFinite,
    Io,
};

class FmapError : public std::runtime_error {
  public:
    FmapError(FmapErrorKind kind, const std::string& message, std::uint64_t detail = 0)
        : std::runtime_error(message), kind_(kind), detail_(detail) {}

    FmapErrorKind kind() const { return kind_; }
    /// NonFinite: offending flat scalar index. Io on write: bytes written.
    std::uint64_t detail() const { return detail_; }

  private:
    FmapErrorKind kind_;
    std::uint64_t detail_;
};

/// Emits header + payload; returns the byte count (21 + 4*H*W*d).
/// Throws FmapError{Io} carrying the bytes written on sink failure.
std::size_t write_fmap(const FeatureMap& map, std::ostream& sink);

/// Parses and validates a FmapFile; every malformation class raises a
/// distinct FmapErrorKind.
FeatureMap read_fmap(std::istream& source);

void save_fmap(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap load_fmap(const std::filesystem::path& path);

/// Deterministic pseudo-random map; with normalize every descriptor has unit
/// L2 norm (within 1e-6).
FeatureMap gen_random(std::uint32_t height, std::uint32_t width, std::uint32_t dim,
                      std::uint64_t seed, bool normalize);

enum class PermuteMode { Identity, Random };

PermuteMode permute_from_string(const std::string& s);
std::string to_string(PermuteMode m);

/// Known correspondence from first-map pixels to second-map pixels.
struct GroundTruth {
    std::uint32_t height = 0, width = 0, dim = 0;
    double noise_sigma = 0.0;
    PermuteMode permute = PermuteMode::Identity;
    std::vector<std::uint32_t> map;  // map[i] = matching pixel of i
};

struct MatchedPair {
    FeatureMap d1;
    FeatureMap d2;
    GroundTruth truth;
};

/// D2 holds a permutation of D1's unit-norm descriptors plus Gaussian noise
/// of the given sigma; the returned truth records the permutation. With zero
/// noise and distinct descriptors, exhaustive mutual NN recovers the
/// permutation exactly.
MatchedPair gen_matched_pair(std::uint32_t height, std::uint32_t width, std::uint32_t dim,
                             std::uint64_t seed, double noise_sigma, PermuteMode permute);

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// JSON manifest naming the two feature map files of a pair and, optionally,
/// their ground truth file.
struct PairManifest {
    std::string fmap1;
    std::string fmap2;
    std::string ground_truth;  // empty = absent
};

void save_manifest(const PairManifest& manifest, const std::filesystem::path& path);
PairManifest load_manifest(const std::filesystem::path& path);

}  // namespace fastnn
