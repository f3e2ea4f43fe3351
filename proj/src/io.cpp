#include "fastnn/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>

#include <json.hpp>

namespace fastnn {

namespace {

constexpr char kMagic[4] = {'F', 'M', 'A', 'P'};

void put_u32(unsigned char* out, std::uint32_t v) {
    out[0] = static_cast<unsigned char>(v);
    out[1] = static_cast<unsigned char>(v >> 8);
    out[2] = static_cast<unsigned char>(v >> 16);
    out[3] = static_cast<unsigned char>(v >> 24);
}

std::uint32_t get_u32(const unsigned char* in) {
    return static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
           (static_cast<std::uint32_t>(in[2]) << 16) | (static_cast<std::uint32_t>(in[3]) << 24);
}

}  // namespace

std::size_t write_fmap(const FeatureMap& map, std::ostream& sink) {
    unsigned char header[kFmapHeaderBytes];
    std::memcpy(header, kMagic, 4);
    put_u32(header + 4, kFmapVersion);
    put_u32(header + 8, map.height);
    put_u32(header + 12, map.width);
    put_u32(header + 16, map.dim);
    header[20] = kFmapDtypeF32;

    sink.write(reinterpret_cast<const char*>(header), kFmapHeaderBytes);
    if (!sink) throw FmapError(FmapErrorKind::Io, "fmap write failed after 0 bytes", 0);

    std::size_t written = kFmapHeaderBytes;
    std::vector<unsigned char> buf;
    constexpr std::size_t kChunkValues = 1 << 16;
    for (std::size_t off = 0; off < map.data.size(); off += kChunkValues) {
        const std::size_t n = std::min(kChunkValues, map.data.size() - off);
        buf.resize(n * 4);
        for (std::size_t i = 0; i < n; ++i)
            put_u32(buf.data() + i * 4, std::bit_cast<std::uint32_t>(map.data[off + i]));
        sink.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(n * 4));
        if (!sink)
            throw FmapError(FmapErrorKind::Io,
                            "fmap write failed after " + std::to_string(written) + " bytes",
                            written);
        written += n * 4;
    }
    return written;
}

FeatureMap read_fmap(std::istream& source) {
    unsigned char header[kFmapHeaderBytes];
    source.read(reinterpret_cast<char*>(header), kFmapHeaderBytes);
    if (source.gcount() != static_cast<std::streamsize>(kFmapHeaderBytes))
        throw FmapError(FmapErrorKind::Truncated,
                        "truncated fmap: header needs 21 bytes, got " +
                            std::to_string(source.gcount()));

    if (std::memcmp(header, kMagic, 4) != 0)
        throw FmapError(FmapErrorKind::BadMagic, "bad magic: expected \"FMAP\"");
    const std::uint32_t version = get_u32(header + 4);
    if (version != kFmapVersion)
        throw FmapError(FmapErrorKind::BadVersion,
                        "unsupported fmap version " + std::to_string(version));
    const std::uint32_t height = get_u32(header + 8);
    const std::uint32_t width = get_u32(header + 12);
    const std::uint32_t dim = get_u32(header + 16);
    if (height == 0 || width == 0 || dim == 0)
        throw FmapError(FmapErrorKind::BadDims, "fmap dimensions must all be >= 1");
    if (static_cast<std::uint64_t>(height) * width > std::numeric_limits<std::uint32_t>::max())
        throw FmapError(FmapErrorKind::BadDims, "fmap pixel count overflows 32 bits");
    if (header[20] != kFmapDtypeF32)
        throw FmapError(FmapErrorKind::BadDtype,
                        "unsupported dtype tag " + std::to_string(header[20]));

    const std::uint64_t values =
        static_cast<std::uint64_t>(height) * width * static_cast<std::uint64_t>(dim);
    std::vector<unsigned char> payload(values * 4);
    source.read(reinterpret_cast<char*>(payload.data()),
                static_cast<std::streamsize>(payload.size()));
    if (source.gcount() != static_cast<std::streamsize>(payload.size()))
        throw FmapError(FmapErrorKind::Truncated,
                        "truncated fmap: payload needs " + std::to_string(payload.size()) +
                            " bytes, got " + std::to_string(source.gcount()));
    char extra;
    source.read(&extra, 1);
    if (source.gcount() != 0)
        throw FmapError(FmapErrorKind::TrailingData, "trailing data after fmap payload");

    std::vector<float> data(values);
    for (std::uint64_t i = 0; i < values; ++i) {
        data[i] = std::bit_cast<float>(get_u32(payload.data() + i * 4));
        if (!std::isfinite(data[i]))
            throw FmapError(FmapErrorKind::NonFinite,
                            "non-finite value at flat index " + std::to_string(i), i);
    }

    FeatureMap m(height, width, dim);
    m.data = std::move(data);
    return m;
}

void save_fmap(const FeatureMap& map, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FmapError(FmapErrorKind::Io, "cannot open " + path.string() + " for writing");
    write_fmap(map, f);
}

FeatureMap load_fmap(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FmapError(FmapErrorKind::Io, "cannot open " + path.string() + " for reading");
    return read_fmap(f);
}

FeatureMap gen_random(std::uint32_t height, std::uint32_t width, std::uint32_t dim,
                      std::uint64_t seed, bool normalize) {
    FeatureMap m(height, width, dim);
    std::mt19937 rng(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32)));
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    for (auto& v : m.data) v = gauss(rng);
    if (normalize) {
        for (std::uint32_t p = 0; p < m.pixel_count(); ++p) {
            float* row = m.data.data() + static_cast<std::size_t>(p) * dim;
            double sq = 0.0;
            for (std::uint32_t i = 0; i < dim; ++i) sq += static_cast<double>(row[i]) * row[i];
            if (sq < 1e-24) {
                row[0] = 1.0f;
                for (std::uint32_t i = 1; i < dim; ++i) row[i] = 0.0f;
            } else {
                const float inv = static_cast<float>(1.0 / std::sqrt(sq));
                for (std::uint32_t i = 0; i < dim; ++i) row[i] *= inv;
            }
        }
    }
    return m;
}

PermuteMode permute_from_string(const std::string& s) {
    if (s == "identity") return PermuteMode::Identity;
    if (s == "random") return PermuteMode::Random;
    throw std::invalid_argument("unknown permute mode '" + s +
                                "' (expected identity or random)");
}

std::string to_string(PermuteMode m) {
    return m == PermuteMode::Identity ? "identity" : "random";
}

MatchedPair gen_matched_pair(std::uint32_t height, std::uint32_t width, std::uint32_t dim,
                             std::uint64_t seed, double noise_sigma, PermuteMode permute) {
    if (noise_sigma < 0.0)
        throw std::invalid_argument("gen_matched_pair: noise_sigma must be >= 0");

    MatchedPair pair;
    pair.d1 = gen_random(height, width, dim, seed, /*normalize=*/true);
    const std::uint32_t pixels = pair.d1.pixel_count();

    std::vector<std::uint32_t> dest(pixels);
    for (std::uint32_t i = 0; i < pixels; ++i) dest[i] = i;
    std::mt19937 rng(static_cast<std::mt19937::result_type>((seed * 2654435761ULL + 1) ^
                                                            (seed >> 32)));
    if (permute == PermuteMode::Random) {
        for (std::uint32_t i = pixels - 1; i > 0; --i) {
            std::uniform_int_distribution<std::uint32_t> pick(0, i);
            std::swap(dest[i], dest[pick(rng)]);
        }
    }

    pair.d2 = FeatureMap(height, width, dim);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    const float sigma = static_cast<float>(noise_sigma);
    for (std::uint32_t i = 0; i < pixels; ++i) {
        const float* src = pair.d1.descriptor(i);
        float* dst = pair.d2.data.data() + static_cast<std::size_t>(dest[i]) * dim;
        if (sigma > 0.0f) {
            for (std::uint32_t c = 0; c < dim; ++c) dst[c] = src[c] + sigma * gauss(rng);
        } else {
            std::memcpy(dst, src, dim * sizeof(float));
        }
    }

    pair.truth.height = height;
    pair.truth.width = width;
    pair.truth.dim = dim;
    pair.truth.noise_sigma = noise_sigma;
    pair.truth.permute = permute;
    pair.truth.map = std::move(dest);
    return pair;
}

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["height"] = truth.height;
    j["width"] = truth.width;
    j["dim"] = truth.dim;
    j["noise_sigma"] = truth.noise_sigma;
    j["permute"] = to_string(truth.permute);
    j["map"] = truth.map;
    std::ofstream f(path);
    if (!f) throw FmapError(FmapErrorKind::Io, "cannot open " + path.string() + " for writing");
    f << j.dump(2) << "\n";
    if (!f) throw FmapError(FmapErrorKind::Io, "write failed: " + path.string());
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw FmapError(FmapErrorKind::Io, "cannot open " + path.string() + " for reading");
    const auto j = nlohmann::json::parse(f);
    GroundTruth t;
    t.height = j.at("height").get<std::uint32_t>();
    t.width = j.at("width").get<std::uint32_t>();
    t.dim = j.at("dim").get<std::uint32_t>();
    t.noise_sigma = j.at("noise_sigma").get<double>();
    t.permute = permute_from_string(j.at("permute").get<std::string>());
    t.map = j.at("map").get<std::vector<std::uint32_t>>();
    return t;
}

void save_manifest(const PairManifest& manifest, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["fmap1"] = manifest.fmap1;
    j["fmap2"] = manifest.fmap2;
    if (manifest.ground_truth.empty())
        j["ground_truth"] = nullptr;
    else
        j["ground_truth"] = manifest.ground_truth;
    std::ofstream f(path);
    if (!f) throw FmapError(FmapErrorKind::Io, "cannot open " + path.string() + " for writing");
    f << j.dump(2) << "\n";
    if (!f) throw FmapError(FmapErrorKind::Io, "write failed: " + path.string());
}

PairManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw FmapError(FmapErrorKind::Io, "cannot open " + path.string() + " for reading");
    const auto j = nlohmann::json::parse(f);
    PairManifest m;
    m.fmap1 = j.at("fmap1").get<std::string>();
    m.fmap2 = j.at("fmap2").get<std::string>();
    const auto& gt = j.at("ground_truth");
    if (!gt.is_null()) m.ground_truth = gt.get<std::string>();
    return m;
}

}  // namespace fastnn
