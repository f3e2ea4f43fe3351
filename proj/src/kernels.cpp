#include "fastnn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "fastnn/half.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define FASTNN_AVX2 1
#endif

namespace fastnn {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

inline float round_half_counted(float v, std::uint64_t& saturation_events) {
    bool sat = false;
    const float r = to_half_round(v, sat);
    if (sat) ++saturation_events;
    return r;
}

// Per-pair reference sequence: fused multiply-add over channels in order.
template <bool kL2>
inline float pair_distance_raw(const float* a, const float* b, std::uint32_t dim) {
    float acc = 0.0f;
    for (std::uint32_t i = 0; i < dim; ++i) {
        if constexpr (kL2) {
            const float diff = a[i] - b[i];
            acc = std::fma(diff, diff, acc);
        } else {
            acc = std::fma(a[i], b[i], acc);
        }
    }
    return kL2 ? acc : -acc;
}

#if defined(FASTNN_AVX2)

template <bool kL2>
inline __m256 strip_accumulate(const float* qrow, std::uint32_t dim, const float* strip) {
    __m256 acc = _mm256_setzero_ps();
    for (std::uint32_t i = 0; i < dim; ++i) {
        const __m256 qv = _mm256_broadcast_ss(qrow + i);
        const __m256 tv = _mm256_loadu_ps(strip + static_cast<std::size_t>(i) * 8);
        if constexpr (kL2) {
            const __m256 diff = _mm256_sub_ps(qv, tv);
            acc = _mm256_fmadd_ps(diff, diff, acc);
        } else {
            acc = _mm256_fmadd_ps(qv, tv, acc);
        }
    }
    // sign-bit flip, bit-identical to the scalar negation (also on +/-0)
    return kL2 ? acc : _mm256_xor_ps(acc, _mm256_set1_ps(-0.0f));
}

inline __m256 round_half_vec(__m256 v, std::uint64_t& saturation_events) {
#if defined(__F16C__)
    const __m256 hi = _mm256_set1_ps(65520.0f);
    const __m256 lo = _mm256_set1_ps(-65520.0f);
    const __m256 over = _mm256_or_ps(_mm256_cmp_ps(v, hi, _CMP_GE_OQ),
                                     _mm256_cmp_ps(v, lo, _CMP_LE_OQ));
    const int mask = _mm256_movemask_ps(over);
    if (mask) saturation_events += static_cast<std::uint64_t>(__builtin_popcount(mask));
    v = _mm256_min_ps(v, _mm256_set1_ps(kHalfMax));
    v = _mm256_max_ps(v, _mm256_set1_ps(-kHalfMax));
    return _mm256_cvtph_ps(_mm256_cvtps_ph(v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
#else
    alignas(32) float lanes[8];
    _mm256_storeu_ps(lanes, v);
    for (int l = 0; l < 8; ++l) lanes[l] = round_half_counted(lanes[l], saturation_events);
    return _mm256_loadu_ps(lanes);
#endif
}

#if defined(__F16C__)
// Only valid when the caller proved no lane can reach the half overflow
// threshold; produces bit-identical values to the checked variant there.
inline __m256 round_half_vec_unchecked(__m256 v) {
    return _mm256_cvtph_ps(_mm256_cvtps_ph(v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
}
#endif

#else  // portable fallback

template <bool kL2>
inline void strip_accumulate_scalar(const float* qrow, std::uint32_t dim, const float* strip,
                                    float acc[8]) {
    for (int l = 0; l < 8; ++l) acc[l] = 0.0f;
    for (std::uint32_t i = 0; i < dim; ++i) {
        const float qv = qrow[i];
        const float* tv = strip + static_cast<std::size_t>(i) * 8;
        for (int l = 0; l < 8; ++l) {
            if constexpr (kL2) {
                const float diff = qv - tv[l];
                acc[l] = std::fma(diff, diff, acc[l]);
            } else {
                acc[l] = std::fma(qv, tv[l], acc[l]);
            }
        }
    }
    if constexpr (!kL2)
        for (int l = 0; l < 8; ++l) acc[l] = -acc[l];
}

#endif  // FASTNN_AVX2

// Rounds a query row to half precision for hybrid scoring; returns the
// largest rounded magnitude.
inline float round_query_row(const float* src, std::uint32_t dim, float* dst,
                             std::uint64_t& saturation_events) {
    float max_abs = 0.0f;
    for (std::uint32_t i = 0; i < dim; ++i) {
        dst[i] = round_half_counted(src[i], saturation_events);
        max_abs = std::max(max_abs, std::abs(dst[i]));
    }
    return max_abs;
}

// True when no distance between a query of magnitude qmax and targets of
// magnitude tmax can reach the half overflow threshold, so the final
// rounding cannot saturate. The 1.01 factor generously covers the f32
// accumulation inflation of a nonnegative-term sum.
inline bool rounding_cannot_saturate(float qmax, float tmax, std::uint32_t dim, bool l2) {
    const double q = qmax, t = tmax;
    const double bound = l2 ? (q + t) * (q + t) * dim : q * t * dim;
    return bound * 1.01 < static_cast<double>(kHalfMax);
}

template <bool kL2, bool kHybrid>
void scan_block_impl(const float* queries, std::uint32_t num_queries, std::uint32_t dim,
                     const detail::PackedTargets& targets, std::uint32_t* nearest, float* min_dist,
                     std::uint64_t& saturation_events) {
    std::vector<float> qscratch(kHybrid ? dim : 0);
    for (std::uint32_t q = 0; q < num_queries; ++q) {
        const float* qrow = queries + static_cast<std::size_t>(q) * dim;
        [[maybe_unused]] bool no_saturation = false;
        if constexpr (kHybrid) {
            const float qmax = round_query_row(qrow, dim, qscratch.data(), saturation_events);
            qrow = qscratch.data();
            no_saturation = rounding_cannot_saturate(qmax, targets.max_abs, dim, kL2);
        }

        alignas(32) float bv8[8];
        alignas(32) std::uint32_t bi8[8];
        for (int l = 0; l < 8; ++l) {
            bv8[l] = kInf;
            bi8[l] = static_cast<std::uint32_t>(l);
        }

#if defined(FASTNN_AVX2)
        __m256 vbest = _mm256_set1_ps(kInf);
        __m256i vbesti = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bi8));
        const __m256i lane_ids = vbesti;
        auto scan_strips = [&](auto round_dist) {
            for (std::uint32_t s = 0; s < targets.full_strips; ++s) {
                const float* strip = targets.lanes.data() + static_cast<std::size_t>(s) * dim * 8;
                __m256 dist = round_dist(strip_accumulate<kL2>(qrow, dim, strip));
                const __m256 lt = _mm256_cmp_ps(dist, vbest, _CMP_LT_OQ);
                vbest = _mm256_blendv_ps(vbest, dist, lt);
                const __m256i idx = _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(s * 8)),
                                                     lane_ids);
                vbesti = _mm256_blendv_epi8(vbesti, idx, _mm256_castps_si256(lt));
            }
        };
        if constexpr (kHybrid) {
#if defined(__F16C__)
            if (no_saturation)
                scan_strips([](__m256 v) { return round_half_vec_unchecked(v); });
            else
                scan_strips([&](__m256 v) { return round_half_vec(v, saturation_events); });
#else
            scan_strips([&](__m256 v) { return round_half_vec(v, saturation_events); });
#endif
        } else {
            scan_strips([](__m256 v) { return v; });
        }
        _mm256_storeu_ps(bv8, vbest);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(bi8), vbesti);
#else
        for (std::uint32_t s = 0; s < targets.full_strips; ++s) {
            const float* strip = targets.lanes.data() + static_cast<std::size_t>(s) * dim * 8;
            float acc[8];
            strip_accumulate_scalar<kL2>(qrow, dim, strip, acc);
            for (int l = 0; l < 8; ++l) {
                float dist = acc[l];
                if constexpr (kHybrid) dist = round_half_counted(dist, saturation_events);
                if (dist < bv8[l]) {
                    bv8[l] = dist;
                    bi8[l] = s * 8 + static_cast<std::uint32_t>(l);
                }
            }
        }
#endif
        // Fold lanes: (value, index) lexicographic minimum equals the
        // sequential lowest-index argmin.
        float best = kInf;
        std::uint32_t best_idx = 0;
        bool any = false;
        if (targets.full_strips > 0) {
            best = bv8[0];
            best_idx = bi8[0];
            any = true;
            for (int l = 1; l < 8; ++l) {
                if (bv8[l] < best || (bv8[l] == best && bi8[l] < best_idx)) {
                    best = bv8[l];
                    best_idx = bi8[l];
                }
            }
        }
        // Remainder targets, highest indices: strict less keeps earlier ties.
        const std::uint32_t tail_base = targets.full_strips * 8;
        for (std::uint32_t t = 0; t < targets.tail_count(); ++t) {
            const float* trow = targets.tail.data() + static_cast<std::size_t>(t) * dim;
            float dist = pair_distance_raw<kL2>(qrow, trow, dim);
            if constexpr (kHybrid) dist = round_half_counted(dist, saturation_events);
            if (!any || dist < best) {
                best = dist;
                best_idx = tail_base + t;
                any = true;
            }
        }
        nearest[q] = best_idx;
        min_dist[q] = best;
    }
}

template <bool kL2, bool kHybrid>
void fill_block_impl(const float* queries, std::uint32_t num_queries, std::uint32_t dim,
                     const detail::PackedTargets& targets, float* out,
                     std::uint64_t& saturation_events) {
    const std::uint32_t cols = targets.count;
    std::vector<float> qscratch(kHybrid ? dim : 0);
    for (std::uint32_t q = 0; q < num_queries; ++q) {
        const float* qrow = queries + static_cast<std::size_t>(q) * dim;
        if constexpr (kHybrid) {
            round_query_row(qrow, dim, qscratch.data(), saturation_events);
            qrow = qscratch.data();
        }
        float* orow = out + static_cast<std::size_t>(q) * cols;

        for (std::uint32_t s = 0; s < targets.full_strips; ++s) {
            const float* strip = targets.lanes.data() + static_cast<std::size_t>(s) * dim * 8;
#if defined(FASTNN_AVX2)
            __m256 dist = strip_accumulate<kL2>(qrow, dim, strip);
            if constexpr (kHybrid) dist = round_half_vec(dist, saturation_events);
            _mm256_storeu_ps(orow + static_cast<std::size_t>(s) * 8, dist);
#else
            float acc[8];
            strip_accumulate_scalar<kL2>(qrow, dim, strip, acc);
            for (int l = 0; l < 8; ++l) {
                float dist = acc[l];
                if constexpr (kHybrid) dist = round_half_counted(dist, saturation_events);
                orow[s * 8 + static_cast<std::uint32_t>(l)] = dist;
            }
#endif
        }
        const std::uint32_t tail_base = targets.full_strips * 8;
        for (std::uint32_t t = 0; t < targets.tail_count(); ++t) {
            const float* trow = targets.tail.data() + static_cast<std::size_t>(t) * dim;
            float dist = pair_distance_raw<kL2>(qrow, trow, dim);
            if constexpr (kHybrid) dist = round_half_counted(dist, saturation_events);
            orow[tail_base + t] = dist;
        }
    }
}

}  // namespace

float dist_scalar(std::span<const float> a, std::span<const float> b, DistanceMetric metric) {
    if (a.size() != b.size())
        throw std::invalid_argument("dist_scalar: descriptor lengths differ (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                    ")");
    if (metric == DistanceMetric::SquaredL2)
        return pair_distance_raw<true>(a.data(), b.data(), static_cast<std::uint32_t>(a.size()));
    return pair_distance_raw<false>(a.data(), b.data(), static_cast<std::uint32_t>(a.size()));
}

ArgminResult argmin_row(std::span<const float> row) {
    if (row.empty()) throw std::invalid_argument("argmin_row: empty row");
    std::uint32_t idx = 0;
    float best = row[0];
    for (std::uint32_t i = 1; i < row.size(); ++i) {
        if (row[i] < best) {
            best = row[i];
            idx = i;
        }
    }
    return {idx, best};
}

ArgminResult argmin_row(const DistanceRow& row) { return argmin_row(row.distances); }

namespace detail {

PackedTargets pack_targets(DescriptorsView targets) {
    PackedTargets p;
    p.count = targets.count;
    p.dim = targets.dim;
    p.full_strips = targets.count / 8;
    p.lanes.resize(static_cast<std::size_t>(p.full_strips) * targets.dim * 8);
    for (std::uint32_t s = 0; s < p.full_strips; ++s) {
        for (std::uint32_t l = 0; l < 8; ++l) {
            const float* src = targets.row(s * 8 + l);
            float* dst = p.lanes.data() + static_cast<std::size_t>(s) * targets.dim * 8;
            for (std::uint32_t i = 0; i < targets.dim; ++i) dst[i * 8 + l] = src[i];
        }
    }
    const std::uint32_t tail = targets.count - p.full_strips * 8;
    p.tail.resize(static_cast<std::size_t>(tail) * targets.dim);
    if (tail)
        std::memcpy(p.tail.data(), targets.row(p.full_strips * 8),
                    p.tail.size() * sizeof(float));
    for (const float v : p.lanes) p.max_abs = std::max(p.max_abs, std::abs(v));
    for (const float v : p.tail) p.max_abs = std::max(p.max_abs, std::abs(v));
    return p;
}

PackedTargets pack_targets_half(DescriptorsView targets, std::uint64_t& saturation_events) {
    PackedTargets p = pack_targets(targets);
    p.max_abs = 0.0f;
    for (auto& v : p.lanes) {
        v = round_half_counted(v, saturation_events);
        p.max_abs = std::max(p.max_abs, std::abs(v));
    }
    for (auto& v : p.tail) {
        v = round_half_counted(v, saturation_events);
        p.max_abs = std::max(p.max_abs, std::abs(v));
    }
    return p;
}

void nn_scan_block(const float* queries, std::uint32_t num_queries, std::uint32_t dim,
                   const PackedTargets& targets, DistanceMetric metric, PrecisionMode precision,
                   std::uint32_t* nearest, float* min_dist, std::uint64_t& saturation_events) {
    const bool l2 = metric == DistanceMetric::SquaredL2;
    const bool hybrid = precision == PrecisionMode::Hybrid;
    if (l2 && hybrid)
        scan_block_impl<true, true>(queries, num_queries, dim, targets, nearest, min_dist,
                                    saturation_events);
    else if (l2)
        scan_block_impl<true, false>(queries, num_queries, dim, targets, nearest, min_dist,
                                     saturation_events);
    else if (hybrid)
        scan_block_impl<false, true>(queries, num_queries, dim, targets, nearest, min_dist,
                                     saturation_events);
    else
        scan_block_impl<false, false>(queries, num_queries, dim, targets, nearest, min_dist,
                                      saturation_events);
}

void fill_block(const float* queries, std::uint32_t num_queries, std::uint32_t dim,
                const PackedTargets& targets, DistanceMetric metric, PrecisionMode precision,
                float* out, std::uint64_t& saturation_events) {
    const bool l2 = metric == DistanceMetric::SquaredL2;
    const bool hybrid = precision == PrecisionMode::Hybrid;
    if (l2 && hybrid)
        fill_block_impl<true, true>(queries, num_queries, dim, targets, out, saturation_events);
    else if (l2)
        fill_block_impl<true, false>(queries, num_queries, dim, targets, out, saturation_events);
    else if (hybrid)
        fill_block_impl<false, true>(queries, num_queries, dim, targets, out, saturation_events);
    else
        fill_block_impl<false, false>(queries, num_queries, dim, targets, out, saturation_events);
}

}  // namespace detail

DistanceMatrix block_distances(DescriptorsView query_block, DescriptorsView targets,
                               DistanceMetric metric, PrecisionMode precision,
                               FetchCounter& counter) {
    if (query_block.dim != targets.dim)
        throw std::invalid_argument("block_distances: descriptor dim mismatch (" +
                                    std::to_string(query_block.dim) + " vs " +
                                    std::to_string(targets.dim) + ")");
    if (query_block.count == 0 || targets.count == 0)
        throw std::invalid_argument("block_distances: empty block");

    record_fetch(counter, FetchKind::B);
    std::uint64_t sat = 0;
    const detail::PackedTargets packed = precision == PrecisionMode::Hybrid
                                             ? detail::pack_targets_half(targets, sat)
                                             : detail::pack_targets(targets);
    DistanceMatrix m;
    m.rows = query_block.count;
    m.cols = targets.count;
    m.data.resize(static_cast<std::size_t>(m.rows) * m.cols);
    detail::fill_block(query_block.data, query_block.count, query_block.dim, packed, metric,
                       precision, m.data.data(), sat);
    if (sat) counter.half_saturation_events.fetch_add(sat, std::memory_order_relaxed);
    return m;
}

}  // namespace fastnn
