#include "fastnn/nn.hpp"

#include <stdexcept>
#include <thread>

namespace fastnn {

namespace {

void check_dims(std::uint32_t da, std::uint32_t db, const char* who) {
    if (da != db)
        throw std::invalid_argument(std::string(who) + ": descriptor dim mismatch (" +
                                    std::to_string(da) + " vs " + std::to_string(db) + ")");
}

void check_partition(const BlockPartition& part, std::uint32_t count, const char* who) {
    if (part.total_pixels != count)
        throw std::invalid_argument(std::string(who) + ": partition covers " +
                                    std::to_string(part.total_pixels) + " pixels but the map has " +
                                    std::to_string(count));
    if (part.ranges.empty()) throw std::invalid_argument(std::string(who) + ": empty partition");
}

// Runs fn(block_index) over all blocks, optionally on several workers.
// Blocks map to disjoint output ranges, so any schedule yields identical
// results.
template <typename Fn>
void for_each_block(std::uint32_t num_blocks, unsigned threads, Fn&& fn) {
    if (threads <= 1 || num_blocks <= 1) {
        for (std::uint32_t b = 0; b < num_blocks; ++b) fn(b);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, num_blocks);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::uint32_t b = w; b < num_blocks; b += workers) fn(b);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

std::string to_string(NnBackend b) {
    switch (b) {
        case NnBackend::Bruteforce: return "bruteforce";
        case NnBackend::DoubleLoop: return "double";
        case NnBackend::SingleLoop: return "single";
        case NnBackend::HybridCast: return "hybrid";
    }
    return "?";
}

NnBackend backend_from_string(const std::string& s) {
    if (s == "bruteforce") return NnBackend::Bruteforce;
    if (s == "double") return NnBackend::DoubleLoop;
    if (s == "single") return NnBackend::SingleLoop;
    if (s == "hybrid") return NnBackend::HybridCast;
    throw std::invalid_argument("unknown backend '" + s +
                                "' (expected bruteforce, double, single or hybrid)");
}

NnResult nn_query_bruteforce(DescriptorsView queries, DescriptorsView targets,
                             DistanceMetric metric) {
    check_dims(queries.dim, targets.dim, "nn_bruteforce");
    if (targets.count == 0) throw std::invalid_argument("nn_bruteforce: no target pixels");
    NnResult r;
    r.nearest.resize(queries.count);
    r.min_dist.resize(queries.count);
    for (std::uint32_t q = 0; q < queries.count; ++q) {
        std::span<const float> qrow{queries.row(q), queries.dim};
        float best = dist_scalar(qrow, {targets.row(0), targets.dim}, metric);
        std::uint32_t best_idx = 0;
        for (std::uint32_t t = 1; t < targets.count; ++t) {
            const float d = dist_scalar(qrow, {targets.row(t), targets.dim}, metric);
            if (d < best) {
                best = d;
                best_idx = t;
            }
        }
        r.nearest[q] = best_idx;
        r.min_dist[q] = best;
    }
    return r;
}

NnResult nn_query_double_loop(DescriptorsView queries, DescriptorsView targets,
                              const BlockPartition& part_q, const BlockPartition& part_t,
                              DistanceMetric metric, PrecisionMode precision,
                              FetchCounter& counter, unsigned threads) {
    check_dims(queries.dim, targets.dim, "nn_double_loop");
    check_partition(part_q, queries.count, "nn_double_loop(A)");
    check_partition(part_t, targets.count, "nn_double_loop(B)");

    NnResult r;
    r.nearest.resize(queries.count);
    r.min_dist.resize(queries.count);

    for_each_block(part_q.num_blocks(), threads, [&](std::uint32_t bi) {
        const BlockRange qr = part_q.ranges[bi];
        record_fetch(counter, FetchKind::A);
        const DescriptorsView qblock = queries.slice(qr.begin, qr.end);

        std::vector<float> best(qblock.count, 0.0f);
        std::vector<std::uint32_t> best_idx(qblock.count, 0);
        bool first_block = true;

        for (const BlockRange& tr : part_t.ranges) {
            // block_distances registers the B-block fetch and materializes
            // the sub-matrix; a fresh buffer every inner iteration is the
            // baseline's redundant-allocation behaviour.
            const DistanceMatrix m = block_distances(qblock, targets.slice(tr.begin, tr.end),
                                                     metric, precision, counter);
            for (std::uint32_t q = 0; q < qblock.count; ++q) {
                const ArgminResult local = argmin_row(m.row(q));
                const std::uint32_t global_idx = tr.begin + local.index;
                if (first_block || local.value < best[q]) {
                    best[q] = local.value;
                    best_idx[q] = global_idx;
                }
            }
            first_block = false;
        }
        for (std::uint32_t q = 0; q < qblock.count; ++q) {
            r.nearest[qr.begin + q] = best_idx[q];
            r.min_dist[qr.begin + q] = best[q];
        }
    });
    return r;
}

NnResult nn_query_single_loop(DescriptorsView queries, DescriptorsView targets,
                              const BlockPartition& part_q, DistanceMetric metric,
                              PrecisionMode precision, FetchCounter& counter, unsigned threads) {
    check_dims(queries.dim, targets.dim, "nn_single_loop");
    check_partition(part_q, queries.count, "nn_single_loop(A)");
    if (targets.count == 0) throw std::invalid_argument("nn_single_loop: no target pixels");

    // B handled as a whole: materialized (and in hybrid mode cast) once for
    // the run, reused by every A-block.
    std::uint64_t pack_sat = 0;
    const detail::PackedTargets packed = precision == PrecisionMode::Hybrid
                                             ? detail::pack_targets_half(targets, pack_sat)
                                             : detail::pack_targets(targets);
    if (pack_sat) counter.half_saturation_events.fetch_add(pack_sat, std::memory_order_relaxed);

    NnResult r;
    r.nearest.resize(queries.count);
    r.min_dist.resize(queries.count);

    for_each_block(part_q.num_blocks(), threads, [&](std::uint32_t bi) {
        const BlockRange qr = part_q.ranges[bi];
        record_fetch(counter, FetchKind::A);
        record_fetch(counter, FetchKind::B);  // one whole-B fetch per A-block
        std::uint64_t sat = 0;
        detail::nn_scan_block(queries.row(qr.begin), qr.size(), queries.dim, packed, metric,
                              precision, r.nearest.data() + qr.begin, r.min_dist.data() + qr.begin,
                              sat);
        if (sat) counter.half_saturation_events.fetch_add(sat, std::memory_order_relaxed);
    });
    return r;
}

NnResult nn_bruteforce(const FeatureMap& A, const FeatureMap& B, DistanceMetric metric) {
    return nn_query_bruteforce(DescriptorsView::of(A), DescriptorsView::of(B), metric);
}

NnResult nn_double_loop(const FeatureMap& A, const FeatureMap& B, const BlockPartition& part_A,
                        const BlockPartition& part_B, DistanceMetric metric,
                        PrecisionMode precision, FetchCounter& counter, unsigned threads) {
    return nn_query_double_loop(DescriptorsView::of(A), DescriptorsView::of(B), part_A, part_B,
                                metric, precision, counter, threads);
}

NnResult nn_single_loop(const FeatureMap& A, const FeatureMap& B, const BlockPartition& part_A,
                        DistanceMetric metric, PrecisionMode precision, FetchCounter& counter,
                        unsigned threads) {
    return nn_query_single_loop(DescriptorsView::of(A), DescriptorsView::of(B), part_A, metric,
                                precision, counter, threads);
}

NnResult nn_hybridcast(const FeatureMap& A, const FeatureMap& B, const BlockPartition& part_A,
                       DistanceMetric metric, FetchCounter& counter, unsigned threads) {
    return nn_single_loop(A, B, part_A, metric, PrecisionMode::Hybrid, counter, threads);
}

}  // namespace fastnn
