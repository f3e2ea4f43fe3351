#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fastnn/core.hpp"
#include "fastnn/instrument.hpp"
#include "fastnn/kernels.hpp"

namespace fastnn {

/// Nearest target pixel (flat index into B) and its distance, one entry per
/// query pixel in flat order over A.
struct NnResult {
    std::vector<std::uint32_t> nearest;
    std::vector<float> min_dist;
};

enum class NnBackend { Bruteforce, DoubleLoop, SingleLoop, HybridCast };

std::string to_string(NnBackend b);
NnBackend backend_from_string(const std::string& s);

/// Exact all-pairs search, full precision, no blocking, no instrumentation.
/// The quadratic baseline every block-structured variant must reproduce.
NnResult nn_bruteforce(const FeatureMap& A, const FeatureMap& B, DistanceMetric metric);

/// Blocked baseline: outer loop over A-blocks, inner loop over B-blocks, one
/// B-block fetch per inner iteration (ceil(P_A/BS) * ceil(P_B/BS) in total),
/// each inner iteration materializing its distance sub-matrix. Running
/// (min, argmin) is kept across inner blocks with the lowest-global-index tie
/// rule, so results are identical to nn_bruteforce in full precision.
NnResult nn_double_loop(const FeatureMap& A, const FeatureMap& B, const BlockPartition& part_A,
                        const BlockPartition& part_B, DistanceMetric metric,
                        PrecisionMode precision, FetchCounter& counter, unsigned threads = 1);

/// Single loop over A-blocks, each scored against B as a whole in one fused
/// call with no intermediate distance matrix; exactly one B fetch per
/// A-block (ceil(P_A/BS) in total). B is materialized once and reused.
NnResult nn_single_loop(const FeatureMap& A, const FeatureMap& B, const BlockPartition& part_A,
                        DistanceMetric metric, PrecisionMode precision, FetchCounter& counter,
                        unsigned threads = 1);

/// Single-loop structure with mixed precision: inputs cast to half, distances
/// aggregated and compared in single precision. Saturation events are counted
/// on the counter, never fatal.
NnResult nn_hybridcast(const FeatureMap& A, const FeatureMap& B, const BlockPartition& part_A,
                       DistanceMetric metric, FetchCounter& counter, unsigned threads = 1);

// Query-subset variants operating on packed descriptor rows; the FeatureMap
// entry points above are thin wrappers, and the reciprocal matcher feeds
// gathered active-set rows through these.
NnResult nn_query_bruteforce(DescriptorsView queries, DescriptorsView targets,
                             DistanceMetric metric);
NnResult nn_query_double_loop(DescriptorsView queries, DescriptorsView targets,
                              const BlockPartition& part_q, const BlockPartition& part_t,
                              DistanceMetric metric, PrecisionMode precision,
                              FetchCounter& counter, unsigned threads = 1);
NnResult nn_query_single_loop(DescriptorsView queries, DescriptorsView targets,
                              const BlockPartition& part_q, DistanceMetric metric,
                              PrecisionMode precision, FetchCounter& counter,
                              unsigned threads = 1);

}  // namespace fastnn
