#pragma once

#include <cstdint>
#include <vector>

#include "fastnn/core.hpp"
#include "fastnn/instrument.hpp"
#include "fastnn/nn.hpp"

namespace fastnn {

/// Deterministic regular subsample of a map's pixels, row-major order.
///
/// A nonzero stride governs: one sample per stride x stride cell, offset
/// (stride/2, stride/2), count = ceil(H/stride) * ceil(W/stride); positions
/// clamp to the last row/column, and an axis fully covered by one cell
/// samples its centre (a stride larger than both dimensions yields the single
/// centre pixel). With stride zero, k governs and the stride is derived as
/// round(sqrt(H*W/k)) so the grid lands near k samples.
/// Throws std::invalid_argument when both k and stride are zero.
std::vector<PixelId> grid_subsample(const FeatureMap& map, std::uint32_t k, std::uint32_t stride);

/// The complete mutual nearest-neighbor set {(i,j) : NN_D2(i)=j and
/// NN_D1(j)=i}, by exhaustive search with lowest-index ties. Quadratic; the
/// oracle the iterative matcher is checked against.
MatchSet mutual_nn_exact(const FeatureMap& D1, const FeatureMap& D2, DistanceMetric metric);

/// Live state of one matching run: the active sets shrink monotonically and
/// collected pairs stay disjoint from them.
struct MatcherState {
    std::uint32_t iteration = 0;
    std::vector<std::uint32_t> active_u;  // U^t, pixels of I1
    std::vector<std::uint32_t> active_v;  // V^t, pixels of I2
    MatchSet collected;
    std::uint32_t converged_count = 0;
};

struct MatchOutcome {
    MatchSet matches;
    RunReport report;
};

/// Iterative fast reciprocal matching: subsample U^0 from D1, find V^0 in D2,
/// then alternate reverse/forward NN queries, harvesting cycle-consistent
/// pairs (U^{t+1}_i == U^t_i) and removing them from iteration, until the
/// converged fraction reaches cfg.convergence_fraction or cfg.max_iters.
/// Non-converged pairs at termination are discarded: only cycle-verified
/// pairs carry the reciprocity guarantee. With an exact full-precision
/// backend every returned pair is a mutual nearest neighbor.
MatchOutcome reciprocal_match(const FeatureMap& D1, const FeatureMap& D2, const MatchConfig& cfg,
                              NnBackend backend, unsigned threads = 1);

}  // namespace fastnn
