#include "fastnn/reciprocal.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace fastnn {

namespace {

std::vector<std::uint32_t> axis_positions(std::uint32_t extent, std::uint32_t stride) {
    const std::uint32_t n = (extent + stride - 1) / stride;
    std::vector<std::uint32_t> pos;
    pos.reserve(n);
    if (n == 1) {
        pos.push_back(extent / 2);
        return pos;
    }
    for (std::uint32_t i = 0; i < n; ++i)
        pos.push_back(std::min(stride / 2 + i * stride, extent - 1));
    return pos;
}

// Gathers descriptor rows of the given pixels into a packed buffer.
DescriptorsView gather_rows(const FeatureMap& map, const std::vector<std::uint32_t>& ids,
                            std::vector<float>& buf) {
    buf.resize(static_cast<std::size_t>(ids.size()) * map.dim);
    float* dst = buf.data();
    for (std::uint32_t id : ids) {
        std::memcpy(dst, map.descriptor(id), map.dim * sizeof(float));
        dst += map.dim;
    }
    return {buf.data(), static_cast<std::uint32_t>(ids.size()), map.dim};
}

NnResult run_backend(const std::vector<std::uint32_t>& query_ids, const FeatureMap& query_map,
                     const FeatureMap& target_map, const MatchConfig& cfg, NnBackend backend,
                     FetchCounter& counter, unsigned threads, std::vector<float>& gather_buf) {
    const DescriptorsView queries = gather_rows(query_map, query_ids, gather_buf);
    const DescriptorsView targets = DescriptorsView::of(target_map);
    switch (backend) {
        case NnBackend::Bruteforce:
            return nn_query_bruteforce(queries, targets, cfg.metric);
        case NnBackend::DoubleLoop:
            return nn_query_double_loop(queries, targets,
                                        make_partition(queries.count, cfg.block_size),
                                        make_partition(targets.count, cfg.block_size), cfg.metric,
                                        cfg.precision, counter, threads);
        case NnBackend::SingleLoop:
            return nn_query_single_loop(queries, targets,
                                        make_partition(queries.count, cfg.block_size), cfg.metric,
                                        cfg.precision, counter, threads);
        case NnBackend::HybridCast:
            return nn_query_single_loop(queries, targets,
                                        make_partition(queries.count, cfg.block_size), cfg.metric,
                                        PrecisionMode::Hybrid, counter, threads);
    }
    throw std::invalid_argument("reciprocal_match: unknown backend");
}

}  // namespace

std::vector<PixelId> grid_subsample(const FeatureMap& map, std::uint32_t k,
                                    std::uint32_t stride) {
    if (stride == 0) {
        if (k == 0)
            throw std::invalid_argument("grid_subsample: one of k or stride must be >= 1");
        const double cells = static_cast<double>(map.pixel_count()) / static_cast<double>(k);
        stride = std::max<std::uint32_t>(
            1, static_cast<std::uint32_t>(std::lround(std::sqrt(cells))));
    }
    const auto cols = axis_positions(map.width, stride);
    const auto rows = axis_positions(map.height, stride);
    std::vector<PixelId> out;
    out.reserve(cols.size() * rows.size());
    for (std::uint32_t h : rows)
        for (std::uint32_t w : cols) out.push_back(pixel_id_from_coord({w, h}, map.width));
    return out;
}

MatchSet mutual_nn_exact(const FeatureMap& D1, const FeatureMap& D2, DistanceMetric metric) {
    if (D1.dim != D2.dim)
        throw std::invalid_argument("mutual_nn_exact: descriptor dim mismatch (" +
                                    std::to_string(D1.dim) + " vs " + std::to_string(D2.dim) +
                                    ")");
    const NnResult forward = nn_bruteforce(D1, D2, metric);
    const NnResult backward = nn_bruteforce(D2, D1, metric);
    MatchSet out;
    for (std::uint32_t i = 0; i < D1.pixel_count(); ++i) {
        const std::uint32_t j = forward.nearest[i];
        if (backward.nearest[j] == i) out.pairs.push_back({i, j, 0});
    }
    return out;
}

MatchOutcome reciprocal_match(const FeatureMap& D1, const FeatureMap& D2, const MatchConfig& cfg,
                              NnBackend backend, unsigned threads) {
    cfg.validate();
    if (D1.dim != D2.dim)
        throw std::invalid_argument("reciprocal_match: descriptor dim mismatch (" +
                                    std::to_string(D1.dim) + " vs " + std::to_string(D2.dim) +
                                    ")");

    const bool hybrid =
        backend == NnBackend::HybridCast || (backend != NnBackend::Bruteforce &&
                                             cfg.precision == PrecisionMode::Hybrid);
    MatchOutcome out;
    RunReport& rep = out.report;
    rep.backend = to_string(backend);
    rep.metric = to_string(cfg.metric);
    rep.precision = hybrid ? "hybrid" : "full";
    rep.height1 = D1.height;
    rep.width1 = D1.width;
    rep.height2 = D2.height;
    rep.width2 = D2.width;
    rep.dim = D1.dim;
    rep.k = cfg.k;
    rep.grid_stride = cfg.grid_stride;
    rep.max_iters = cfg.max_iters;
    rep.convergence_fraction = cfg.convergence_fraction;
    rep.block_size = cfg.block_size;

    FetchCounter counter;
    MatcherState state;
    std::vector<float> gather_buf;

    {
        ScopedTimerUs timer(rep.subsample_us);
        for (PixelId p : grid_subsample(D1, cfg.k, cfg.grid_stride))
            state.active_u.push_back(p.index);
    }
    rep.samples = static_cast<std::uint32_t>(state.active_u.size());

    if (rep.samples > 0) {
        ScopedTimerUs timer(rep.forward_nn_us);
        const NnResult v0 =
            run_backend(state.active_u, D1, D2, cfg, backend, counter, threads, gather_buf);
        state.active_v = v0.nearest;
    }

    std::unordered_set<std::uint32_t> used_i, used_j;
    for (std::uint32_t t = 1; t <= cfg.max_iters && !state.active_u.empty(); ++t) {
        state.iteration = t;
        rep.iterations = t;

        NnResult reverse;
        {
            ScopedTimerUs timer(rep.reverse_nn_us);
            reverse = run_backend(state.active_v, D2, D1, cfg, backend, counter, threads,
                                  gather_buf);
        }

        {
            ScopedTimerUs timer(rep.harvest_us);
            std::size_t kept = 0;
            for (std::size_t idx = 0; idx < state.active_u.size(); ++idx) {
                const std::uint32_t u_prev = state.active_u[idx];
                const std::uint32_t u_next = reverse.nearest[idx];
                const std::uint32_t v = state.active_v[idx];
                if (u_next == u_prev) {
                    // cycle closed: (u, v) is reciprocal under this backend
                    ++state.converged_count;
                    if (!used_i.count(u_prev) && !used_j.count(v)) {
                        state.collected.pairs.push_back({u_prev, v, t});
                        used_i.insert(u_prev);
                        used_j.insert(v);
                    } else {
                        ++rep.duplicates_dropped;
                    }
                } else {
                    state.active_u[kept] = u_next;
                    state.active_v[kept] = v;  // replaced by the forward query below
                    ++kept;
                }
            }
            state.active_u.resize(kept);
            state.active_v.resize(kept);
        }
        rep.active_history.push_back(static_cast<std::uint32_t>(state.active_u.size()));

        const double frac =
            static_cast<double>(state.converged_count) / static_cast<double>(rep.samples);
        if (frac >= cfg.convergence_fraction || t == cfg.max_iters || state.active_u.empty())
            break;

        {
            ScopedTimerUs timer(rep.forward_nn_us);
            const NnResult forward =
                run_backend(state.active_u, D1, D2, cfg, backend, counter, threads, gather_buf);
            state.active_v = forward.nearest;
        }
    }

    rep.converged = state.converged_count;
    rep.converged_fraction =
        rep.samples == 0 ? 0.0
                         : static_cast<double>(state.converged_count) / rep.samples;
    rep.a_block_fetches = counter.a_fetches();
    rep.b_block_fetches = counter.b_fetches();
    rep.half_saturation_events = counter.saturations();
    rep.half_saturated = rep.half_saturation_events > 0;
    rep.matches_emitted = static_cast<std::uint32_t>(state.collected.pairs.size());
    out.matches = std::move(state.collected);
    return out;
}

}  // namespace fastnn
