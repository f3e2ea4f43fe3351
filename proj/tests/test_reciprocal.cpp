#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <random>
#include <set>

#include "fastnn/io.hpp"
#include "fastnn/reciprocal.hpp"
#include "oracles.hpp"

using namespace fastnn;

TEST_CASE("grid_subsample centered regular grid") {
    const FeatureMap m(8, 8, 1);
    const auto ids = grid_subsample(m, 0, 4);
    REQUIRE(ids.size() == 4);
    CHECK(ids[0] == pixel_id_from_coord({2, 2}, 8));
    CHECK(ids[1] == pixel_id_from_coord({6, 2}, 8));
    CHECK(ids[2] == pixel_id_from_coord({2, 6}, 8));
    CHECK(ids[3] == pixel_id_from_coord({6, 6}, 8));
}

TEST_CASE("grid_subsample degenerate and large-stride cases") {
    const FeatureMap tiny(1, 1, 1);
    CHECK(grid_subsample(tiny, 0, 5).size() == 1);
    CHECK(grid_subsample(tiny, 0, 5)[0].index == 0);

    const FeatureMap m(5, 7, 1);
    const auto ids = grid_subsample(m, 0, 100);  // stride beyond both dims
    REQUIRE(ids.size() == 1);
    CHECK(pixel_coord_from_id(ids[0], 7) == PixelCoord{3, 2});  // centre pixel

    CHECK_THROWS_AS(grid_subsample(m, 0, 0), std::invalid_argument);
}

TEST_CASE("grid_subsample ceiling arithmetic at 480x640") {
    const FeatureMap m(480, 640, 1);
    CHECK(grid_subsample(m, 0, 8).size() == 60 * 80);
}

TEST_CASE("grid_subsample derives a stride from k") {
    const FeatureMap m(64, 64, 1);
    const auto ids = grid_subsample(m, 256, 0);  // 4096/256 = 16 cells -> stride 4
    CHECK(ids.size() == 256);
}

TEST_CASE("mutual_nn_exact identity and swap") {
    const auto D = gen_random(4, 4, 6, 10, false);
    const auto self = mutual_nn_exact(D, D, DistanceMetric::SquaredL2);
    REQUIRE(self.pairs.size() == D.pixel_count());
    for (const auto& p : self.pairs) CHECK(p.i == p.j);

    const auto D1 = FeatureMap::from_data(1, 2, 2, {0, 0, 5, 5});
    const auto D2 = FeatureMap::from_data(1, 2, 2, {5, 5, 0, 0});
    const auto m = mutual_nn_exact(D1, D2, DistanceMetric::SquaredL2);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.contains_pair(0, 1));
    CHECK(m.contains_pair(1, 0));
}

TEST_CASE("mutual_nn_exact agrees with the independent oracle") {
    std::mt19937 rng(88);
    for (int n = 0; n < 10; ++n) {
        const auto D1 = gen_random(5, 6, 4, rng(), false);
        const auto D2 = gen_random(5, 6, 4, rng(), false);
        const auto lib = mutual_nn_exact(D1, D2, DistanceMetric::NegativeDot);
        const auto ref = oracles::mutual_pixels(D1, D2, DistanceMetric::NegativeDot);
        REQUIRE(lib.pairs.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(lib.pairs[i].i == ref[i].first);
            CHECK(lib.pairs[i].j == ref[i].second);
        }
    }
}

TEST_CASE("identity pair converges fully in one iteration") {
    const auto D = gen_random(12, 10, 8, 500, false);
    for (const auto backend :
         {NnBackend::Bruteforce, NnBackend::DoubleLoop, NnBackend::SingleLoop}) {
        MatchConfig cfg;
        cfg.grid_stride = 3;
        const auto out = reciprocal_match(D, D, cfg, backend);
        const auto expected = grid_subsample(D, 0, 3);
        REQUIRE(out.matches.pairs.size() == expected.size());
        for (std::size_t s = 0; s < expected.size(); ++s) {
            CHECK(out.matches.pairs[s].i == expected[s].index);
            CHECK(out.matches.pairs[s].j == expected[s].index);
            CHECK(out.matches.pairs[s].iteration == 1);
        }
        CHECK(out.report.iterations == 1);
        CHECK(out.report.converged_fraction == 1.0);
    }
}

TEST_CASE("noise-free permuted pair recovers the permutation at iteration 1") {
    const auto pair = gen_matched_pair(16, 12, 8, 901, 0.0, PermuteMode::Random);
    MatchConfig cfg;
    cfg.grid_stride = 4;
    const auto out = reciprocal_match(pair.d1, pair.d2, cfg, NnBackend::SingleLoop);
    const auto samples = grid_subsample(pair.d1, 0, 4);
    REQUIRE(out.matches.pairs.size() == samples.size());
    for (const auto& p : out.matches.pairs) {
        CHECK(p.j == pair.truth.map[p.i]);
        CHECK(p.iteration == 1);
    }
}

TEST_CASE("reciprocal matches are sound against the exhaustive oracle") {
    std::mt19937 rng(777);
    for (int n = 0; n < 12; ++n) {
        const auto D1 = gen_random(8, 8, 8, rng(), true);
        const auto D2 = gen_random(8, 8, 8, rng(), true);
        MatchConfig cfg;
        cfg.grid_stride = 2;
        cfg.max_iters = 10;
        cfg.metric = n % 2 ? DistanceMetric::NegativeDot : DistanceMetric::SquaredL2;
        const auto out = reciprocal_match(D1, D2, cfg, NnBackend::SingleLoop);
        const auto oracle = mutual_nn_exact(D1, D2, cfg.metric);
        for (const auto& p : out.matches.pairs) CHECK(oracle.contains_pair(p.i, p.j));
    }
}

TEST_CASE("active set shrinks monotonically and pairs never repeat") {
    const auto D1 = gen_random(10, 10, 6, 31337, true);
    const auto D2 = gen_random(10, 10, 6, 31338, true);
    MatchConfig cfg;
    cfg.grid_stride = 2;
    cfg.max_iters = 8;
    cfg.convergence_fraction = 1.0;
    const auto out = reciprocal_match(D1, D2, cfg, NnBackend::SingleLoop);

    std::uint32_t prev = out.report.samples;
    for (const std::uint32_t active : out.report.active_history) {
        CHECK(active <= prev);
        prev = active;
    }
    std::set<std::uint32_t> seen_i, seen_j;
    for (const auto& p : out.matches.pairs) {
        CHECK(seen_i.insert(p.i).second);  // no first-map pixel twice
        CHECK(seen_j.insert(p.j).second);  // no second-map pixel twice
    }
}

TEST_CASE("extra iterations only add pairs") {
    const auto D1 = gen_random(9, 9, 6, 606, true);
    const auto D2 = gen_random(9, 9, 6, 607, true);
    MatchConfig cfg;
    cfg.grid_stride = 2;
    cfg.convergence_fraction = 1.0;
    cfg.max_iters = 4;
    const auto short_run = reciprocal_match(D1, D2, cfg, NnBackend::SingleLoop);
    cfg.max_iters = 9;
    const auto long_run = reciprocal_match(D1, D2, cfg, NnBackend::SingleLoop);

    REQUIRE(long_run.matches.pairs.size() >= short_run.matches.pairs.size());
    for (const auto& p : short_run.matches.pairs) {
        const bool found = std::any_of(long_run.matches.pairs.begin(),
                                       long_run.matches.pairs.end(), [&](const MatchPair& q) {
                                           return q == p;  // same pair, same iteration
                                       });
        CHECK(found);
    }
}

TEST_CASE("backends produce identical match sets in full precision") {
    const auto D1 = gen_random(12, 9, 8, 2111, true);
    const auto D2 = gen_random(12, 9, 8, 2112, true);
    MatchConfig cfg;
    cfg.grid_stride = 2;
    cfg.block_size = 13;  // force several blocks, including a remainder
    const auto brute = reciprocal_match(D1, D2, cfg, NnBackend::Bruteforce);
    const auto dbl = reciprocal_match(D1, D2, cfg, NnBackend::DoubleLoop);
    const auto sgl = reciprocal_match(D1, D2, cfg, NnBackend::SingleLoop);
    CHECK(brute.matches.pairs == dbl.matches.pairs);
    CHECK(brute.matches.pairs == sgl.matches.pairs);
}

TEST_CASE("reciprocal_match validates inputs") {
    const auto D1 = gen_random(4, 4, 4, 1, false);
    const auto D2 = gen_random(4, 4, 5, 2, false);
    MatchConfig cfg;
    CHECK_THROWS_AS(reciprocal_match(D1, D2, cfg, NnBackend::SingleLoop),
                    std::invalid_argument);
    cfg.grid_stride = 0;
    cfg.k = 0;
    const auto D2b = gen_random(4, 4, 4, 3, false);
    CHECK_THROWS_AS(reciprocal_match(D1, D2b, cfg, NnBackend::SingleLoop),
                    std::invalid_argument);
}
