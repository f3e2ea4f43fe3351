"""Smoke tests for the _fastnn python module."""

import json

import numpy as np
import pytest

import fastnn


def test_gen_random_shape_and_determinism():
    a = fastnn.gen_random(6, 5, 8, seed=7)
    b = fastnn.gen_random(6, 5, 8, seed=7)
    c = fastnn.gen_random(6, 5, 8, seed=8)
    assert a.shape == (6, 5, 8)
    assert a.dtype == np.float32
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    norms = np.linalg.norm(a.reshape(-1, 8), axis=1)
    assert np.allclose(norms, 1.0, atol=1e-6)


def test_block_distances_small_example():
    q = np.zeros((1, 2), dtype=np.float32)
    t = np.array([[3.0, 4.0], [1.0, 0.0]], dtype=np.float32)
    d_full = fastnn.block_distances(q, t, metric="l2", precision="full")
    d_hyb = fastnn.block_distances(q, t, metric="l2", precision="hybrid")
    assert d_full.tolist() == [[25.0, 1.0]]
    assert d_hyb.tolist() == [[25.0, 1.0]]


def test_to_half_round_tie_to_even():
    assert fastnn.to_half_round(2049.0) == 2048.0
    assert fastnn.to_half_round(2048.0) == 2048.0


def test_nn_backends_agree_and_fetch_law():
    A = fastnn.gen_random(8, 8, 6, seed=1)
    B = fastnn.gen_random(8, 8, 6, seed=2)
    brute = fastnn.nn_bruteforce(A, B)
    dbl = fastnn.nn_double_loop(A, B, block_size=16)
    sgl = fastnn.nn_single_loop(A, B, block_size=16)
    assert np.array_equal(brute["nearest"], dbl["nearest"])
    assert np.array_equal(brute["nearest"], sgl["nearest"])
    assert np.array_equal(brute["min_dist"], sgl["min_dist"])
    # P = 64, BS = 16 -> 4 blocks: 16 vs 4 B-block fetches
    assert dbl["b_block_fetches"] == 16
    assert sgl["b_block_fetches"] == 4


def test_hybridcast_identity():
    A = fastnn.gen_random(6, 6, 8, seed=3)
    r = fastnn.nn_hybridcast(A, A, block_size=8)
    assert np.array_equal(r["nearest"], np.arange(36, dtype=np.uint32))
    assert r["min_dist"].max() == 0.0


def test_reciprocal_match_identity_and_report():
    D = fastnn.gen_random(12, 12, 8, seed=4)
    matches, report_json = fastnn.reciprocal_match(D, D, backend="single", stride=4)
    assert matches.shape == (9, 3)
    assert np.array_equal(matches[:, 0], matches[:, 1])
    assert (matches[:, 2] == 1).all()
    report = json.loads(report_json)
    assert report["iterations"] == 1
    assert report["converged_fraction"] == 1.0
    assert report["backend"] == "single"


def test_reciprocal_matches_are_mutual():
    pair = fastnn.gen_matched_pair(10, 10, 8, seed=5, noise_sigma=0.0)
    matches, _ = fastnn.reciprocal_match(pair["d1"], pair["d2"], stride=3)
    truth = pair["truth"]
    assert matches.shape[0] > 0
    for i, j, _ in matches:
        assert truth[i] == j
    mutual = fastnn.mutual_nn_exact(pair["d1"], pair["d2"])
    mutual_set = {(int(i), int(j)) for i, j in mutual}
    for i, j, _ in matches:
        assert (int(i), int(j)) in mutual_set


def test_fmap_file_round_trip(tmp_path):
    m = fastnn.gen_random(5, 4, 3, seed=9)
    path = str(tmp_path / "m.fmap")
    fastnn.write_fmap(m, path)
    back = fastnn.read_fmap(path)
    assert np.array_equal(m, back)


def test_grid_subsample_counts():
    ids = fastnn.grid_subsample(8, 8, stride=4)
    assert ids.tolist() == [18, 22, 50, 54]
    assert fastnn.grid_subsample(480, 640, stride=8).shape[0] == 60 * 80


def test_dim_mismatch_raises():
    A = fastnn.gen_random(4, 4, 4, seed=1)
    B = fastnn.gen_random(4, 4, 5, seed=2)
    with pytest.raises(ValueError):
        fastnn.nn_bruteforce(A, B)
