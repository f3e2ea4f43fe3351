"""Fast reciprocal nearest-neighbor matching over dense feature maps.

Feature maps are numpy float32 arrays of shape (H, W, d). The heavy lifting
lives in the compiled _fastnn extension.
"""

from ._fastnn import (
    block_distances,
    dist_scalar,
    gen_matched_pair,
    gen_random,
    grid_subsample,
    mutual_nn_exact,
    nn_bruteforce,
    nn_double_loop,
    nn_hybridcast,
    nn_single_loop,
    read_fmap,
    reciprocal_match,
    to_half_round,
    write_fmap,
)

__all__ = [
    "block_distances",
    "dist_scalar",
    "gen_matched_pair",
    "gen_random",
    "grid_subsample",
    "mutual_nn_exact",
    "nn_bruteforce",
    "nn_double_loop",
    "nn_hybridcast",
    "nn_single_loop",
    "read_fmap",
    "reciprocal_match",
    "to_half_round",
    "write_fmap",
]

__version__ = "0.1.0"
