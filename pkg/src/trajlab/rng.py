"""Deterministic random streams.

Every stochastic routine in the package draws from a stream derived from a
master seed plus an integer path, so results are reproducible bit for bit
regardless of evaluation order. Per-trajectory streams use the trajectory
index as the path, which keeps ensemble statistics identical whether the
trajectories are generated serially or in any other order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _as_key(part) -> int:
    """Map a path element to a stable nonnegative integer."""
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")
    return int(part)


def stream(master_seed: int, *path) -> np.random.Generator:
    """Return the generator for ``(master_seed, *path)``.

    The same arguments always yield an identical stream; distinct paths yield
    statistically independent streams. Path elements may be integers or
    strings (strings are hashed stably, so streams survive restarts).
    """
    if master_seed < 0:
        raise ValueError("master seed must be a nonnegative integer")
    ss = np.random.SeedSequence(entropy=master_seed,
                                spawn_key=tuple(_as_key(p) for p in path))
    return np.random.default_rng(ss)


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Stream for the ``index``-th trajectory of an ensemble."""
    return stream(master_seed, index)
