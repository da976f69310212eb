"""Deterministic substream derivation for replicated simulations.

A single root seed fans out into independent generators addressed by an
integer path (replicate index, round index, ...). The derivation is
counter-based, so streams never depend on the order in which they are
created; identical (seed, path) pairs always yield bit-identical draws.
"""
from __future__ import annotations

import numpy as np

# Per-purpose lane constants keep unrelated consumers of the same root
# seed (trajectories, bound sweeps, services) off each other's streams.
LANE_TRAJECTORY = 0
LANE_SERVICE = 1


def substream(root_seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream addressed by ``path`` under ``root_seed``."""
    if root_seed < 0:
        raise ValueError("root seed must be a non-negative integer")
    ss = np.random.SeedSequence(entropy=root_seed, spawn_key=tuple(path))
    return np.random.default_rng(ss)
