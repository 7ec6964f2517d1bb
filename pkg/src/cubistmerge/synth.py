"""Deterministic synthetic token grids for benchmarks and tests.

Patterns differ in how redundancy is distributed:
  uniform -- every token identical (maximally redundant everywhere)
  stripes -- horizontal bands, one shared vector per band
  blobs   -- a near-constant background with a few patches of independent
             high-variance tokens, so reduction should concentrate its
             merging in the smooth background and avoid the patches
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidSpecError

PATTERNS = ("uniform", "blobs", "stripes")


def _check_dims(height, width, dim):
    if height < 1 or width < 1 or dim < 1:
        raise InvalidSpecError(f"grid dimensions must be positive, got {height}x{width}x{dim}")


def gen_uniform(height: int, width: int, dim: int, seed: int = 0) -> np.ndarray:
    _check_dims(height, width, dim)
    rng = np.random.default_rng(seed)
    token = rng.standard_normal(dim).astype(np.float32)
    return np.broadcast_to(token, (height, width, dim)).copy()


def gen_stripes(height: int, width: int, dim: int, seed: int = 0) -> np.ndarray:
    _check_dims(height, width, dim)
    rng = np.random.default_rng(seed)
    band = max(1, height // 8)
    n_bands = (height + band - 1) // band
    vectors = rng.standard_normal((n_bands, dim)).astype(np.float32)
    rows = np.arange(height) // band
    return np.repeat(vectors[rows][:, None, :], width, axis=1)


def gen_blobs(height: int, width: int, dim: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Returns (grid, blob_mask); blob_mask is True inside high-variance patches."""
    _check_dims(height, width, dim)
    rng = np.random.default_rng(seed)
    base = rng.standard_normal(dim).astype(np.float32)
    grid = base + 0.02 * rng.standard_normal((height, width, dim)).astype(np.float32)
    mask = np.zeros((height, width), dtype=bool)
    for _ in range(int(rng.integers(3, 6))):
        bh = int(rng.integers(max(1, height // 6), max(2, height // 3) + 1))
        bw = int(rng.integers(max(1, width // 6), max(2, width // 3) + 1))
        top = int(rng.integers(0, height - bh + 1))
        left = int(rng.integers(0, width - bw + 1))
        grid[top:top + bh, left:left + bw] = rng.standard_normal((bh, bw, dim)).astype(np.float32)
        mask[top:top + bh, left:left + bw] = True
    return grid.astype(np.float32), mask


def gen_grid(pattern: str, height: int, width: int, dim: int, seed: int = 0) -> np.ndarray:
    if pattern == "uniform":
        return gen_uniform(height, width, dim, seed)
    if pattern == "stripes":
        return gen_stripes(height, width, dim, seed)
    if pattern == "blobs":
        return gen_blobs(height, width, dim, seed)[0]
    raise InvalidSpecError(f"unknown pattern {pattern!r}, expected one of {PATTERNS}")
