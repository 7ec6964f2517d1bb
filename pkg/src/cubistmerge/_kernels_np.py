"""Pure-numpy kernel implementations (fallback backend).

Each function here has a numba twin in `_kernels_nb` with the same
signature and bit-identical output. Selection compares precomputed float64
similarities (and L1 norms) with exact tie rules, and merging folds members
in a fixed left-to-right order, so the two backends never diverge.

Shared conventions:
  sims     (R, L-1) float64  adjacent-pair similarities per line
  removed  (R, L)   bool     True where a token was consumed as a source
  dst      (R, L)   int64    destination offset for removed tokens, -1 else
  repr_code: 0 = max-per-dim, 1 = weighted average, 2 = max-vector (by l1)
"""

from __future__ import annotations

import numpy as np


def _source_offsets(length: int, parity: int) -> np.ndarray:
    offsets = np.arange(length)
    return offsets[(offsets + parity) % 2 == 1]


def select_rows_bipartite(sims, k: int, parity: int):
    """Nominate per source, then keep the top-k nominations per line.

    Rank: higher similarity first, then lower source offset. Nomination
    ties between neighbors go to the lower offset.
    """
    sims = np.asarray(sims, dtype=np.float64)
    rows, lm1 = sims.shape
    length = lm1 + 1
    removed = np.zeros((rows, length), dtype=bool)
    dst = np.full((rows, length), -1, dtype=np.int64)
    sim_sum = np.zeros(rows, dtype=np.float64)
    if k == 0:
        return removed, dst, sim_sum
    src = _source_offsets(length, parity)
    n_src = src.size
    left = np.full((rows, n_src), -np.inf)
    right = np.full((rows, n_src), -np.inf)
    has_left = src > 0
    left[:, has_left] = sims[:, src[has_left] - 1]
    has_right = src < length - 1
    right[:, has_right] = sims[:, src[has_right]]
    go_left = left >= right
    nom_dst = np.where(go_left, src - 1, src + 1)
    nom_sim = np.where(go_left, left, right)
    order = np.lexsort((np.broadcast_to(src, (rows, n_src)), -nom_sim))
    picked = order[:, :k]
    row_idx = np.repeat(np.arange(rows), k)
    src_cols = src[picked.ravel()]
    removed[row_idx, src_cols] = True
    dst[row_idx, src_cols] = nom_dst[row_idx, picked.ravel()]
    sim_sum[:] = np.take_along_axis(nom_sim, picked, axis=1).sum(axis=1)
    return removed, dst, sim_sum


def select_rows_naive(sims, k: int):
    """Top-k adjacent edges per line; runs of selected edges chain leftward."""
    sims = np.asarray(sims, dtype=np.float64)
    rows, lm1 = sims.shape
    length = lm1 + 1
    removed = np.zeros((rows, length), dtype=bool)
    dst = np.full((rows, length), -1, dtype=np.int64)
    sim_sum = np.zeros(rows, dtype=np.float64)
    if k == 0:
        return removed, dst, sim_sum
    edge_ids = np.broadcast_to(np.arange(lm1), (rows, lm1))
    order = np.lexsort((edge_ids, -sims))
    picked = order[:, :k]
    selected = np.zeros((rows, lm1), dtype=bool)
    selected[np.repeat(np.arange(rows), k), picked.ravel()] = True
    sim_sum[:] = np.where(selected, sims, 0.0).sum(axis=1)
    removed[:, 1:] = selected
    for col in range(1, length):
        chained = removed[:, col] & removed[:, col - 1]
        dst[:, col] = np.where(removed[:, col], np.where(chained, dst[:, col - 1], col - 1), -1)
    return removed, dst, sim_sum


def apply_row_merges(values, removed, dst, repr_code: int, sizes, l1):
    """Merge removed tokens into their destinations and compact each line.

    values (R, L, d) float32; sizes (R, L) int64; l1 (R, L) float64 (only
    read for repr_code 2). Every line must have the same number of removed
    tokens. Returns (out, out_sizes, colmap, origin) where colmap maps each
    input offset to its output slot and origin maps each output slot back
    to the input offset it kept.
    """
    values = np.asarray(values, dtype=np.float32)
    rows, length, _ = values.shape
    kept_n = length - int(removed[0].sum())
    out = np.empty((rows, kept_n, values.shape[2]), dtype=np.float32)
    out_sizes = np.empty((rows, kept_n), dtype=np.int64)
    colmap = np.full((rows, length), -1, dtype=np.int64)
    origin = np.empty((rows, kept_n), dtype=np.int64)
    for r in range(rows):
        kept = np.flatnonzero(~removed[r])
        origin[r] = kept
        colmap[r, kept] = np.arange(kept_n)
        out[r] = values[r, kept]
        out_sizes[r] = sizes[r, kept]
        consumed = np.flatnonzero(removed[r])
        if consumed.size == 0:
            continue
        slots = colmap[r, dst[r, consumed]]
        colmap[r, consumed] = slots
        if repr_code == 0:
            for col, slot in zip(consumed, slots):
                cand = values[r, col]
                keep = np.abs(cand) > np.abs(out[r, slot])
                out[r, slot] = np.where(keep, cand, out[r, slot])
                out_sizes[r, slot] += sizes[r, col]
        elif repr_code == 1:
            acc = sizes[r, kept, None].astype(np.float64) * values[r, kept].astype(np.float64)
            tot = sizes[r, kept].astype(np.int64)
            received = np.zeros(kept_n, dtype=bool)
            for col, slot in zip(consumed, slots):
                acc[slot] += sizes[r, col] * values[r, col].astype(np.float64)
                tot[slot] += sizes[r, col]
                received[slot] = True
            hit = np.flatnonzero(received)
            out[r, hit] = (acc[hit] / tot[hit, None]).astype(np.float32)
            out_sizes[r] = tot
        else:
            best = l1[r, kept].copy()
            for col, slot in zip(consumed, slots):
                if l1[r, col] > best[slot]:
                    best[slot] = l1[r, col]
                    out[r, slot] = values[r, col]
                out_sizes[r, slot] += sizes[r, col]
    return out, out_sizes, colmap, origin
