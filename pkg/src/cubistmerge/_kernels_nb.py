"""Numba-compiled kernel implementations (accelerated backend).

Twin of `_kernels_np`: same signatures, bit-identical results. Comparisons
run on the same precomputed float64 similarities / L1 norms, and float
accumulation follows the same member order, so no fastmath and no
reassociation is allowed here.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def select_rows_bipartite(sims, k, parity):
    rows, lm1 = sims.shape
    length = lm1 + 1
    removed = np.zeros((rows, length), dtype=np.bool_)
    dst = np.full((rows, length), -1, dtype=np.int64)
    sim_sum = np.zeros(rows, dtype=np.float64)
    if k == 0:
        return removed, dst, sim_sum
    n_src = 0
    for off in range(length):
        if (off + parity) % 2 == 1:
            n_src += 1
    src = np.empty(n_src, dtype=np.int64)
    pos = 0
    for off in range(length):
        if (off + parity) % 2 == 1:
            src[pos] = off
            pos += 1
    nom_dst = np.empty(n_src, dtype=np.int64)
    nom_sim = np.empty(n_src, dtype=np.float64)
    used = np.empty(n_src, dtype=np.bool_)
    for r in range(rows):
        for t in range(n_src):
            s = src[t]
            left = sims[r, s - 1] if s > 0 else -np.inf
            right = sims[r, s] if s + 1 < length else -np.inf
            if left >= right:  # tie prefers the lower offset
                nom_dst[t] = s - 1
                nom_sim[t] = left
            else:
                nom_dst[t] = s + 1
                nom_sim[t] = right
            used[t] = False
        for _ in range(k):
            best = -1
            for t in range(n_src):
                if used[t]:
                    continue
                if best < 0 or nom_sim[t] > nom_sim[best]:
                    best = t  # strict > keeps the lowest source offset on ties
            used[best] = True
            removed[r, src[best]] = True
            dst[r, src[best]] = nom_dst[best]
            sim_sum[r] += nom_sim[best]
    return removed, dst, sim_sum


@njit(cache=True)
def select_rows_naive(sims, k):
    rows, lm1 = sims.shape
    length = lm1 + 1
    removed = np.zeros((rows, length), dtype=np.bool_)
    dst = np.full((rows, length), -1, dtype=np.int64)
    sim_sum = np.zeros(rows, dtype=np.float64)
    if k == 0:
        return removed, dst, sim_sum
    selected = np.empty(lm1, dtype=np.bool_)
    for r in range(rows):
        for j in range(lm1):
            selected[j] = False
        for _ in range(k):
            best = -1
            for j in range(lm1):
                if selected[j]:
                    continue
                if best < 0 or sims[r, j] > sims[r, best]:
                    best = j
            selected[best] = True
            sim_sum[r] += sims[r, best]
        for col in range(1, length):
            if selected[col - 1]:
                removed[r, col] = True
                dst[r, col] = dst[r, col - 1] if removed[r, col - 1] else col - 1
    return removed, dst, sim_sum


@njit(cache=True)
def apply_row_merges(values, removed, dst, repr_code, sizes, l1):
    rows, length, dim = values.shape
    kept_n = length
    for col in range(length):
        if removed[0, col]:
            kept_n -= 1
    out = np.empty((rows, kept_n, dim), dtype=np.float32)
    out_sizes = np.empty((rows, kept_n), dtype=np.int64)
    colmap = np.full((rows, length), -1, dtype=np.int64)
    origin = np.empty((rows, kept_n), dtype=np.int64)
    acc = np.empty((kept_n, dim), dtype=np.float64)
    tot = np.empty(kept_n, dtype=np.int64)
    received = np.empty(kept_n, dtype=np.bool_)
    best = np.empty(kept_n, dtype=np.float64)
    for r in range(rows):
        slot = 0
        for col in range(length):
            if not removed[r, col]:
                colmap[r, col] = slot
                origin[r, slot] = col
                out_sizes[r, slot] = sizes[r, col]
                for i in range(dim):
                    out[r, slot, i] = values[r, col, i]
                slot += 1
        if repr_code == 1:
            for s in range(kept_n):
                col = origin[r, s]
                weight = np.float64(sizes[r, col])
                for i in range(dim):
                    acc[s, i] = weight * np.float64(values[r, col, i])
                tot[s] = sizes[r, col]
                received[s] = False
        elif repr_code == 2:
            for s in range(kept_n):
                best[s] = l1[r, origin[r, s]]
        for col in range(length):
            if not removed[r, col]:
                continue
            s = colmap[r, dst[r, col]]
            colmap[r, col] = s
            if repr_code == 0:
                for i in range(dim):
                    if abs(values[r, col, i]) > abs(out[r, s, i]):
                        out[r, s, i] = values[r, col, i]
                out_sizes[r, s] += sizes[r, col]
            elif repr_code == 1:
                weight = np.float64(sizes[r, col])
                for i in range(dim):
                    acc[s, i] += weight * np.float64(values[r, col, i])
                tot[s] += sizes[r, col]
                received[s] = True
            else:
                if l1[r, col] > best[s]:
                    best[s] = l1[r, col]
                    for i in range(dim):
                        out[r, s, i] = values[r, col, i]
                out_sizes[r, s] += sizes[r, col]
        if repr_code == 1:
            for s in range(kept_n):
                if received[s]:
                    denom = np.float64(tot[s])
                    for i in range(dim):
                        out[r, s, i] = np.float32(acc[s, i] / denom)
                out_sizes[r, s] = tot[s]
    return out, out_sizes, colmap, origin
