"""Independent reference implementations used as test oracles.

Everything here is deliberately slow and literal: per-dimension scans,
per-line python loops, explicit group bookkeeping. The production kernels
are checked against these, never the other way around.
"""

from __future__ import annotations

import numpy as np

from cubistmerge.grid import resolve_rates
from cubistmerge.matching import (
    PathLine,
    assign_roles,
    nominate,
    select_edges_bipartite,
    select_edges_global,
    select_edges_naive,
    similarity,
)


def brute_max_per_dim(members):
    members = np.asarray(members, dtype=np.float32)
    out = np.empty(members.shape[1], dtype=np.float32)
    for i in range(members.shape[1]):
        best = 0
        for j in range(members.shape[0]):
            if abs(members[j, i]) > abs(members[best, i]):
                best = j
        out[i] = members[best, i]
    return out


def brute_weighted_average(members, sizes):
    members = np.asarray(members, dtype=np.float32)
    sizes = np.asarray(sizes, dtype=np.int64)
    acc = np.zeros(members.shape[1], dtype=np.float64)
    total = 0
    for j in range(members.shape[0]):
        acc += float(sizes[j]) * members[j].astype(np.float64)
        total += int(sizes[j])
    return (acc / total).astype(np.float32), total


def brute_max_vector(members):
    members = np.asarray(members, dtype=np.float32)
    best = 0
    best_norm = np.abs(members[0]).astype(np.float64).sum()
    for j in range(1, members.shape[0]):
        norm = np.abs(members[j]).astype(np.float64).sum()
        if norm > best_norm:
            best, best_norm = j, norm
    return members[best].copy()


def line_with_adjacent_sims(sims):
    """Unit 2D vectors whose consecutive cosine similarities are `sims`."""
    angles = np.concatenate([[0.0], np.cumsum(np.arccos(np.clip(sims, -1.0, 1.0)))])
    return np.stack([np.cos(angles), np.sin(angles)], axis=1).astype(np.float32)


def _merge_members(values, sizes, members, representation):
    stack = np.stack([values[m] for m in members])
    if representation == "max_per_dim":
        return brute_max_per_dim(stack), sum(sizes[m] for m in members)
    if representation == "weighted_average":
        vec, total = brute_weighted_average(stack, [sizes[m] for m in members])
        return vec, total
    return brute_max_vector(stack), sum(sizes[m] for m in members)


def _groups_from_edges(edges, strategy):
    """Map destination slot -> sorted source offsets, resolving naive chains."""
    removed = {e.src for e in edges}
    root = {}
    for e in sorted(edges, key=lambda e: e.dst):
        dst = e.dst
        if strategy == "naive_local":
            while dst in removed:
                dst = root[dst]
        root[e.src] = dst
    groups = {}
    for src, dst in root.items():
        groups.setdefault(dst, []).append(src)
    return {dst: sorted(srcs) for dst, srcs in groups.items()}


def reference_reduce_line(values, k, strategy, representation, parity=0,
                          feats=None, sizes=None):
    """One line, merged and compacted the slow way.

    Returns (out_values, out_sizes, colmap, removed_mask, sim_sum).
    """
    values = np.asarray(values, dtype=np.float32)
    length = values.shape[0]
    feats = values if feats is None else np.asarray(feats, dtype=np.float32)
    sizes = np.ones(length, dtype=np.int64) if sizes is None else np.asarray(sizes, dtype=np.int64)
    if k == 0:
        return values.copy(), sizes.copy(), np.arange(length), np.zeros(length, bool), 0.0
    line = PathLine(feats)
    if strategy == "bipartite_local":
        edges = select_edges_bipartite(nominate(line, assign_roles(length, parity)), k)
    elif strategy == "naive_local":
        edges = select_edges_naive(line, k)
    else:
        raise ValueError(strategy)
    groups = _groups_from_edges(edges, strategy)
    removed = np.zeros(length, dtype=bool)
    for e in edges:
        removed[e.src] = True
    kept = [c for c in range(length) if not removed[c]]
    colmap = np.full(length, -1, dtype=np.int64)
    out_vals = []
    out_sizes = []
    for slot, c in enumerate(kept):
        colmap[c] = slot
        members = [c] + groups.get(c, [])
        vec, size = _merge_members(values, sizes, members, representation)
        out_vals.append(vec)
        out_sizes.append(size)
        for src in groups.get(c, []):
            colmap[src] = slot
    return (np.stack(out_vals), np.asarray(out_sizes, dtype=np.int64), colmap,
            removed, sum(e.similarity for e in edges))


def reference_reduce_window(values, r_h, r_w, strategy, representation, parity=0, sizes=None):
    """Two-phase reduction of one region: rows first, then columns."""
    values = np.asarray(values, dtype=np.float32)
    height, width, dim = values.shape
    sizes = np.ones((height, width), dtype=np.int64) if sizes is None else sizes
    mid_vals = np.empty((height, width - r_w, dim), dtype=np.float32)
    mid_sizes = np.empty((height, width - r_w), dtype=np.int64)
    colmap_h = np.empty((height, width), dtype=np.int64)
    removed_h = np.zeros((height, width), dtype=bool)
    origin_h = np.empty((height, width - r_w), dtype=np.int64)
    sim = 0.0
    for r in range(height):
        vals, szs, cmap, rem, s = reference_reduce_line(
            values[r], r_w, strategy, representation, parity, sizes=sizes[r])
        mid_vals[r], mid_sizes[r], colmap_h[r], removed_h[r] = vals, szs, cmap, rem
        origin_h[r] = np.flatnonzero(~rem)
        sim += s
    out_vals = np.empty((height - r_h, width - r_w, dim), dtype=np.float32)
    out_sizes = np.empty((height - r_h, width - r_w), dtype=np.int64)
    rowmap_v = np.empty((height, width - r_w), dtype=np.int64)
    removed_v = np.zeros((height, width - r_w), dtype=bool)
    for c in range(width - r_w):
        vals, szs, cmap, rem, s = reference_reduce_line(
            mid_vals[:, c], r_h, strategy, representation, parity, sizes=mid_sizes[:, c])
        out_vals[:, c], out_sizes[:, c], rowmap_v[:, c], removed_v[:, c] = vals, szs, cmap, rem
        sim += s
    targets = np.empty((height, width, 2), dtype=np.int64)
    source = removed_h.copy()
    for r in range(height):
        for c in range(width):
            c1 = colmap_h[r, c]
            targets[r, c] = (rowmap_v[r, c1], c1)
            if not removed_h[r, c] and removed_v[r, c1]:
                source[r, c] = True
    return {
        "grid": out_vals, "sizes": out_sizes, "targets": targets,
        "source_mask": source, "sim_sum": sim,
    }


def reference_reduce_grid(grid, spec, parity=0):
    """Full structured reduction, windows handled by literal slicing."""
    grid = np.asarray(grid, dtype=np.float32)
    height, width, dim = grid.shape
    if spec.window is None:
        r_h, r_w = resolve_rates(spec, height, width)
        return reference_reduce_window(grid, r_h, r_w, spec.strategy,
                                       spec.representation, parity)
    win = spec.window
    r_h, r_w = resolve_rates(spec, win, win)
    out_h, out_w = win - r_h, win - r_w
    n_wr, n_wc = height // win, width // win
    out = np.empty((n_wr * out_h, n_wc * out_w, dim), dtype=np.float32)
    sizes = np.empty((n_wr * out_h, n_wc * out_w), dtype=np.int64)
    targets = np.empty((height, width, 2), dtype=np.int64)
    source = np.zeros((height, width), dtype=bool)
    sim = 0.0
    for wr in range(n_wr):
        for wc in range(n_wc):
            rs, cs = slice(wr * win, (wr + 1) * win), slice(wc * win, (wc + 1) * win)
            res = reference_reduce_window(grid[rs, cs], r_h, r_w, spec.strategy,
                                          spec.representation, parity)
            out[wr * out_h:(wr + 1) * out_h, wc * out_w:(wc + 1) * out_w] = res["grid"]
            sizes[wr * out_h:(wr + 1) * out_h, wc * out_w:(wc + 1) * out_w] = res["sizes"]
            t = res["targets"].copy()
            t[..., 0] += wr * out_h
            t[..., 1] += wc * out_w
            targets[rs, cs] = t
            source[rs, cs] = res["source_mask"]
            sim += res["sim_sum"]
    return {"grid": out, "sizes": sizes, "targets": targets, "source_mask": source,
            "sim_sum": sim}


def reference_reduce_global(grid, k, representation, parity=0):
    """Unstructured baseline: merge over the flattened grid, slow path."""
    grid = np.asarray(grid, dtype=np.float32)
    height, width, dim = grid.shape
    flat = grid.reshape(-1, dim)
    n = flat.shape[0]
    edges = select_edges_global(flat, k, parity)
    groups = _groups_from_edges(edges, "bipartite_global")
    removed = np.zeros(n, dtype=bool)
    for e in edges:
        removed[e.src] = True
    sizes = np.ones(n, dtype=np.int64)
    kept = [c for c in range(n) if not removed[c]]
    out, colmap = [], np.full(n, -1, dtype=np.int64)
    for slot, c in enumerate(kept):
        colmap[c] = slot
        members = [c] + groups.get(c, [])
        vec, _ = _merge_members(flat, sizes, members, representation)
        out.append(vec)
        for src in groups.get(c, []):
            colmap[src] = slot
    return np.stack(out), colmap.reshape(height, width), removed.reshape(height, width)


def pairwise_similarity_matrix(features):
    feats = np.asarray(features, dtype=np.float32)
    n = feats.shape[0]
    return np.array([[similarity(feats[i], feats[j]) for j in range(n)] for i in range(n)])
