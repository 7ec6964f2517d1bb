"""Two-phase structured reduction of token grids.

A reduction pass removes `rate_w` tokens from every row (horizontal phase)
and then `rate_h` tokens from every column (vertical phase), so an H x W
grid always comes out as (H - rate_h) x (W - rate_w): rows and columns stay
uniform, which is what downstream window attention and 2D position codes
require. When a window is set, each window is reduced independently with
the same per-window rates and the shrunken windows reassemble row-major.

Merged tokens land in their destination's slot and the removed slots are
compacted out, so surviving tokens keep their relative order along every
processed line. A MergeMap records, for every original position, the
reduced-grid position of its representative; `unmerge` broadcasts
representatives back through the map to recover a dense full-size grid.

The position-agnostic baseline (strategy "bipartite_global") intentionally
breaks all of this: it merges across the flattened region and reports its
result as a 1 x N' token list, which downstream spatial machinery is
expected to reject.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InfeasibleRateError, InvalidSpecError
from .grid import ReductionSpec, as_token_grid, resolve_rates
from .matching import adjacent_row_sims, select_edges_global
from .merging import token_l1_norms

_REPR_CODES = {"max_per_dim": 0, "weighted_average": 1, "max_vector": 2}


@dataclass(frozen=True)
class MergeMap:
    """Total map from original grid positions to reduced-grid positions."""

    targets: np.ndarray  # (H, W, 2) int64: (new_row, new_col) per position
    reduced_shape: tuple[int, int]

    def __post_init__(self):
        targets = np.ascontiguousarray(np.asarray(self.targets), dtype=np.int64)
        if targets.ndim != 3 or targets.shape[2] != 2:
            raise InvalidSpecError(f"merge map targets must be (H, W, 2), got {targets.shape}")
        rh, rw = self.reduced_shape
        rows, cols = targets[..., 0], targets[..., 1]
        if rows.min() < 0 or cols.min() < 0 or rows.max() >= rh or cols.max() >= rw:
            raise InvalidSpecError("merge map targets fall outside the reduced shape")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "reduced_shape", (int(rh), int(rw)))

    @property
    def original_shape(self) -> tuple[int, int]:
        return self.targets.shape[0], self.targets.shape[1]

    @staticmethod
    def identity(height: int, width: int) -> "MergeMap":
        rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        return MergeMap(np.stack([rows, cols], axis=-1), (height, width))

    def preimage_counts(self) -> np.ndarray:
        """How many original positions map to each reduced position."""
        counts = np.zeros(self.reduced_shape, dtype=np.int64)
        np.add.at(counts, (self.targets[..., 0].ravel(), self.targets[..., 1].ravel()), 1)
        return counts

    def iter_rows(self):
        """Yield (orig_row, orig_col, new_row, new_col) in row-major order."""
        height, width = self.original_shape
        for r in range(height):
            for c in range(width):
                yield r, c, int(self.targets[r, c, 0]), int(self.targets[r, c, 1])


def compose_maps(first: MergeMap, second: MergeMap) -> MergeMap:
    """Relational composition: original -> first -> second."""
    if first.reduced_shape != second.original_shape:
        raise InvalidSpecError(
            f"cannot compose maps: first reduces to {first.reduced_shape} but "
            f"second starts from {second.original_shape}"
        )
    mid_r, mid_c = first.targets[..., 0], first.targets[..., 1]
    return MergeMap(second.targets[mid_r, mid_c], second.reduced_shape)


@dataclass
class PhaseResult:
    """Outcome of one reduction phase (all rows, or all columns)."""

    grid: np.ndarray
    merge_map: MergeMap
    sizes: np.ndarray | None
    source_mask: np.ndarray  # True where the token was consumed as a source
    slot_origin: np.ndarray  # per output slot, the input offset it kept
    features: np.ndarray | None
    sim_sum: float
    edge_count: int


@dataclass
class ReducedGrid:
    """A reduced grid plus everything needed to interpret and undo it."""

    grid: np.ndarray
    merge_map: MergeMap
    sizes: np.ndarray | None
    source_mask: np.ndarray
    phase_maps: tuple[MergeMap, MergeMap] | None
    sim_sum: float
    edge_count: int
    phase_sim_sums: tuple[float, float] | None = None

    @property
    def mean_similarity(self) -> float:
        return self.sim_sum / self.edge_count if self.edge_count else float("nan")


def _check_feasible(strategy: str, k: int, length: int, parity: int, axis: str) -> None:
    if k >= length:
        raise InvalidSpecError(
            f"cannot remove {k} tokens from a {axis} of {length}: at least one must remain"
        )
    if strategy == "bipartite_local":
        n_src = length // 2 if parity == 0 else (length + 1) // 2
        if k > n_src:
            raise InfeasibleRateError(
                f"cannot remove {k} tokens from a {axis} of {length}: alternating roles "
                f"offer only {n_src} sources"
            )
    elif strategy == "naive_local":
        if k > length - 1:
            raise InfeasibleRateError(
                f"cannot remove {k} tokens from a {axis} of {length}: the path graph "
                f"has only {length - 1} edges"
            )
    else:
        raise InvalidSpecError(f"strategy {strategy!r} has no per-line phase")


def _reduce_lines(values, feats, sizes, k, strategy, representation, parity, axis):
    """Reduce every line of a (R, L, d) batch by k tokens. Lines are rows."""
    rows, length, _ = values.shape
    if representation not in _REPR_CODES:
        raise InvalidSpecError(f"unknown representation {representation!r}")
    code = _REPR_CODES[representation]
    if k == 0:
        identity = np.broadcast_to(np.arange(length, dtype=np.int64), (rows, length))
        return {
            "values": values.copy(),
            "features": None if feats is None else feats.copy(),
            "sizes": sizes.copy(),
            "colmap": identity.copy(),
            "origin": identity.copy(),
            "removed": np.zeros((rows, length), dtype=bool),
            "sim_sum": 0.0,
            "edge_count": 0,
        }
    _check_feasible(strategy, k, length, parity, axis)
    kern = backend.kernels()
    sim_source = values if feats is None else feats
    sims = adjacent_row_sims(sim_source)
    if strategy == "bipartite_local":
        removed, dst, sim_sums = kern.select_rows_bipartite(sims, k, parity)
    else:
        removed, dst, sim_sums = kern.select_rows_naive(sims, k)
    l1 = token_l1_norms(values) if code == 2 else np.zeros((rows, length))
    out, out_sizes, colmap, origin = kern.apply_row_merges(
        np.ascontiguousarray(values, dtype=np.float32), removed, dst, code, sizes, l1
    )
    feats_out = None
    if feats is not None:
        # features follow the same merge decisions; max-vector keeps the
        # feature of the member whose *value* L1 won
        feats_out, _, _, _ = kern.apply_row_merges(
            np.ascontiguousarray(feats, dtype=np.float32), removed, dst, code, sizes, l1
        )
    return {
        "values": out,
        "features": feats_out,
        "sizes": out_sizes,
        "colmap": colmap,
        "origin": origin,
        "removed": removed,
        "sim_sum": float(sim_sums.sum()),
        "edge_count": int(k * rows),
    }


def _default_sizes(height: int, width: int) -> np.ndarray:
    return np.ones((height, width), dtype=np.int64)


def _validate_features(features, height, width):
    if features is None:
        return None
    feats = np.ascontiguousarray(np.asarray(features), dtype=np.float32)
    if feats.ndim != 3 or feats.shape[:2] != (height, width):
        raise InvalidSpecError(
            f"features must be ({height}, {width}, f), got {np.asarray(features).shape}"
        )
    if not np.isfinite(feats).all():
        raise InvalidSpecError("features contain non-finite values")
    return feats


def reduce_horizontal(grid, rate_w: int, strategy: str = "bipartite_local",
                      representation: str = "max_per_dim", *, features=None,
                      sizes=None, parity: int = 0) -> PhaseResult:
    """Remove `rate_w` tokens from every row of the grid."""
    grid = as_token_grid(grid)
    height, width, _ = grid.shape
    feats = _validate_features(features, height, width)
    sizes = _default_sizes(height, width) if sizes is None else np.asarray(sizes, dtype=np.int64)
    res = _reduce_lines(grid, feats, sizes, int(rate_w), strategy, representation, parity, "row")
    rows_idx = np.broadcast_to(np.arange(height)[:, None], (height, width))
    targets = np.stack([rows_idx, res["colmap"]], axis=-1)
    return PhaseResult(
        grid=res["values"],
        merge_map=MergeMap(targets, (height, width - int(rate_w))),
        sizes=res["sizes"],
        source_mask=res["removed"],
        slot_origin=res["origin"],
        features=res["features"],
        sim_sum=res["sim_sum"],
        edge_count=res["edge_count"],
    )


def reduce_vertical(grid, rate_h: int, strategy: str = "bipartite_local",
                    representation: str = "max_per_dim", *, features=None,
                    sizes=None, parity: int = 0) -> PhaseResult:
    """Remove `rate_h` tokens from every column of the grid."""
    grid = as_token_grid(grid)
    height, width, _ = grid.shape
    feats = _validate_features(features, height, width)
    sizes = _default_sizes(height, width) if sizes is None else np.asarray(sizes, dtype=np.int64)
    values_t = np.ascontiguousarray(grid.transpose(1, 0, 2))
    feats_t = None if feats is None else np.ascontiguousarray(feats.transpose(1, 0, 2))
    sizes_t = np.ascontiguousarray(sizes.T)
    res = _reduce_lines(values_t, feats_t, sizes_t, int(rate_h), strategy, representation,
                        parity, "column")
    # transpose everything back: lines were columns
    rowmap = res["colmap"].T  # (H, W): new row per original position
    cols_idx = np.broadcast_to(np.arange(width), (height, width))
    targets = np.stack([rowmap, cols_idx], axis=-1)
    out_grid = np.ascontiguousarray(res["values"].transpose(1, 0, 2))
    feats_out = res["features"]
    return PhaseResult(
        grid=out_grid,
        merge_map=MergeMap(targets, (height - int(rate_h), width)),
        sizes=np.ascontiguousarray(res["sizes"].T),
        source_mask=res["removed"].T,
        slot_origin=np.ascontiguousarray(res["origin"].T),  # (H', W): original row per slot
        features=None if feats_out is None else np.ascontiguousarray(feats_out.transpose(1, 0, 2)),
        sim_sum=res["sim_sum"],
        edge_count=res["edge_count"],
    )


def _windows_to_lines(tiles):
    """(B, h, w, d) window stack -> (B*h, w, d) batch of row lines."""
    b, h, w, d = tiles.shape
    return tiles.reshape(b * h, w, d)


def _lines_to_windows(lines, b, h):
    r, w, d = lines.shape
    assert r == b * h
    return lines.reshape(b, h, w, d)


def _reduce_structured(grid, feats, spec: ReductionSpec, parity: int) -> ReducedGrid:
    height, width, dim = grid.shape
    if spec.window is not None:
        if height % spec.window or width % spec.window:
            raise InvalidSpecError(
                f"grid {height}x{width} is not divisible into {spec.window}x{spec.window} windows"
            )
        win_h = win_w = spec.window
    else:
        win_h, win_w = height, width
    rate_h, rate_w = resolve_rates(spec, win_h, win_w)
    n_wr, n_wc = height // win_h, width // win_w
    n_win = n_wr * n_wc

    # window-partition values/features/sizes into a (B, win_h, win_w, ...) stack
    def part(arr, channels):
        if channels:
            t = arr.reshape(n_wr, win_h, n_wc, win_w, -1).transpose(0, 2, 1, 3, 4)
            return np.ascontiguousarray(t.reshape(n_win, win_h, win_w, -1))
        t = arr.reshape(n_wr, win_h, n_wc, win_w).transpose(0, 2, 1, 3)
        return np.ascontiguousarray(t.reshape(n_win, win_h, win_w))

    tiles = part(grid, True)
    feat_tiles = None if feats is None else part(feats, True)
    size_tiles = part(_default_sizes(height, width), False)

    # horizontal phase: every window row is an independent line
    res_h = _reduce_lines(
        _windows_to_lines(tiles),
        None if feat_tiles is None else _windows_to_lines(feat_tiles),
        size_tiles.reshape(n_win * win_h, win_w),
        rate_w, spec.strategy, spec.representation, parity, "row",
    )
    mid_w = win_w - rate_w
    tiles_mid = _lines_to_windows(res_h["values"], n_win, win_h)
    feat_mid = None if res_h["features"] is None else _lines_to_windows(res_h["features"], n_win, win_h)
    sizes_mid = res_h["sizes"].reshape(n_win, win_h, mid_w)

    # vertical phase: transpose each window so its columns become lines
    def to_cols(arr4):
        return np.ascontiguousarray(arr4.transpose(0, 2, 1, 3)).reshape(n_win * mid_w, win_h, -1)

    res_v = _reduce_lines(
        to_cols(tiles_mid),
        None if feat_mid is None else to_cols(feat_mid),
        np.ascontiguousarray(sizes_mid.transpose(0, 2, 1)).reshape(n_win * mid_w, win_h),
        rate_h, spec.strategy, spec.representation, parity, "column",
    )
    out_h = win_h - rate_h
    out_tiles = res_v["values"].reshape(n_win, mid_w, out_h, dim).transpose(0, 2, 1, 3)
    out_grid = np.ascontiguousarray(
        out_tiles.reshape(n_wr, n_wc, out_h, mid_w, dim).transpose(0, 2, 1, 3, 4)
    ).reshape(n_wr * out_h, n_wc * mid_w, dim)
    out_sizes = None
    if spec.representation == "weighted_average":
        st = res_v["sizes"].reshape(n_win, mid_w, out_h).transpose(0, 2, 1)
        out_sizes = np.ascontiguousarray(
            st.reshape(n_wr, n_wc, out_h, mid_w).transpose(0, 2, 1, 3)
        ).reshape(n_wr * out_h, n_wc * mid_w)

    # phase maps in global coordinates
    wr = np.arange(height)[:, None] // win_h
    lr = np.arange(height)[:, None] % win_h
    wc = np.arange(width)[None, :] // win_w
    lc = np.arange(width)[None, :] % win_w
    win_id = wr * n_wc + wc  # (H, W)

    colmap_h = res_h["colmap"].reshape(n_win, win_h, win_w)
    map_h_cols = wc * mid_w + colmap_h[win_id, lr, lc]
    map_h_rows = np.broadcast_to(np.arange(height)[:, None], (height, width))
    map_h = MergeMap(np.stack([map_h_rows, map_h_cols], axis=-1), (height, n_wc * mid_w))

    mid_width = n_wc * mid_w
    wc_m = np.arange(mid_width)[None, :] // mid_w
    lc_m = np.arange(mid_width)[None, :] % mid_w
    win_id_m = wr * n_wc + wc_m  # (H, mid_width)
    rowmap_v = res_v["colmap"].reshape(n_win, mid_w, win_h)
    map_v_rows = wr * out_h + rowmap_v[win_id_m, lc_m, lr]
    map_v_cols = np.broadcast_to(np.arange(mid_width), (height, mid_width))
    map_v = MergeMap(np.stack([map_v_rows, map_v_cols], axis=-1), (n_wr * out_h, mid_width))

    merge_map = compose_maps(map_h, map_v)

    # sources: tokens consumed horizontally, plus the original owners of
    # intermediate slots consumed vertically
    mask_h = res_h["removed"].reshape(n_win, win_h, win_w)
    source_mask = mask_h[win_id, lr, lc].copy()
    removed_v = res_v["removed"].reshape(n_win, mid_w, win_h)
    origin_h = res_h["origin"].reshape(n_win, win_h, mid_w)
    v_idx = np.argwhere(removed_v)  # (n, 3): window, local mid col, local row
    if v_idx.size:
        b, lcm, lrow = v_idx[:, 0], v_idx[:, 1], v_idx[:, 2]
        orig_rows = (b // n_wc) * win_h + lrow
        orig_cols = (b % n_wc) * win_w + origin_h[b, lrow, lcm]
        source_mask[orig_rows, orig_cols] = True

    return ReducedGrid(
        grid=out_grid,
        merge_map=merge_map,
        sizes=out_sizes,
        source_mask=source_mask,
        phase_maps=(map_h, map_v),
        sim_sum=res_h["sim_sum"] + res_v["sim_sum"],
        edge_count=res_h["edge_count"] + res_v["edge_count"],
        phase_sim_sums=(res_h["sim_sum"], res_v["sim_sum"]),
    )


def _reduce_global(grid, feats, spec: ReductionSpec, parity: int) -> ReducedGrid:
    height, width, dim = grid.shape
    rate_h, rate_w = resolve_rates(spec, height, width)
    n = height * width
    k = n - (height - rate_h) * (width - rate_w)
    flat = grid.reshape(n, dim)
    flat_feats = flat if feats is None else feats.reshape(n, -1)
    edges = select_edges_global(flat_feats, k, parity)
    removed = np.zeros((1, n), dtype=bool)
    dst = np.full((1, n), -1, dtype=np.int64)
    for e in edges:
        removed[0, e.src] = True
        dst[0, e.src] = e.dst
    code = _REPR_CODES[spec.representation]
    l1 = token_l1_norms(flat[None]) if code == 2 else np.zeros((1, n))
    out, out_sizes, colmap, _ = backend.kernels().apply_row_merges(
        np.ascontiguousarray(flat[None]), removed, dst, code, _default_sizes(1, n), l1
    )
    targets = np.stack([np.zeros((height, width), dtype=np.int64),
                        colmap[0].reshape(height, width)], axis=-1)
    return ReducedGrid(
        grid=out,
        merge_map=MergeMap(targets, (1, n - k)),
        sizes=out_sizes if spec.representation == "weighted_average" else None,
        source_mask=removed[0].reshape(height, width),
        phase_maps=None,
        sim_sum=float(sum(e.similarity for e in edges)),
        edge_count=len(edges),
    )


def cubist_reduce(grid, spec: ReductionSpec, *, features=None) -> ReducedGrid:
    """Run a full reduction pass on a token grid.

    Local strategies run the horizontal phase then the vertical phase
    (per window when `spec.window` is set) and return a structured
    (H - rate_h) x (W - rate_w) grid. The global baseline returns a flat
    1 x N' token list instead. `features` optionally supplies the vectors
    used for similarity; token values are merged either way.
    """
    grid = as_token_grid(grid)
    height, width, _ = grid.shape
    feats = _validate_features(features, height, width)
    parity = 0
    if spec.strategy == "bipartite_global":
        return _reduce_global(grid, feats, spec, parity)
    return _reduce_structured(grid, feats, spec, parity)


def unmerge(reduced: ReducedGrid) -> np.ndarray:
    """Recover a dense full-size grid by broadcasting each representative
    token to all original positions that merged into it."""
    targets = reduced.merge_map.targets
    return reduced.grid[targets[..., 0], targets[..., 1]]
