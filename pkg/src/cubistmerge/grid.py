"""Token grids, reduction specs, and the grid wire format.

A token grid is a float32 ndarray of shape (H, W, d): H rows and W columns
of d-dimensional tokens, row-major. All public entry points validate through
:func:`as_token_grid`, which rejects non-finite values, so downstream code
can treat similarity and argmax as total functions.

Grid files ("TGRD" format, version 1) are little-endian:

    offset 0   magic       4 bytes  b"TGRD"
    offset 4   version     u32      1
    offset 8   H, W, d     u32 each
    offset 20  payload     H*W*d float32, row-major (row, col, channel)

Total length is exactly 20 + 4*H*W*d bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import GridFileError, InvalidSpecError

MAGIC = b"TGRD"
VERSION = 1
HEADER = struct.Struct("<4sIIII")

STRATEGIES = ("bipartite_local", "naive_local", "bipartite_global")
REPRESENTATIONS = ("max_per_dim", "weighted_average", "max_vector")


def as_token_grid(data) -> np.ndarray:
    """Validate and normalize a token grid to a float32 (H, W, d) array.

    Raises InvalidSpecError on wrong rank, empty dimensions, or
    non-finite values.
    """
    arr = np.asarray(data)
    if arr.ndim != 3:
        raise InvalidSpecError(f"token grid must be (H, W, d), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise InvalidSpecError(f"token grid dimensions must be positive, got {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if not np.isfinite(arr).all():
        raise InvalidSpecError("token grid contains non-finite values")
    return arr


@dataclass(frozen=True)
class ReductionSpec:
    """Configuration for one reduction pass.

    rate_h / rate_w: int -> remove exactly that many tokens per column/row;
    float in [0, 1) -> remove floor(rate * region_side) tokens. The region is
    the window when `window` is set, otherwise the full grid.

    layer: depth at which a transformer harness applies the reduction.
    """

    rate_h: int | float
    rate_w: int | float
    layer: int = 0
    window: int | None = None
    strategy: str = "bipartite_local"
    representation: str = "max_per_dim"

    def __post_init__(self):
        for name, rate in (("rate_h", self.rate_h), ("rate_w", self.rate_w)):
            if isinstance(rate, (bool, np.bool_)):
                raise InvalidSpecError(f"{name} must be an int or float, got bool")
            if isinstance(rate, (int, np.integer)):
                if rate < 0:
                    raise InvalidSpecError(f"integer {name} must be >= 0, got {rate}")
            elif isinstance(rate, float):
                if not (0.0 <= rate < 1.0):
                    raise InvalidSpecError(f"fractional {name} must be in [0, 1), got {rate}")
            else:
                raise InvalidSpecError(f"{name} must be an int or float, got {type(rate).__name__}")
        if self.layer < 0:
            raise InvalidSpecError(f"layer must be >= 0, got {self.layer}")
        if self.window is not None and self.window < 1:
            raise InvalidSpecError(f"window must be a positive integer, got {self.window}")
        if self.strategy not in STRATEGIES:
            raise InvalidSpecError(f"unknown strategy {self.strategy!r}, expected one of {STRATEGIES}")
        if self.representation not in REPRESENTATIONS:
            raise InvalidSpecError(
                f"unknown representation {self.representation!r}, expected one of {REPRESENTATIONS}"
            )


def _resolve_one(rate: int | float, region: int, axis: str) -> int:
    if isinstance(rate, (int, np.integer)):
        resolved = int(rate)
    else:
        resolved = int(np.floor(rate * region))
    if resolved >= region:
        raise InvalidSpecError(
            f"{axis} rate {rate!r} resolves to {resolved} tokens but the region side is "
            f"only {region}; the rate must leave at least one token"
        )
    return resolved


def resolve_rates(spec: ReductionSpec, region_h: int, region_w: int) -> tuple[int, int]:
    """Resolve a spec's rates against a region, returning integer counts.

    Integer rates pass through; fractional rates map to floor(rate * side).
    Either result must be strictly less than the region side.
    """
    if region_h < 1 or region_w < 1:
        raise InvalidSpecError(f"region dimensions must be positive, got {region_h}x{region_w}")
    return (
        _resolve_one(spec.rate_h, region_h, "vertical"),
        _resolve_one(spec.rate_w, region_w, "horizontal"),
    )


def write_grid(grid) -> bytes:
    """Serialize a token grid to TGRD bytes."""
    arr = as_token_grid(grid)
    h, w, d = arr.shape
    header = HEADER.pack(MAGIC, VERSION, h, w, d)
    return header + arr.astype("<f4", copy=False).tobytes()


def read_grid(data: bytes) -> np.ndarray:
    """Parse TGRD bytes into a token grid, verifying every format invariant."""
    if len(data) < HEADER.size:
        raise GridFileError(f"file too short for header: {len(data)} bytes")
    magic, version, h, w, d = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GridFileError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise GridFileError(f"unsupported format version {version}")
    if min(h, w, d) < 1:
        raise GridFileError(f"grid dimensions must be positive, got {h}x{w}x{d}")
    expected = HEADER.size + 4 * h * w * d
    if len(data) != expected:
        raise GridFileError(f"file length {len(data)} != expected {expected} for {h}x{w}x{d}")
    payload = np.frombuffer(data, dtype="<f4", offset=HEADER.size).reshape(h, w, d)
    if not np.isfinite(payload).all():
        raise GridFileError("payload contains non-finite values")
    return np.ascontiguousarray(payload, dtype=np.float32)


def load_grid(path) -> np.ndarray:
    with open(path, "rb") as f:
        return read_grid(f.read())


def save_grid(path, grid) -> None:
    with open(path, "wb") as f:
        f.write(write_grid(grid))


def window_partition(grid, window: int) -> np.ndarray:
    """Split an (H, W, d) grid into non-overlapping square windows.

    Returns (B, window, window, d) with windows ordered row-major over
    window indices. H and W must both be divisible by `window`.
    """
    arr = as_token_grid(grid)
    h, w, d = arr.shape
    if h % window or w % window:
        raise InvalidSpecError(f"grid {h}x{w} is not divisible into {window}x{window} windows")
    nr, nc = h // window, w // window
    tiles = arr.reshape(nr, window, nc, window, d).transpose(0, 2, 1, 3, 4)
    return np.ascontiguousarray(tiles.reshape(nr * nc, window, window, d))


def window_unpartition(windows, rows: int, cols: int) -> np.ndarray:
    """Reassemble (B, wh, ww, d) windows into a (rows*wh, cols*ww, d) grid.

    Inverse of :func:`window_partition` when the window shape is square;
    also handles rectangular windows produced by per-window reduction.
    """
    arr = np.asarray(windows)
    if arr.ndim != 4:
        raise InvalidSpecError(f"windows must be (B, wh, ww, d), got shape {arr.shape}")
    b, wh, ww, d = arr.shape
    if b != rows * cols:
        raise InvalidSpecError(f"{b} windows cannot fill a {rows}x{cols} window grid")
    tiles = arr.reshape(rows, cols, wh, ww, d).transpose(0, 2, 1, 3, 4)
    return np.ascontiguousarray(tiles.reshape(rows * wh, cols * ww, d))
