"""Minimal forward-only transformer over token grids.

The stack exists to exercise spatial machinery against reduced grids: every
layer runs (optionally windowed) softmax attention with 2D rotary position
rotation, and a configured reduction pass is applied when its layer is
reached. Weights are seeded pseudo-random; there is no training path.

Positions always index the *current* grid: after a reduction the surviving
tokens are re-addressed as a fresh regular (H', W') grid, which is exactly
the property structured reduction is meant to provide. Window attention
refuses any grid whose sides the window does not divide -- that refusal is
the observable failure mode of unstructured merging.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError, SpatialIncompatibilityError
from .grid import ReductionSpec, as_token_grid
from .pipeline import cubist_reduce


@dataclass(frozen=True)
class ToyViTConfig:
    depth: int
    dim: int
    heads: int
    window: int | None = None
    pos_mode: str = "rope2d"
    reduction: ReductionSpec | None = None
    proportional_attention: bool = False
    mlp_ratio: int = 4
    rope_base: float = 10000.0
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1 or self.dim < 1 or self.heads < 1 or self.mlp_ratio < 1:
            raise InvalidSpecError("depth, dim, heads, and mlp_ratio must be positive")
        if self.dim % self.heads:
            raise InvalidSpecError(f"dim {self.dim} is not divisible by {self.heads} heads")
        if self.pos_mode not in ("rope2d", "none"):
            raise InvalidSpecError(f"unknown pos_mode {self.pos_mode!r}")
        if self.pos_mode == "rope2d" and (self.dim // self.heads) % 4:
            raise InvalidSpecError(
                f"head dim {self.dim // self.heads} must be divisible by 4 for 2D rotary"
            )
        if self.window is not None and self.window < 1:
            raise InvalidSpecError("window must be positive")
        if self.reduction is not None and self.reduction.layer >= self.depth:
            raise InvalidSpecError(
                f"reduction layer {self.reduction.layer} is out of range for depth {self.depth}"
            )
        if (self.proportional_attention and self.reduction is not None
                and self.reduction.representation != "weighted_average"):
            raise InvalidSpecError(
                "proportional attention needs token sizes, which only the "
                "weighted_average representation tracks"
            )


@dataclass(frozen=True)
class LayerWeights:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    w1: np.ndarray
    w2: np.ndarray


def init_weights(config: ToyViTConfig) -> list[LayerWeights]:
    """Deterministic pseudo-random weights for every layer."""
    rng = np.random.default_rng(config.seed)
    d, hidden = config.dim, config.mlp_ratio * config.dim

    def mat(rows, cols, scale):
        return (rng.standard_normal((rows, cols), dtype=np.float32) * scale).astype(np.float32)

    layers = []
    for _ in range(config.depth):
        layers.append(LayerWeights(
            wq=mat(d, d, d ** -0.5),
            wk=mat(d, d, d ** -0.5),
            wv=mat(d, d, d ** -0.5),
            wo=mat(d, d, d ** -0.5),
            w1=mat(d, hidden, d ** -0.5),
            w2=mat(hidden, d, hidden ** -0.5),
        ))
    return layers


def rope2d_apply(x, rows, cols, base: float = 10000.0) -> np.ndarray:
    """Rotate query/key vectors by their (row, col) grid coordinates.

    x: (..., N, head_dim) with head_dim divisible by 4. The first half of
    the head dim rotates by row-position angles, the second half by column
    angles; within each half, consecutive (even, odd) pairs are rotated.
    Position (0, 0) is the identity, and the inner product of two rotated
    vectors depends only on their coordinate difference.
    """
    x = np.asarray(x, dtype=np.float32)
    head_dim = x.shape[-1]
    if head_dim % 4:
        raise InvalidSpecError(f"head dim {head_dim} must be divisible by 4 for 2D rotary")
    half = head_dim // 2
    quarter = head_dim // 4
    inv_freq = base ** (-np.arange(quarter, dtype=np.float64) / quarter)
    out = np.empty_like(x)
    for pos, lo in ((rows, 0), (cols, half)):
        angles = np.asarray(pos, dtype=np.float64)[:, None] * inv_freq
        cos = np.cos(angles).astype(np.float32)
        sin = np.sin(angles).astype(np.float32)
        even = x[..., lo:lo + half:2]
        odd = x[..., lo + 1:lo + half:2]
        out[..., lo:lo + half:2] = even * cos - odd * sin
        out[..., lo + 1:lo + half:2] = even * sin + odd * cos
    return out


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    scores = scores - scores.max(axis=-1, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=-1, keepdims=True)
    return scores


def _attend_block(tokens, weights: LayerWeights, heads: int, rows, cols,
                  sizes, proportional: bool, pos_mode: str, base: float) -> np.ndarray:
    """Softmax attention over one block of tokens, (T, d) -> (T, d)."""
    t, d = tokens.shape
    head_dim = d // heads
    q = tokens @ weights.wq
    k = tokens @ weights.wk
    v = tokens @ weights.wv
    q = q.reshape(t, heads, head_dim).transpose(1, 0, 2)
    k = k.reshape(t, heads, head_dim).transpose(1, 0, 2)
    v = v.reshape(t, heads, head_dim).transpose(1, 0, 2)
    if pos_mode == "rope2d":
        q = rope2d_apply(q, rows, cols, base)
        k = rope2d_apply(k, rows, cols, base)
    bias = None
    if proportional and sizes is not None:
        bias = np.log(sizes.astype(np.float32))
    out = np.empty((heads, t, head_dim), dtype=np.float32)
    scale = np.float32(head_dim ** -0.5)
    for h in range(heads):
        scores = (q[h] @ k[h].T) * scale
        if bias is not None:
            scores += bias[None, :]
        out[h] = _softmax_rows(scores) @ v[h]
    return out.transpose(1, 0, 2).reshape(t, d) @ weights.wo


def window_attention(grid, window: int | None, weights: LayerWeights, *, heads: int,
                     sizes=None, proportional: bool = False, pos_mode: str = "rope2d",
                     base: float = 10000.0) -> np.ndarray:
    """Softmax attention within each non-overlapping window of the grid.

    `window` of None attends over the whole grid as one block. Grid sides
    that the window does not divide raise SpatialIncompatibilityError:
    a layout without uniform rows and columns cannot be windowed.
    """
    grid = as_token_grid(grid)
    height, width, dim = grid.shape
    if sizes is not None:
        sizes = np.asarray(sizes, dtype=np.int64)
        if sizes.shape != (height, width):
            raise InvalidSpecError(f"sizes must be ({height}, {width}), got {sizes.shape}")
    row_coord, col_coord = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    if window is None:
        blocks = [(slice(0, height), slice(0, width))]
    else:
        if height % window or width % window:
            raise SpatialIncompatibilityError(
                f"token layout {height}x{width} cannot be partitioned into "
                f"{window}x{window} windows"
            )
        blocks = [
            (slice(r, r + window), slice(c, c + window))
            for r in range(0, height, window)
            for c in range(0, width, window)
        ]
    out = np.empty_like(grid)
    for rs, cs in blocks:
        tokens = grid[rs, cs].reshape(-1, dim)
        out[rs, cs] = _attend_block(
            tokens, weights, heads,
            row_coord[rs, cs].ravel(), col_coord[rs, cs].ravel(),
            None if sizes is None else sizes[rs, cs].ravel(),
            proportional, pos_mode, base,
        ).reshape(out[rs, cs].shape)
    return out


def _layer_norm(grid: np.ndarray) -> np.ndarray:
    mean = grid.mean(axis=-1, keepdims=True)
    var = grid.var(axis=-1, keepdims=True)
    return (grid - mean) / np.sqrt(var + np.float32(1e-5))


@dataclass
class LayerTrace:
    layer: int
    tokens: int
    ms: float
    quad_ops: int
    linear_ops: int


@dataclass
class ForwardTrace:
    layers: list[LayerTrace] = field(default_factory=list)

    @property
    def total_ms(self) -> float:
        return sum(row.ms for row in self.layers)

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps({"layer": row.layer, "tokens": row.tokens, "ms": row.ms})
            for row in self.layers
        )


class ToyViT:
    """A seeded stack of pre-norm attention + MLP layers over a token grid."""

    def __init__(self, config: ToyViTConfig):
        self.config = config
        self.weights = init_weights(config)
        self.last_reduction = None  # ReducedGrid from the most recent forward

    def forward(self, grid) -> tuple[np.ndarray, ForwardTrace]:
        """Run all layers; apply the configured reduction when its layer starts.

        Returns the final grid and a per-layer trace of token count, wall
        time, and analytic multiply-accumulate counts (attention quadratic
        term and projection/MLP linear term; the reduction itself is timed
        but not counted as ops).
        """
        cfg = self.config
        grid = as_token_grid(grid)
        sizes = None
        trace = ForwardTrace()
        for layer in range(cfg.depth):
            start = time.perf_counter()
            if cfg.reduction is not None and layer == cfg.reduction.layer:
                reduced = cubist_reduce(grid, cfg.reduction)
                self.last_reduction = reduced
                grid = reduced.grid
                sizes = reduced.sizes
            height, width, d = grid.shape
            n_tokens = height * width
            w = self.weights[layer]
            attn = window_attention(
                _layer_norm(grid), cfg.window, w, heads=cfg.heads, sizes=sizes,
                proportional=cfg.proportional_attention, pos_mode=cfg.pos_mode,
                base=cfg.rope_base,
            )
            grid = grid + attn
            hidden = _layer_norm(grid).reshape(n_tokens, d)
            mlp = np.maximum(hidden @ w.w1, np.float32(0.0)) @ w.w2
            grid = grid + mlp.reshape(height, width, d)
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            block = n_tokens if cfg.window is None else cfg.window * cfg.window
            n_blocks = n_tokens // block
            quad = 2 * n_blocks * block * block * d
            linear = 4 * n_tokens * d * d + 2 * n_tokens * d * (cfg.mlp_ratio * d)
            trace.layers.append(LayerTrace(layer, n_tokens, elapsed_ms, quad, linear))
        return grid, trace


def forward(grid, config: ToyViTConfig) -> tuple[np.ndarray, ForwardTrace]:
    """Convenience wrapper: build a ToyViT from the config and run it once."""
    return ToyViT(config).forward(grid)
