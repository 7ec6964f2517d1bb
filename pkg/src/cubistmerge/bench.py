"""Timing sweeps over reduction rates on the toy transformer.

Each rate gets one discarded warm-up forward (JIT compilation, allocator
warm-up) followed by `repeats` timed runs; the reported wall time is their
median. Speedups are normalized to the zero-rate run from the same sweep,
so the zero-rate row is always exactly 1.0. Model outputs are deterministic
per seed; only the clock readings vary between repeats.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .grid import ReductionSpec
from .vit import ForwardTrace, ToyViT, ToyViTConfig

REPORT_COLUMNS = (
    "strategy", "representation", "rate_h", "rate_w", "layer", "window",
    "input_shape", "output_shape", "mean_similarity", "wall_ms", "speedup",
)


@dataclass
class BenchRow:
    strategy: str
    representation: str
    rate_h: int | float
    rate_w: int | float
    layer: int
    window: int | None
    input_shape: str
    output_shape: str
    mean_similarity: float
    wall_ms: float
    speedup: float

    def as_csv_row(self) -> list:
        return [
            self.strategy, self.representation, self.rate_h, self.rate_w,
            self.layer, self.window if self.window is not None else "",
            self.input_shape, self.output_shape,
            f"{self.mean_similarity:.6f}" if self.mean_similarity == self.mean_similarity else "",
            f"{self.wall_ms:.3f}", f"{self.speedup:.4f}",
        ]


def run_rate_sweep(*, grid_hw: tuple[int, int], dim: int, depth: int, heads: int,
                   rates, layer: int = 0, window: int | None = None,
                   strategy: str = "bipartite_local", representation: str = "max_per_dim",
                   pos_mode: str = "rope2d", mlp_ratio: int = 4, repeats: int = 3,
                   seed: int = 0) -> tuple[list[BenchRow], dict[float, ForwardTrace]]:
    """Run the toy transformer across reduction rates and time each one.

    A zero-rate baseline is always included (prepended if absent) because
    speedups are defined against it.
    """
    height, width = grid_hw
    rates = list(dict.fromkeys(rates))
    if 0 not in rates and 0.0 not in rates:
        rates = [0] + rates
    rng = np.random.default_rng(seed)
    grid = rng.standard_normal((height, width, dim), dtype=np.float32)
    rows: list[BenchRow] = []
    traces: dict[float, ForwardTrace] = {}
    for rate in rates:
        spec = ReductionSpec(rate, rate, layer=layer, window=window,
                             strategy=strategy, representation=representation)
        config = ToyViTConfig(depth=depth, dim=dim, heads=heads, window=window,
                              pos_mode=pos_mode, reduction=spec, mlp_ratio=mlp_ratio,
                              seed=seed)
        model = ToyViT(config)
        model.forward(grid)  # warm-up, discarded
        times = []
        trace = None
        out = None
        for _ in range(max(1, repeats)):
            start = time.perf_counter()
            out, trace = model.forward(grid)
            times.append((time.perf_counter() - start) * 1000.0)
        wall = statistics.median(times)
        reduction = model.last_reduction
        rows.append(BenchRow(
            strategy=strategy,
            representation=representation,
            rate_h=rate,
            rate_w=rate,
            layer=layer,
            window=window,
            input_shape=f"{height}x{width}",
            output_shape=f"{out.shape[0]}x{out.shape[1]}",
            mean_similarity=reduction.mean_similarity if reduction is not None else float("nan"),
            wall_ms=wall,
            speedup=1.0,
        ))
        traces[rate] = trace
    baseline_ms = next(row.wall_ms for row in rows if row.rate_h == 0)
    for row in rows:
        row.speedup = 1.0 if row.rate_h == 0 else baseline_ms / row.wall_ms
    return rows, traces
