"""Compare the numba and numpy kernel backends on the reduction hot path.

Usage: python benchmarks/backend_bench.py

Times cubist_reduce end to end (selection + merge kernels; similarity stays
in shared numpy either way) and checks that both backends produce
bit-identical grids and maps.
"""

import statistics
import time

import numpy as np

from cubistmerge import ReductionSpec, backend, cubist_reduce

CASES = [
    ((28, 28, 192), ReductionSpec(4, 4)),
    ((56, 56, 384), ReductionSpec(6, 6)),
    ((56, 56, 384), ReductionSpec(6, 6, strategy="naive_local")),
    ((64, 64, 256), ReductionSpec(4, 4, window=16)),
    ((112, 112, 384), ReductionSpec(8, 8)),
]
REPEATS = 5


def time_reduce(grid, spec):
    cubist_reduce(grid, spec)  # warm-up (JIT compile, allocator)
    times = []
    for _ in range(REPEATS):
        start = time.perf_counter()
        result = cubist_reduce(grid, spec)
        times.append((time.perf_counter() - start) * 1000.0)
    return statistics.median(times), result


def main():
    rng = np.random.default_rng(0)
    print(f"{'case':<42} {'numpy ms':>9} {'numba ms':>9} {'speedup':>8}")
    for shape, spec in CASES:
        grid = rng.standard_normal(shape, dtype=np.float32)
        results = {}
        for name in ("numpy", "numba"):
            backend.use_backend(name)
            results[name] = time_reduce(grid, spec)
        ms_np, red_np = results["numpy"]
        ms_nb, red_nb = results["numba"]
        assert np.array_equal(red_np.grid, red_nb.grid), "backend outputs diverge"
        assert np.array_equal(red_np.merge_map.targets, red_nb.merge_map.targets)
        label = (f"{shape[0]}x{shape[1]}x{shape[2]} {spec.strategy}"
                 f"{f' w={spec.window}' if spec.window else ''}")
        print(f"{label:<42} {ms_np:>9.2f} {ms_nb:>9.2f} {ms_np / ms_nb:>7.1f}x")
    backend.use_backend("auto")


if __name__ == "__main__":
    main()
