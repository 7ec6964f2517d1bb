"""Command-line benchmark surface.

Subcommands:
  gen      write a synthetic grid file
  reduce   reduce a grid file, optionally dumping the merge map as CSV
  compare  run every strategy x representation combination on one input
  bench    toy-transformer timing sweep across reduction rates

Exit codes: 0 success, 2 invalid spec or arguments, 3 malformed grid file.
All outputs are deterministic given the arguments and seed, except wall-time
columns.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from .bench import REPORT_COLUMNS, run_rate_sweep
from .errors import GridFileError, InvalidSpecError
from .grid import REPRESENTATIONS, STRATEGIES, ReductionSpec, load_grid, save_grid
from .pipeline import cubist_reduce, unmerge
from .synth import PATTERNS, gen_grid

MAP_COLUMNS = ("orig_row", "orig_col", "new_row", "new_col")
COMPARE_COLUMNS = (
    "strategy", "representation", "rate_h", "rate_w", "window",
    "input_shape", "output_shape", "retained_sim_h", "retained_sim",
    "recon_mse", "wall_ms",
)


def _parse_rate(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"rate must be an int or float, got {text!r}")


def _parse_hw(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW (e.g. 14x14), got {text!r}")


def _parse_rate_list(text: str):
    return [_parse_rate(part) for part in text.split(",") if part]


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _write_csv(path, columns, rows):
    out = _open_out(path)
    try:
        writer = csv.writer(out)
        writer.writerow(columns)
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()


def _write_map_csv(path, merge_map):
    _write_csv(path, MAP_COLUMNS, merge_map.iter_rows())


def cmd_gen(args) -> int:
    grid = gen_grid(args.pattern, args.grid[0], args.grid[1], args.dim, args.seed)
    save_grid(args.output, grid)
    return 0


def cmd_reduce(args) -> int:
    grid = load_grid(args.input)
    spec = ReductionSpec(args.rh, args.rw, window=args.window,
                         strategy=args.strategy, representation=args.repr)
    reduced = cubist_reduce(grid, spec)
    save_grid(args.output, reduced.grid)
    if args.map:
        _write_map_csv(args.map, reduced.merge_map)
    return 0


def cmd_compare(args) -> int:
    grid = load_grid(args.input)
    pairs = [(args.rh, args.rw)] + [(k, k) for k in (args.k_list or [])]
    rows = []
    for rate_h, rate_w in pairs:
        per_strategy = {}
        for strategy in STRATEGIES:
            for representation in REPRESENTATIONS:
                spec = ReductionSpec(rate_h, rate_w, window=args.window,
                                     strategy=strategy, representation=representation)
                start = time.perf_counter()
                reduced = cubist_reduce(grid, spec)
                wall_ms = (time.perf_counter() - start) * 1000.0
                recon = unmerge(reduced)
                mse = float(np.mean((recon.astype(np.float64) - grid.astype(np.float64)) ** 2))
                sim_h = reduced.phase_sim_sums[0] if reduced.phase_sim_sums else reduced.sim_sum
                per_strategy[(strategy, representation)] = sim_h
                out_shape = f"{reduced.grid.shape[0]}x{reduced.grid.shape[1]}"
                rows.append([
                    strategy, representation, rate_h, rate_w,
                    args.window if args.window is not None else "",
                    f"{grid.shape[0]}x{grid.shape[1]}", out_shape,
                    f"{sim_h:.6f}", f"{reduced.sim_sum:.6f}", f"{mse:.6e}", f"{wall_ms:.3f}",
                ])
        # the relaxed top-k selection can never retain less first-phase
        # similarity than the role-constrained one on the same input
        for representation in REPRESENTATIONS:
            naive = per_strategy[("naive_local", representation)]
            bipartite = per_strategy[("bipartite_local", representation)]
            if naive < bipartite - 1e-9:
                raise AssertionError(
                    f"retained similarity regression: naive {naive} < bipartite {bipartite}"
                )
    _write_csv(args.output, COMPARE_COLUMNS, rows)
    return 0


def cmd_bench(args) -> int:
    rows, traces = run_rate_sweep(
        grid_hw=args.grid, dim=args.dim, depth=args.depth, heads=args.heads,
        rates=args.rates, layer=args.layer, window=args.window,
        strategy=args.strategy, representation=args.repr,
        repeats=args.repeats, seed=args.seed,
    )
    _write_csv(args.output, REPORT_COLUMNS, (row.as_csv_row() for row in rows))
    if args.trace:
        with open(args.trace, "w") as f:
            for rate in sorted(traces):
                f.write(traces[rate].to_jsonl() + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubistmerge",
        description="Structure-preserving token-grid reduction benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic grid file")
    p.add_argument("--grid", type=_parse_hw, required=True, metavar="HxW")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--pattern", choices=PATTERNS, default="blobs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reduce", help="reduce a grid file")
    p.add_argument("--input", required=True)
    p.add_argument("--rh", type=_parse_rate, required=True)
    p.add_argument("--rw", type=_parse_rate, required=True)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--strategy", choices=STRATEGIES, default="bipartite_local")
    p.add_argument("--repr", choices=REPRESENTATIONS, default="max_per_dim")
    p.add_argument("--output", required=True)
    p.add_argument("--map", default=None, help="also write the merge map as CSV")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("compare", help="A/B all strategies and representations")
    p.add_argument("--input", required=True)
    p.add_argument("--rh", type=_parse_rate, required=True)
    p.add_argument("--rw", type=_parse_rate, required=True)
    p.add_argument("--k-list", type=_parse_rate_list, default=None,
                   help="extra uniform rates to compare, comma-separated")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="toy-transformer timing sweep")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--grid", type=_parse_hw, required=True, metavar="HxW")
    p.add_argument("--heads", type=int, default=6)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--rates", type=_parse_rate_list, required=True,
                   help="comma-separated; a zero-rate baseline is always included")
    p.add_argument("--strategy", choices=STRATEGIES, default="bipartite_local")
    p.add_argument("--repr", choices=REPRESENTATIONS, default="max_per_dim")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.add_argument("--trace", default=None, help="JSON-lines per-layer trace path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GridFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InvalidSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
