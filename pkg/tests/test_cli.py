import csv
import json

import numpy as np
import pytest

from cubistmerge import load_grid, save_grid
from cubistmerge.cli import main
from cubistmerge.synth import gen_blobs


@pytest.fixture
def grid_file(tmp_path, rng):
    path = tmp_path / "input.tgrd"
    save_grid(path, rng.standard_normal((14, 14, 16), dtype=np.float32))
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestGen:
    def test_same_seed_same_file(self, tmp_path):
        a, b = tmp_path / "a.tgrd", tmp_path / "b.tgrd"
        for path in (a, b):
            assert run("gen", "--grid", "12x12", "--dim", "8", "--pattern", "blobs",
                       "--seed", "9", "--output", path) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_uniform_pattern_tokens_all_equal(self, tmp_path):
        path = tmp_path / "u.tgrd"
        run("gen", "--grid", "6x7", "--dim", "5", "--pattern", "uniform",
            "--seed", "0", "--output", path)
        grid = load_grid(path)
        assert (grid == grid[0, 0]).all()

    def test_stripes_pattern(self, tmp_path):
        path = tmp_path / "s.tgrd"
        run("gen", "--grid", "16x8", "--dim", "4", "--pattern", "stripes",
            "--seed", "1", "--output", path)
        grid = load_grid(path)
        assert (grid[0] == grid[1]).all()  # same band
        assert not (grid[0] == grid[-1]).all()

    def test_blobs_merging_avoids_blobs(self):
        from cubistmerge import ReductionSpec, cubist_reduce

        grid, mask = gen_blobs(32, 32, 16, seed=5)
        red = cubist_reduce(grid, ReductionSpec(4, 4))
        sources = red.source_mask
        in_blob_fraction = (sources & mask).sum() / sources.sum()
        assert in_blob_fraction < mask.mean()


class TestReduce:
    def test_fig_shapes(self, tmp_path, grid_file):
        out = tmp_path / "out.tgrd"
        assert run("reduce", "--input", grid_file, "--rh", "2", "--rw", "2",
                   "--output", out) == 0
        assert load_grid(out).shape == (12, 12, 16)

    def test_zero_rate_payload_identity(self, tmp_path, grid_file):
        out = tmp_path / "out.tgrd"
        run("reduce", "--input", grid_file, "--rh", "0", "--rw", "0", "--output", out)
        assert out.read_bytes() == grid_file.read_bytes()

    def test_overlarge_rate_exits_2(self, tmp_path, grid_file, capsys):
        out = tmp_path / "out.tgrd"
        assert run("reduce", "--input", grid_file, "--rh", "14", "--rw", "2",
                   "--output", out) == 2
        assert "error" in capsys.readouterr().err

    def test_malformed_file_exits_3(self, tmp_path, capsys):
        bad = tmp_path / "bad.tgrd"
        bad.write_bytes(b"XXXX" + b"\x00" * 32)
        assert run("reduce", "--input", bad, "--rh", "1", "--rw", "1",
                   "--output", tmp_path / "o.tgrd") == 3

    def test_map_csv_schema(self, tmp_path, grid_file):
        out, map_path = tmp_path / "out.tgrd", tmp_path / "map.csv"
        run("reduce", "--input", grid_file, "--rh", "2", "--rw", "2",
            "--output", out, "--map", map_path)
        with open(map_path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["orig_row", "orig_col", "new_row", "new_col"]
        assert len(rows) == 1 + 14 * 14
        assert rows[1] == ["0", "0", "0", "0"]

    def test_fractional_rates(self, tmp_path, grid_file):
        out = tmp_path / "out.tgrd"
        run("reduce", "--input", grid_file, "--rh", "0.5", "--rw", "0.25", "--output", out)
        assert load_grid(out).shape == (7, 11, 16)


class TestCompare:
    def test_nine_rows_and_metric_ordering(self, tmp_path, grid_file):
        out = tmp_path / "cmp.csv"
        assert run("compare", "--input", grid_file, "--rh", "2", "--rw", "2",
                   "--output", out) == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 9
        combos = {(r["strategy"], r["representation"]) for r in rows}
        assert len(combos) == 9
        by_combo = {(r["strategy"], r["representation"]): r for r in rows}
        for representation in ("max_per_dim", "weighted_average", "max_vector"):
            naive = float(by_combo[("naive_local", representation)]["retained_sim_h"])
            bi = float(by_combo[("bipartite_local", representation)]["retained_sim_h"])
            assert naive >= bi - 1e-9

    def test_identical_grid_reconstructs_exactly(self, tmp_path):
        path = tmp_path / "u.tgrd"
        run("gen", "--grid", "12x12", "--dim", "8", "--pattern", "uniform",
            "--seed", "3", "--output", path)
        out = tmp_path / "cmp.csv"
        run("compare", "--input", path, "--rh", "2", "--rw", "2", "--output", out)
        with open(out) as f:
            for row in csv.DictReader(f):
                assert float(row["recon_mse"]) == 0.0

    def test_k_list_multiplies_rows(self, tmp_path, grid_file):
        out = tmp_path / "cmp.csv"
        run("compare", "--input", grid_file, "--rh", "1", "--rw", "1",
            "--k-list", "2,3", "--output", out)
        with open(out) as f:
            assert len(list(csv.DictReader(f))) == 27


class TestBench:
    def test_csv_and_trace(self, tmp_path):
        out, trace = tmp_path / "bench.csv", tmp_path / "trace.jsonl"
        assert run("bench", "--depth", "2", "--dim", "16", "--grid", "8x8",
                   "--heads", "2", "--layer", "0", "--rates", "0,2",
                   "--repeats", "2", "--seed", "7", "--output", out,
                   "--trace", trace) == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert [r["rate_h"] for r in rows] == ["0", "2"]
        assert float(rows[0]["speedup"]) == 1.0
        assert rows[1]["output_shape"] == "6x6"
        lines = [json.loads(l) for l in trace.read_text().splitlines()]
        assert len(lines) == 4  # two rates x two layers
        assert all(set(l) == {"layer", "tokens", "ms"} for l in lines)

    def test_zero_rate_added_when_missing(self, tmp_path):
        out = tmp_path / "bench.csv"
        run("bench", "--depth", "1", "--dim", "16", "--grid", "8x8", "--heads", "2",
            "--rates", "2", "--repeats", "1", "--output", out)
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert [r["rate_h"] for r in rows] == ["0", "2"]

    def test_invalid_config_exits_2(self, tmp_path):
        # head dim 7 is incompatible with 2D rotary
        assert run("bench", "--depth", "1", "--dim", "14", "--grid", "8x8",
                   "--heads", "2", "--rates", "0") == 2

    def test_repeats_change_timings_not_results(self, tmp_path):
        outputs = []
        for repeats in ("1", "3"):
            out = tmp_path / f"bench_{repeats}.csv"
            run("bench", "--depth", "1", "--dim", "16", "--grid", "8x8",
                "--heads", "2", "--rates", "0,2", "--repeats", repeats,
                "--seed", "5", "--output", out)
            with open(out) as f:
                rows = list(csv.DictReader(f))
            for row in rows:
                row.pop("wall_ms"), row.pop("speedup")
            outputs.append(rows)
        assert outputs[0] == outputs[1]
