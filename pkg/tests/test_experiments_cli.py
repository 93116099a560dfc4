import csv
import json

import numpy as np
import pytest

from pftree import experiments as ex
from pftree.cli import main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestExperimentConfig:
    def test_defaults_valid(self):
        cfg = ex.ExperimentConfig()
        assert cfg.schemes == ("multinomial",)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"model": "nope"},
            {"n_values": ()},
            {"t_values": ()},
            {"schemes": ()},
            {"schemes": ("residual",)},
            {"replicates": 0},
            {"workers": 0},
            {"n_values": (0,)},
            {"substeps": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            ex.ExperimentConfig(**kwargs)


class TestTreeStatsRows:
    def test_degenerate_filter_row(self):
        cfg = ex.ExperimentConfig(model="neutral", n_values=(1,), t_values=(10,), replicates=1)
        rows = ex.tree_stats_rows(cfg)
        assert len(rows) == 1
        model, scheme, n, horizon, rep, n_t, c_t, d_t, m_t, adjusted = rows[0]
        assert (model, scheme, n, horizon, rep) == ("neutral", "multinomial", 1, 10, 0)
        assert n_t == 11
        assert adjusted == 1.0

    def test_row_order_is_deterministic(self):
        cfg = ex.ExperimentConfig(
            model="neutral", n_values=(2, 4), t_values=(3, 5),
            schemes=("multinomial", "systematic"), replicates=2,
        )
        rows = ex.tree_stats_rows(cfg)
        keys = [(r[1], r[2], r[3], r[4]) for r in rows]
        expect = [
            (s, n, t, r)
            for s in ("multinomial", "systematic")
            for n in (2, 4)
            for t in (3, 5)
            for r in range(2)
        ]
        assert keys == expect

    def test_workers_do_not_change_output(self):
        base = dict(model="neutral", n_values=(4,), t_values=(8,), replicates=4)
        serial = ex.tree_stats_rows(ex.ExperimentConfig(**base, workers=1))
        pooled = ex.tree_stats_rows(ex.ExperimentConfig(**base, workers=2))
        assert serial == pooled

    def test_per_step_stream(self):
        cfg = ex.ExperimentConfig(
            model="neutral", n_values=(3,), t_values=(4,), replicates=1, per_step=True
        )
        rows = ex.tree_stats_rows(cfg)
        assert len(rows) == 5
        assert [r[5] for r in rows] == [0, 1, 2, 3, 4]


class TestBenchRows:
    def test_single_particle_smoke(self):
        cfg = ex.ExperimentConfig(model="neutral", n_values=(1,), t_values=(100,), replicates=1)
        rows = ex.bench_rows(cfg)
        buckets = [r[2] for r in rows]
        assert buckets == sorted(buckets)
        assert all(r[3] > 0 for r in rows)
        assert all(r[0] == 1 and r[1] == 100 for r in rows)


class TestCli:
    def test_tree_stats_deterministic_bytes(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["tree-stats", "--model", "neutral", "--N", "4", "--T", "6",
                "--replicates", "2", "--seed", "3"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        header, rows = read_csv(out1)
        assert header == ex.TREE_STATS_HEADER
        assert len(rows) == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2

    def test_bad_flag_value_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["tree-stats", "--N", "x,y"])
        assert err.value.code == 2

    def test_usage_error_returns_2(self, tmp_path):
        rc = main(["tree-stats", "--model", "neutral", "--N", "4", "--T", "5",
                   "--replicates", "0", "--out", str(tmp_path / "x.csv")])
        assert rc == 2

    def test_runtime_error_returns_1(self, tmp_path):
        rc = main(["filter", "--data", str(tmp_path / "missing.csv"),
                   "--out", str(tmp_path / "y.csv")])
        assert rc == 1

    def test_config_file_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": "neutral", "N": [2], "T": [4],
                                   "replicates": 2, "seed": 9}))
        out = tmp_path / "out.csv"
        assert main(["tree-stats", "--config", str(cfg), "--out", str(out)]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 2
        assert rows[0][0] == "neutral"
        # command line beats the config file
        out2 = tmp_path / "out2.csv"
        assert main(["tree-stats", "--config", str(cfg), "--replicates", "1",
                     "--out", str(out2)]) == 0
        _, rows2 = read_csv(out2)
        assert len(rows2) == 1

    def test_config_unreadable_exits_2(self, tmp_path):
        assert main(["tree-stats", "--config", str(tmp_path / "none.json")]) == 2

    def test_theory_laws_values(self, tmp_path):
        out = tmp_path / "laws.csv"
        assert main(["theory", "laws", "--N", "2", "--eps", "1", "--q", "2",
                     "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ex.LAWS_HEADER
        assert [r[3] for r in rows] == ["1", "2"]
        assert [float(r[4]) for r in rows] == [0.5, 0.5]

    def test_theory_bounds_schema(self, tmp_path):
        out = tmp_path / "bounds.csv"
        assert main(["theory", "bounds", "--neutral", "--N", "8", "--T", "50",
                     "--runs", "3", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ex.REPORT_HEADER
        quantities = [r[0] for r in rows]
        assert quantities == ["d_T", "n_T", "delta2_hat"]
        d_row = rows[0]
        assert float(d_row[4]) <= float(d_row[6])

    def test_theory_lemma1_ratios(self, tmp_path):
        out = tmp_path / "lemma1.csv"
        assert main(["theory", "lemma1", "--eps", "0.5", "--N", "10,100",
                     "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ex.LEMMA1_HEADER
        ratios = [float(r[4]) for r in rows]
        assert ratios[1] <= ratios[0] * 1.1

    def test_theory_coupling_no_violations(self, tmp_path):
        out = tmp_path / "coup.csv"
        assert main(["theory", "coupling", "--N", "10", "--eps", "0.5",
                     "--runs", "50", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ex.COUPLING_HEADER
        assert rows[0][3] == "0"

    def test_generate_data_then_filter(self, tmp_path):
        data = tmp_path / "data.csv"
        assert main(["generate-data", "--model", "pz", "--T", "30", "--seed", "5",
                     "--out", str(data)]) == 0
        header, rows = read_csv(data)
        assert header == ["t", "y", "P", "Z", "alpha"]
        assert len(rows) == 31  # t = 0 .. 30

        stats_out = tmp_path / "stats.csv"
        tree_out = tmp_path / "tree.json"
        assert main(["filter", "--model", "pz", "--data", str(data), "--N", "16",
                     "--seed", "5", "--out", str(stats_out),
                     "--dump-tree", str(tree_out)]) == 0
        header, rows = read_csv(stats_out)
        assert header == ["t", "n_T", "c_T", "d_T", "m_T", "adjusted"]
        assert len(rows) == 31
        snap = json.loads(tree_out.read_text())
        assert set(snap) == {"capacity", "current_time", "slots", "leaves"}
        assert snap["current_time"] == 30
        assert len(snap["leaves"]) == 16

    def test_generate_data_requires_out(self):
        assert main(["generate-data", "--model", "neutral", "--T", "5"]) == 2

    def test_bench_csv_schema(self, tmp_path):
        out = tmp_path / "bench.csv"
        assert main(["bench", "--model", "neutral", "--N", "4", "--T", "60",
                     "--replicates", "1", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ex.BENCH_HEADER
        assert all(float(r[3]) > 0 for r in rows)

    def test_every_emitted_csv_parses(self, tmp_path):
        # schema check: every command's output parses with numeric columns
        emitted = []
        data = tmp_path / "d.csv"
        main(["generate-data", "--model", "neutral", "--T", "10", "--out", str(data)])
        emitted.append((data, ["t", "y", "x0"]))
        ts = tmp_path / "ts.csv"
        main(["tree-stats", "--model", "neutral", "--N", "2", "--T", "3",
              "--replicates", "1", "--out", str(ts)])
        emitted.append((ts, ex.TREE_STATS_HEADER))
        laws = tmp_path / "l.csv"
        main(["theory", "laws", "--N", "3", "--eps", "0.5", "--q", "3", "--out", str(laws)])
        emitted.append((laws, ex.LAWS_HEADER))
        for path, expect_header in emitted:
            header, rows = read_csv(path)
            assert header == expect_header
            for row in rows:
                assert len(row) == len(header)
                for cell in row[2:]:
                    if cell not in ("", "nan"):
                        float(cell)  # numeric or empty
