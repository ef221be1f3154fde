import csv
import json

import numpy as np
import pytest
import yaml

from ksimplex2vec import pipeline
from ksimplex2vec.errors import ConfigError, EmptyDimension, StageError
from ksimplex2vec.pipeline import (
    ExperimentGrid,
    RunConfig,
    apply_overrides,
    config_from_dict,
    derive_seed,
    load_config,
    run_grid,
    run_pipeline,
)

FILES = ["manifest.json", "complex.txt", "walks.txt", "embedding.txt", "clusters.csv", "pca.csv",
         "scatter.svg", "labels.csv"]


def small_config(tmp_path, **extra) -> RunConfig:
    data = {
        "seed": 11,
        "sbm": {"block_sizes": [6, 6, 6], "p_in": 0.9, "p_out": 0.2},
        "k": 1,
        "walks_per_simplex": 3,
        "walk_length": 6,
        "embed": {"dim": 4, "window": 3, "epochs": 2},
        "out_dir": str(tmp_path / "out"),
    }
    data.update(extra)
    return config_from_dict(data)


class TestConfig:
    def test_defaults_validate_with_seed(self):
        RunConfig(seed=0).validate()

    def test_seed_required(self):
        with pytest.raises(ConfigError, match="seed"):
            RunConfig().validate()

    @pytest.mark.parametrize("data", [{"bogus": 1}, {"embed": {"dimension": 3}}, {"sbm": 4}])
    def test_unknown_or_malformed_keys(self, data):
        with pytest.raises(ConfigError):
            config_from_dict(data)

    def test_type_errors(self):
        with pytest.raises(ConfigError):
            config_from_dict({"k": "one"})
        with pytest.raises(ConfigError):
            config_from_dict({"walk_length": 2.5})

    def test_yaml_exponent_strings(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("seed: 3\nembed:\n  lr_final: 1e-05\ncluster:\n  tol: 1e-06\n")
        cfg = load_config(p)
        assert cfg.embed.lr_final == 1e-5 and cfg.cluster.tol == 1e-6

    def test_missing_file_and_bad_yaml(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.yaml")
        (tmp_path / "bad.yaml").write_text("seed: [1,\n")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "bad.yaml")

    @pytest.mark.parametrize("bad", [
        {"k": -1}, {"max_dim": 1, "k": 2}, {"mode": "diagonal"}, {"walks_per_simplex": 0},
        {"embed": {"dim": 0}}, {"cluster": {"method": "spectral"}}, {"sbm": {"p_in": 0.1, "p_out": 0.5}},
        {"edges": "/definitely/not/here.txt"}, {"seed": -5}, {"pca_dim": 30},
    ])
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            config_from_dict({"seed": 1, **bad}).validate()

    def test_overrides_win(self, tmp_path):
        cfg = small_config(tmp_path)
        out = apply_overrides(cfg, {"embed.dim": 9, "k": None, "walk_length": 2})
        assert out.embed.dim == 9 and out.k == 1 and out.walk_length == 2
        assert cfg.embed.dim == 4
        with pytest.raises(ConfigError):
            apply_overrides(cfg, {"embed.nothing": 1})

    def test_derived_seeds(self):
        cfg = RunConfig(seed=5)
        seeds = cfg.stage_seeds()
        assert set(seeds) == {"sbm", "walks", "train", "cluster"}
        assert len(set(seeds.values())) == 4
        assert all(0 <= s < 2**63 for s in seeds.values())
        assert seeds == RunConfig(seed=5).stage_seeds()
        assert derive_seed(5, 0) != derive_seed(6, 0)


class TestRun:
    def test_outputs_and_manifest(self, tmp_path):
        cfg = small_config(tmp_path)
        m = run_pipeline(cfg)
        run = tmp_path / "out" / m["run_id"]
        for name in FILES:
            assert (run / name).is_file(), name
        disk = json.loads((run / "manifest.json").read_text())
        assert disk == json.loads(json.dumps(m))
        assert disk["status"] == "ok"
        assert disk["derived_seeds"] == cfg.stage_seeds()
        assert disk["config"]["embed"]["dim"] == 4
        assert 0 <= disk["results"]["rand_index"] <= 1
        assert disk["results"]["n_clusters"] == disk["results"]["n_classes"] == 6
        with open(run / "clusters.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["simplex", "label"] and len(rows) - 1 == disk["complex"]["counts"][1]
        header = (run / "walks.txt").read_text().splitlines()[0]
        assert header == f"#k=1 N=3 l=6 mode=both seed={cfg.stage_seeds()['walks']}"

    def test_rerun_from_manifest_is_identical(self, tmp_path):
        m = run_pipeline(small_config(tmp_path))
        first = tmp_path / "out" / m["run_id"]
        cfg = load_config(first / "manifest.json")
        cfg.out_dir = str(tmp_path / "again")
        m2 = run_pipeline(cfg)
        second = tmp_path / "again" / m2["run_id"]
        for name in FILES[1:]:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
        assert m["results"] == m2["results"]

    def test_dbscan_run(self, tmp_path):
        m = run_pipeline(small_config(tmp_path, cluster={"method": "dbscan", "min_pts": 3}))
        r = m["results"]
        assert r["algorithm"] == "dbscan" and 0 <= r["noise_fraction"] <= 1
        assert r["cluster_params"]["eps_from_knee"]

    def test_missing_dimension_names_stage(self, tmp_path):
        cfg = small_config(tmp_path, k=6, max_dim=None, run_id="empty")
        with pytest.raises(StageError) as info:
            run_pipeline(cfg)
        assert info.value.stage == "walks" and isinstance(info.value.cause, EmptyDimension)
        run = tmp_path / "out" / "empty"
        assert (run / "complex.txt").is_file() and not (run / "embedding.txt").exists()
        m = json.loads((run / "manifest.json").read_text())
        assert m["status"] == "failed" and m["error"]["stage"] == "walks"

    def test_edge_list_input(self, tmp_path):
        (tmp_path / "g.txt").write_text("10 11\n11 12\n10 12\n12 13\n13 14\n14 15\n13 15\n")
        (tmp_path / "b.txt").write_text("vertex block\n10 0\n11 0\n12 0\n13 1\n14 1\n15 1\n")
        cfg = config_from_dict({
            "seed": 2, "edges": str(tmp_path / "g.txt"), "blocks": str(tmp_path / "b.txt"), "k": 0,
            "walks_per_simplex": 5, "walk_length": 5, "embed": {"dim": 2}, "out_dir": str(tmp_path / "o"),
            "run_id": "file",
        })
        m = run_pipeline(cfg)
        assert m["complex"]["counts"] == [6, 7, 2]
        assert (tmp_path / "o" / "file" / "vertex_map.csv").read_text().splitlines()[1] == "0,10"

    def test_no_labels_needs_cluster_count(self, tmp_path):
        (tmp_path / "g.txt").write_text("0 1\n1 2\n0 2\n")
        cfg = config_from_dict({"seed": 1, "edges": str(tmp_path / "g.txt"), "k": 0, "embed": {"dim": 2},
                                "out_dir": str(tmp_path / "o")})
        with pytest.raises(StageError) as info:
            run_pipeline(cfg)
        assert info.value.stage == "cluster"
        cfg.cluster.n_clusters = 1
        assert "rand_index" not in run_pipeline(cfg)["results"]


class TestGrid:
    def test_rows_and_tables(self, tmp_path):
        base = small_config(tmp_path, save_artifacts=False)
        grid = ExperimentGrid(dims=[2, 3], walks=[2, 4], length=5, repetitions=2)
        rows = run_grid(grid, base, out_dir=tmp_path / "grid")
        assert len(rows) == 2 * 2 * 2
        assert {(r["dim"], r["walks"], r["rep"]) for r in rows} == set(grid.cells())
        assert all(r["error"] == "" and 0 <= r["rand_index"] <= 1 for r in rows)
        # one complex for the whole grid, distinct per-run seeds
        assert len({r["seed"] for r in rows}) == len(rows)
        with open(tmp_path / "grid" / "grid.csv") as fh:
            table = list(csv.DictReader(fh))
        assert len(table) == 8
        assert all(len(row["rand_index"].replace("0.", "").lstrip("0")) <= 6 for row in table)
        with open(tmp_path / "grid" / "aggregate.csv") as fh:
            agg = list(csv.DictReader(fh))
        assert [(a["dim"], a["walks"], a["runs"]) for a in agg] == [
            ("2", "2", "2"), ("2", "4", "2"), ("3", "2", "2"), ("3", "4", "2")]
        md = (tmp_path / "grid" / "table.md").read_text().splitlines()
        assert md[2] == "| dimensions | 2 | 4 |"
        assert md[4].startswith("| 2 | ") and "±" in md[4]

    def test_single_cell(self, tmp_path):
        rows = run_grid(ExperimentGrid([3], [2], 4, 1), small_config(tmp_path, save_artifacts=False))
        assert len(rows) == 1

    def test_failures_recorded(self, tmp_path, monkeypatch):
        real = pipeline.train

        def flaky(corpus, hp):
            if hp.dim == 3:
                raise FloatingPointError("boom")
            return real(corpus, hp)

        monkeypatch.setattr(pipeline, "train", flaky)
        base = small_config(tmp_path, save_artifacts=False)
        rows = run_grid(ExperimentGrid([2, 3], [2], 4, 2), base, out_dir=tmp_path / "g")
        assert len(rows) == 4
        failed = [r for r in rows if r["error"]]
        assert len(failed) == 2 and all("train" in r["error"] and r["dim"] == 3 for r in failed)
        agg = pipeline.aggregate(rows)
        assert [(a["dim"], a["runs"], a["failures"]) for a in agg] == [(2, 2, 0), (3, 0, 2)]
        assert "| 3 | - |" in (tmp_path / "g" / "table.md").read_text()

    def test_workers_match_sequential(self, tmp_path):
        base = small_config(tmp_path, save_artifacts=False)
        grid = ExperimentGrid([2], [2, 3], 4, 2)
        a = run_grid(grid, base, workers=1)
        b = run_grid(grid, base, workers=2)
        strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time"} for r in rows]
        assert strip(a) == strip(b)

    def test_empty_grid_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            run_grid(ExperimentGrid([], [2], 4, 1), small_config(tmp_path))
