import json

import pytest
import yaml

from ksimplex2vec.cli import main

SMALL = ["--block-sizes", "5", "5", "5", "-k", "1", "-N", "2", "-l", "4", "--dim", "3", "--epochs", "1"]


def test_pipeline_success(tmp_path, capsys):
    code = main(["pipeline", "--seed", "4", *SMALL, "--out", str(tmp_path), "--run-id", "r"])
    assert code == 0
    m = json.loads((tmp_path / "r" / "manifest.json").read_text())
    assert m["config"]["seed"] == 4 and m["status"] == "ok"
    assert "Rand index" in capsys.readouterr().out


def test_seed_is_mandatory(tmp_path):
    for cmd in ("pipeline", "grid"):
        with pytest.raises(SystemExit) as info:
            main([cmd, *SMALL, "--out", str(tmp_path)])
        assert info.value.code == 1


def test_usage_error_exit_one():
    with pytest.raises(SystemExit) as info:
        main(["pipeline", "--seed", "1", "--dim", "many"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_config_error_exit_one(tmp_path, capsys):
    (tmp_path / "c.yaml").write_text("seed: 1\nunknown_key: 3\n")
    assert main(["pipeline", "--seed", "1", "--config", str(tmp_path / "c.yaml")]) == 1
    assert main(["pipeline", "--seed", "1", *SMALL, "-k", "3", "--max-dim", "2", "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_stage_failure_exit_two(tmp_path, capsys):
    code = main(["pipeline", "--seed", "1", *SMALL[:-4], "-k", "9", "--max-dim", "0",
                 "--out", str(tmp_path), "--run-id", "bad"])
    assert code == 2
    assert "stage 'walks' failed" in capsys.readouterr().err
    assert (tmp_path / "bad" / "complex.txt").is_file()


def test_flags_override_config(tmp_path):
    (tmp_path / "c.yaml").write_text(yaml.safe_dump({
        "seed": 99, "k": 0, "embed": {"dim": 7}, "sbm": {"block_sizes": [4, 4]},
        "walks_per_simplex": 2, "walk_length": 3,
    }))
    code = main(["pipeline", "--config", str(tmp_path / "c.yaml"), "--seed", "5", "--dim", "2",
                 "--out", str(tmp_path), "--run-id", "o"])
    assert code == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["config"]["seed"] == 5 and m["config"]["embed"]["dim"] == 2 and m["config"]["k"] == 0


def test_stagewise_commands(tmp_path, capsys):
    d = tmp_path
    assert main(["sbm", "--seed", "2", "--block-sizes", "6", "6", "--out", str(d / "g")]) == 0
    assert (d / "g" / "blocks.txt").read_text().splitlines()[:2] == ["vertex block", "0 0"]
    assert main(["complex", "--edges", str(d / "g" / "edges.txt"), "--out", str(d / "cx.txt")]) == 0
    assert main(["walks", "--complex", str(d / "cx.txt"), "-k", "0", "-N", "3", "-l", "5",
                 "--seed", "1", "--out", str(d / "w.txt")]) == 0
    assert main(["train", "--walks", str(d / "w.txt"), "--complex", str(d / "cx.txt"), "--dim", "3",
                 "--out", str(d / "emb.txt")]) == 0
    capsys.readouterr()
    assert main(["eval", "--embedding", str(d / "emb.txt"), "--clusters", "2", "--out", str(d / "ev")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["algorithm"] == "kmeans" and summary["n_clusters"] == 2
    for name in ("clusters.csv", "pca.csv", "scatter.svg"):
        assert (d / "ev" / name).is_file()


def test_eval_with_labels(tmp_path, capsys):
    assert main(["pipeline", "--seed", "3", *SMALL, "--out", str(tmp_path), "--run-id", "r"]) == 0
    run = tmp_path / "r"
    capsys.readouterr()
    assert main(["eval", "--embedding", str(run / "embedding.txt"), "--labels", str(run / "labels.csv"),
                 "--out", str(tmp_path / "ev")]) == 0
    summary = json.loads(capsys.readouterr().out)
    manifest = json.loads((run / "manifest.json").read_text())
    assert summary["n_clusters"] == 6
    assert 0 <= summary["rand_index"] <= 1
    assert manifest["results"]["n_classes"] == 6


def test_missing_input_is_config_error(tmp_path):
    assert main(["walks", "--complex", str(tmp_path / "none.txt"), "-k", "0", "--out", str(tmp_path / "w")]) == 1


def test_bad_input_content_is_stage_failure(tmp_path, capsys):
    (tmp_path / "g.txt").write_text("0 0\n")
    assert main(["complex", "--edges", str(tmp_path / "g.txt"), "--out", str(tmp_path / "cx.txt")]) == 2
    assert "stage 'complex' failed" in capsys.readouterr().err


def test_grid_command(tmp_path, capsys):
    code = main(["grid", "--seed", "8", *SMALL, "--dims", "2", "3", "--grid-walks", "2", "--reps", "2",
                 "--out", str(tmp_path)])
    assert code == 0
    assert len((tmp_path / "grid.csv").read_text().splitlines()) == 1 + 4
    out = capsys.readouterr().out
    assert "| dimensions | 2 |" in out and "4 runs, 0 failed" in out
