"""End-to-end runs: build a complex, walk, train, cluster, and record everything.

A run directory holds ``manifest.json`` plus the artefacts of each stage.
The manifest stores the full configuration and every derived seed, so a run
can be repeated from it exactly (sequential mode).
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import json
import logging
import os
import platform
import time
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .complex import SimplicialComplex, clique_complex, read_edge_list, write_simplex_list
from .embed import Hyperparams, train, write_embedding
from .errors import ConfigError, StageError
from .evaluation import NOISE, dbscan, kmeans, pca_project, rand_index, write_clusters, write_pca
from .plot import scatter_svg
from .sbm import class_labels, sample_sbm, write_labels
from .walks import MAX_SEED, WalkMode, generate_corpus, write_corpus

log = logging.getLogger(__name__)

STAGES = ("sbm", "walks", "train", "cluster")


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic child seed in [0, 2**63) for a stage or repetition."""
    state = np.random.SeedSequence([int(seed), *map(int, key)]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & MAX_SEED


@dataclass
class SBMConfig:
    block_sizes: list[int] = field(default_factory=lambda: [20, 20, 20])
    p_in: float = 0.8
    p_out: float = 0.3
    seed: int | None = None


@dataclass
class EmbedConfig:
    dim: int = 20
    window: int = 10
    epochs: int = 5
    lr_initial: float = 0.025
    lr_final: float = 0.0001
    negatives: int = 5
    noise_power: float = 0.75
    parallel: bool = False


@dataclass
class ClusterConfig:
    method: str = "kmeans"
    n_clusters: int | None = None  # None: number of ground-truth classes
    restarts: int = 10
    max_iter: int = 300
    tol: float = 1e-6
    eps: float | None = None  # None: knee of the min_pts-NN distance curve
    min_pts: int = 5


@dataclass
class RunConfig:
    seed: int | None = None
    edges: str | None = None
    blocks: str | None = None
    sbm: SBMConfig = field(default_factory=SBMConfig)
    k: int = 1
    max_dim: int | None = 2
    mode: str = "both"
    walks_per_simplex: int = 40
    walk_length: int = 20
    parallel_walks: bool = False
    embed: EmbedConfig = field(default_factory=EmbedConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    pca_dim: int = 2
    out_dir: str = "runs"
    run_id: str | None = None
    save_artifacts: bool = True

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("a seed is required (pass --seed or set 'seed' in the config)")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must lie in [0, 2**63), got {self.seed}")
        if self.edges is not None and not Path(self.edges).is_file():
            raise ConfigError(f"edge list not found: {self.edges}")
        if self.blocks is not None and not Path(self.blocks).is_file():
            raise ConfigError(f"block file not found: {self.blocks}")
        if self.edges is None:
            s = self.sbm
            if not s.block_sizes or any(b <= 0 for b in s.block_sizes):
                raise ConfigError(f"sbm.block_sizes must be positive, got {s.block_sizes}")
            if not 0 <= s.p_out <= s.p_in <= 1:
                raise ConfigError("sbm probabilities need 0 <= p_out <= p_in <= 1")
        if self.k < 0:
            raise ConfigError(f"k must be >= 0, got {self.k}")
        if self.max_dim is not None and self.max_dim < max(1, self.k):
            raise ConfigError(f"max_dim={self.max_dim} is below k={self.k}")
        try:
            WalkMode.parse(self.mode)
        except ValueError:
            raise ConfigError(f"unknown walk mode {self.mode!r}") from None
        if self.walks_per_simplex < 1 or self.walk_length < 1:
            raise ConfigError("walks_per_simplex and walk_length must be >= 1")
        e = self.embed
        if e.dim < 1 or e.window < 1 or e.epochs < 1 or e.negatives < 0:
            raise ConfigError("embed: need dim, window, epochs >= 1 and negatives >= 0")
        if not 0 <= e.lr_final <= e.lr_initial:
            raise ConfigError("embed: need 0 <= lr_final <= lr_initial")
        c = self.cluster
        if c.method not in ("kmeans", "dbscan"):
            raise ConfigError(f"cluster.method must be 'kmeans' or 'dbscan', got {c.method!r}")
        if c.n_clusters is not None and c.n_clusters < 1:
            raise ConfigError("cluster.n_clusters must be >= 1")
        if c.restarts < 1 or c.min_pts < 1 or (c.eps is not None and c.eps <= 0):
            raise ConfigError("cluster: need restarts >= 1, min_pts >= 1, eps > 0")
        if self.pca_dim < 1 or self.pca_dim > e.dim:
            raise ConfigError(f"pca_dim must lie in [1, {e.dim}]")

    def stage_seeds(self) -> dict[str, int]:
        seeds = {name: derive_seed(self.seed, i) for i, name in enumerate(STAGES)}
        if self.sbm.seed is not None:
            seeds["sbm"] = self.sbm.seed
        return seeds

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _coerce(value: Any, hint: Any, where: str) -> Any:
    optional = type(None) in typing.get_args(hint)
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{where}: must not be null")
    base = next(a for a in typing.get_args(hint) if a is not type(None)) if optional else hint
    origin = typing.get_origin(base)
    try:
        if origin is list:
            if not isinstance(value, (list, tuple)):
                raise TypeError
            (item,) = typing.get_args(base)
            return [_coerce(v, item, where) for v in value]
        if base is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if base is int:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value)) if isinstance(value, str) else int(value)
        if base is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)  # YAML 1.1 reads "1e-06" as a string
        if base is str:
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {getattr(base, '__name__', base)}, got {value!r}") from None
    return value


def _build(cls, data: dict[str, Any], where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown keys {sorted(unknown)}")
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for name, value in data.items():
        sub = {"sbm": SBMConfig, "embed": EmbedConfig, "cluster": ClusterConfig}.get(name)
        if sub and cls is RunConfig:
            kwargs[name] = _build(sub, value, f"{where}{name}.")
        else:
            kwargs[name] = _coerce(value, hints[name], f"{where}{name}")
    return cls(**kwargs)


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    """Build a config from a plain mapping; a run manifest is accepted as well."""
    if "config" in data and "derived_seeds" in data:
        data = data["config"]
    return _build(RunConfig, data, "")


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return config_from_dict(data)


def apply_overrides(cfg: RunConfig, overrides: dict[str, Any]) -> RunConfig:
    """Set dotted keys (``embed.dim``) on a copy of ``cfg``; ``None`` values are skipped."""
    cfg = copy.deepcopy(cfg)
    for key, value in overrides.items():
        if value is None:
            continue
        target = cfg
        *path, leaf = key.split(".")
        for part in path:
            target = getattr(target, part)
        if not hasattr(target, leaf):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(target, leaf, value)
    return cfg


def read_blocks(path: str | Path, original_ids: list[int]) -> np.ndarray:
    """Read ``vertex block`` lines (original ids) into a dense per-vertex array."""
    mapping: dict[int, int] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("vertex"):
                continue
            v, b = line.replace(",", " ").split()[:2]
            mapping[int(v)] = int(b)
    missing = [v for v in original_ids if v not in mapping]
    if missing:
        raise ConfigError(f"block file has no entry for vertices {missing[:5]}")
    return np.array([mapping[v] for v in original_ids], dtype=np.int64)


@dataclass
class Source:
    complex: SimplicialComplex
    blocks: np.ndarray | None
    original_ids: list[int]
    n_edges: int


def build_source(cfg: RunConfig, sbm_seed: int) -> Source:
    if cfg.edges is not None:
        edges, n, ids = read_edge_list(cfg.edges)
        blocks = read_blocks(cfg.blocks, ids) if cfg.blocks else None
    else:
        g = sample_sbm(cfg.sbm.block_sizes, cfg.sbm.p_in, cfg.sbm.p_out, sbm_seed)
        edges, n, ids, blocks = g.edges, g.n_vertices, list(range(g.n_vertices)), g.blocks
    X = clique_complex(edges, n, cfg.max_dim)
    return Source(complex=X, blocks=blocks, original_ids=ids, n_edges=len(edges))


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise StageError(name, exc) from exc


def _write_manifest(path: Path, manifest: dict[str, Any]) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _default_run_id(cfg: RunConfig) -> str:
    return f"k{cfg.k}-d{cfg.embed.dim}-N{cfg.walks_per_simplex}-l{cfg.walk_length}-s{cfg.seed}"


def run_pipeline(cfg: RunConfig, *, source: Source | None = None) -> dict[str, Any]:
    """Run every stage and return the manifest.

    Artefacts go to ``<out_dir>/<run_id>/`` when ``save_artifacts`` is set;
    otherwise only the manifest is returned. A failing stage raises
    :class:`StageError`; files from earlier stages and a manifest marked
    ``failed`` are left in place.
    """
    cfg.validate()
    seeds = cfg.stage_seeds()
    run_id = cfg.run_id or _default_run_id(cfg)
    out = Path(cfg.out_dir) / run_id if cfg.save_artifacts else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    manifest: dict[str, Any] = {
        "run_id": run_id,
        "config": cfg.to_dict(),
        "derived_seeds": seeds,
        "status": "running",
        "timings": {},
        "results": {},
        "versions": {"ksimplex2vec": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }
    timings = manifest["timings"]

    def timed(name, fn, *a, **kw):
        t0 = time.perf_counter()
        try:
            return _stage(name, fn, *a, **kw)
        except StageError as exc:
            manifest["status"] = "failed"
            manifest["error"] = {"stage": exc.stage, "message": str(exc.cause)}
            if out is not None:
                _write_manifest(out / "manifest.json", manifest)
            raise
        finally:
            timings[name] = round(time.perf_counter() - t0, 6)

    if source is None:
        source = timed("complex", build_source, cfg, seeds["sbm"])
    X = source.complex
    manifest["complex"] = {"counts": X.counts(), "n_edges_graph": source.n_edges}
    k = cfg.k
    if out is not None:
        write_simplex_list(X, out / "complex.txt")
        if cfg.edges is not None and source.original_ids != list(range(len(source.original_ids))):
            with open(out / "vertex_map.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["vertex", "original_id"])
                w.writerows(enumerate(source.original_ids))

    corpus = timed(
        "walks", generate_corpus, X, k, cfg.walks_per_simplex, cfg.walk_length,
        cfg.mode, seeds["walks"], parallel=cfg.parallel_walks,
    )
    if out is not None:
        write_corpus(corpus, out / "walks.txt")

    e = cfg.embed
    hp = Hyperparams(
        dim=e.dim, window=e.window, epochs=e.epochs, lr_initial=e.lr_initial, lr_final=e.lr_final,
        negatives=e.negatives, noise_power=e.noise_power, seed=seeds["train"], parallel=e.parallel,
    )
    model, report = timed("train", train, corpus, hp)
    names = [str(s) for s in X.simplices(k)]
    manifest["training"] = {"epoch_loss": report.epoch_loss, "tokens": report.tokens, "pairs": report.pairs}
    if out is not None:
        write_embedding(out / "embedding.txt", X.simplices(k), model.F)

    truth = None
    if source.blocks is not None:
        truth, classes = class_labels(X, k, source.blocks)
        manifest["results"]["n_classes"] = len(classes)
        if out is not None:
            write_labels(out / "labels.csv", X, k, truth, classes)

    c = cfg.cluster

    def cluster():
        if c.method == "kmeans":
            n_clusters = c.n_clusters
            if n_clusters is None:
                if truth is None:
                    raise ConfigError("cluster.n_clusters is required without ground-truth blocks")
                n_clusters = int(truth.max()) + 1
            return kmeans(model.F, n_clusters, c.restarts, seeds["cluster"], max_iter=c.max_iter, tol=c.tol)
        return dbscan(model.F, c.eps, c.min_pts)

    result = timed("cluster", cluster)
    proj = timed("pca", pca_project, model.F, cfg.pca_dim)
    res = manifest["results"]
    res.update(
        algorithm=result.algorithm,
        cluster_params=result.params,
        n_clusters=result.n_clusters,
        noise_fraction=result.noise_fraction,
        inertia=result.inertia,
        explained_variance_ratio=proj.explained_variance_ratio.tolist(),
    )
    if truth is not None:
        res["rand_index"] = rand_index(truth, result.labels, ignore=NOISE)
    if out is not None:
        write_clusters(out / "clusters.csv", names, result.labels)
        write_pca(out / "pca.csv", names, proj.projected)
        scatter_svg(proj.projected, result.labels, out / "scatter.svg",
                    title=f"{k}-simplices, {result.algorithm}")
    manifest["status"] = "ok"
    if out is not None:
        _write_manifest(out / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------- grids


@dataclass
class ExperimentGrid:
    dims: list[int]
    walks: list[int]
    length: int = 20
    repetitions: int = 10

    def cells(self) -> list[tuple[int, int, int]]:
        return [(d, n, r) for d in self.dims for n in self.walks for r in range(self.repetitions)]


def _grid_config(base: RunConfig, d: int, n_walks: int, length: int, rep: int) -> RunConfig:
    cfg = copy.deepcopy(base)
    cfg.embed.dim = d
    cfg.walks_per_simplex = n_walks
    cfg.walk_length = length
    # one complex for the whole grid; walks/training/clustering vary per repetition
    cfg.sbm.seed = base.stage_seeds()["sbm"]
    cfg.seed = derive_seed(base.seed, 1000 + rep, d, n_walks)
    cfg.run_id = f"d{d}-N{n_walks}-r{rep}"
    cfg.pca_dim = min(cfg.pca_dim, d)
    return cfg


def _grid_task(args):
    cfg, source, rep = args
    t0 = time.perf_counter()
    row = {"dim": cfg.embed.dim, "walks": cfg.walks_per_simplex, "length": cfg.walk_length,
           "rep": rep, "seed": cfg.seed}
    try:
        m = run_pipeline(cfg, source=source)
        r = m["results"]
        row.update(rand_index=r.get("rand_index"), inertia=r.get("inertia"),
                   noise_fraction=r.get("noise_fraction"), n_clusters=r.get("n_clusters"), error="")
    except Exception as exc:  # noqa: BLE001 - a failed cell is recorded, the grid continues
        row.update(rand_index=None, inertia=None, noise_fraction=None, n_clusters=None,
                   error=f"{type(exc).__name__}: {exc}")
    row["wall_time"] = time.perf_counter() - t0
    return row


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{x:.6g}"
    return str(x)


def aggregate(rows: list[dict[str, Any]], metric: str = "rand_index") -> list[dict[str, Any]]:
    cells: dict[tuple[int, int], list[float]] = {}
    failures: dict[tuple[int, int], int] = {}
    for row in rows:
        key = (row["dim"], row["walks"])
        cells.setdefault(key, [])
        failures.setdefault(key, 0)
        if row.get(metric) is None:
            failures[key] += 1
        else:
            cells[key].append(float(row[metric]))
    out = []
    for (d, n), vals in sorted(cells.items()):
        out.append({
            "dim": d, "walks": n, "runs": len(vals), "failures": failures[(d, n)],
            "mean": float(np.mean(vals)) if vals else None,
            "std": float(np.std(vals)) if vals else None,
        })
    return out


def table_text(agg: list[dict[str, Any]], title: str = "Rand index") -> str:
    """Dimension-by-walk-count markdown table of ``mean±std`` cells."""
    dims = sorted({a["dim"] for a in agg})
    walks = sorted({a["walks"] for a in agg})
    lookup = {(a["dim"], a["walks"]): a for a in agg}
    lines = [f"# {title}", "", "| dimensions | " + " | ".join(str(n) for n in walks) + " |",
             "|---" * (len(walks) + 1) + "|"]
    for d in dims:
        cells = []
        for n in walks:
            a = lookup.get((d, n))
            cells.append("-" if a is None or a["mean"] is None else f"{a['mean']:.2f}±{a['std']:.2f}")
        lines.append(f"| {d} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def run_grid(grid: ExperimentGrid, base: RunConfig, *, out_dir: str | Path | None = None,
             workers: int = 1) -> list[dict[str, Any]]:
    """Run every (dim, walks, repetition) cell; failures are recorded, not raised.

    Writes ``grid.csv`` (one row per run), ``aggregate.csv`` and ``table.md``
    to ``out_dir`` when given.
    """
    base.validate()
    if not grid.dims or not grid.walks or grid.repetitions < 1:
        raise ConfigError("grid needs at least one dim, one walk count and one repetition")
    base = copy.deepcopy(base)
    root = Path(out_dir) if out_dir is not None else None
    base.out_dir = str(root / "runs") if root is not None else base.out_dir
    source = build_source(base, base.stage_seeds()["sbm"])
    tasks = [(_grid_config(base, d, n, grid.length, r), source, r) for d, n, r in grid.cells()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
            rows = list(pool.map(_grid_task, tasks))
    else:
        rows = [_grid_task(t) for t in tasks]
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)
        cols = ["dim", "walks", "length", "rep", "seed", "rand_index", "inertia", "noise_fraction",
                "n_clusters", "wall_time", "error"]
        with open(root / "grid.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in rows:
                w.writerow([_fmt(row[c]) for c in cols])
        agg = aggregate(rows)
        with open(root / "aggregate.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            cols = ["dim", "walks", "runs", "failures", "mean", "std"]
            w.writerow(cols)
            for a in agg:
                w.writerow([_fmt(a[c]) for c in cols])
        (root / "table.md").write_text(table_text(agg, f"Rand index, k={base.k}, walk length {grid.length}"))
    return rows
