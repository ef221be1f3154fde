"""Command-line interface.

Exit codes: 0 on success, 1 for configuration or usage errors, 2 when a
stage fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .complex import clique_complex, read_edge_list, read_simplex_list, write_simplex_list
from .embed import Hyperparams, read_embedding, train, write_embedding
from .errors import ConfigError, StageError
from .evaluation import NOISE, dbscan, kmeans, pca_project, rand_index, write_clusters, write_pca
from .pipeline import ExperimentGrid, RunConfig, apply_overrides, load_config, run_grid, run_pipeline, table_text, aggregate
from .plot import scatter_svg
from .sbm import sample_sbm
from .walks import MAX_SEED, WalkMode, generate_corpus, read_corpus, write_corpus

log = logging.getLogger("ksimplex2vec")

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**63), got {value}")
    return value


def _max_dim(text: str) -> int | None:
    value = int(text)
    return None if value == 0 else value


def _embed_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("embedding")
    g.add_argument("--dim", "-d", type=int, help="feature space dimension")
    g.add_argument("--window", type=int, help="context window (each side)")
    g.add_argument("--epochs", type=int)
    g.add_argument("--lr", type=float, help="initial learning rate")
    g.add_argument("--lr-final", type=float)
    g.add_argument("--negatives", type=int, help="negative samples per pair; 0 trains the full softmax")
    g.add_argument("--parallel-train", action="store_true", default=None,
                   help="lock-free multi-threaded training (not bit-reproducible)")


def _walk_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("walks")
    g.add_argument("-k", type=int, help="dimension of the simplices to embed")
    g.add_argument("--mode", choices=[m.value for m in WalkMode])
    g.add_argument("--walks", "-N", type=int, dest="walks_per_simplex", help="walks per simplex")
    g.add_argument("--length", "-l", type=int, help="steps per walk")
    g.add_argument("--parallel-walks", action="store_true", default=None)


def _cluster_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("clustering")
    g.add_argument("--method", choices=["kmeans", "dbscan"])
    g.add_argument("--clusters", type=int, help="kmeans cluster count (default: number of classes)")
    g.add_argument("--restarts", type=int)
    g.add_argument("--eps", type=float, help="DBSCAN radius (default: knee of the k-distance curve)")
    g.add_argument("--min-pts", type=int)


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", help="YAML/JSON config file (a run manifest also works)")
    p.add_argument("--seed", type=_seed, required=True, help="master seed")
    src = p.add_argument_group("input")
    src.add_argument("--edges", help="edge list; default is a generated SBM graph")
    src.add_argument("--blocks", help="'vertex block' file giving ground-truth classes for --edges")
    src.add_argument("--block-sizes", type=int, nargs="+")
    src.add_argument("--p-in", type=float)
    src.add_argument("--p-out", type=float)
    src.add_argument("--max-dim", type=_max_dim, default=argparse.SUPPRESS, help="0 builds the full clique complex")
    _walk_flags(p)
    _embed_flags(p)
    _cluster_flags(p)
    p.add_argument("--out", "-o", help="output directory")


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {
        "seed": args.seed,
        "edges": args.edges,
        "blocks": args.blocks,
        "sbm.block_sizes": args.block_sizes,
        "sbm.p_in": args.p_in,
        "sbm.p_out": args.p_out,
        "k": args.k,
        "mode": args.mode,
        "walks_per_simplex": args.walks_per_simplex,
        "walk_length": args.length,
        "parallel_walks": args.parallel_walks,
        "embed.dim": args.dim,
        "embed.window": args.window,
        "embed.epochs": args.epochs,
        "embed.lr_initial": args.lr,
        "embed.lr_final": args.lr_final,
        "embed.negatives": args.negatives,
        "embed.parallel": args.parallel_train,
        "cluster.method": args.method,
        "cluster.n_clusters": args.clusters,
        "cluster.restarts": args.restarts,
        "cluster.eps": args.eps,
        "cluster.min_pts": args.min_pts,
        "out_dir": args.out,
    }
    cfg = apply_overrides(cfg, overrides)
    if "max_dim" in args:
        cfg.max_dim = args.max_dim
    return cfg


# ---------------------------------------------------------------- subcommands


def cmd_sbm(args) -> int:
    g = sample_sbm(args.block_sizes, args.p_in, args.p_out, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.txt", "w") as fh:
        fh.writelines(f"{u} {v}\n" for u, v in g.edges)
    with open(out / "blocks.txt", "w") as fh:
        fh.write("vertex block\n")
        fh.writelines(f"{v} {b}\n" for v, b in enumerate(g.blocks))
    print(f"{g.n_vertices} vertices, {len(g.edges)} edges -> {out}")
    return EXIT_OK


def cmd_complex(args) -> int:
    edges, n, ids = read_edge_list(args.edges)
    if ids != list(range(n)):
        log.warning("vertex ids re-indexed densely (%d distinct ids)", n)
    X = clique_complex(edges, n, args.max_dim)
    write_simplex_list(X, args.out)
    print("simplices per dimension: " + " ".join(str(c) for c in X.counts()))
    return EXIT_OK


def cmd_walks(args) -> int:
    X = read_simplex_list(args.complex)
    corpus = generate_corpus(X, args.k, args.walks_per_simplex, args.length, args.mode, args.seed,
                             parallel=args.parallel_walks)
    write_corpus(corpus, args.out)
    print(f"{len(corpus)} walks over {corpus.n_simplices} {args.k}-simplices -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = read_corpus(args.walks)
    X = read_simplex_list(args.complex)
    hp = Hyperparams(dim=args.dim, window=args.window, epochs=args.epochs, lr_initial=args.lr,
                     lr_final=args.lr_final, negatives=args.negatives, seed=args.seed,
                     parallel=args.parallel_train)
    model, report = train(corpus, hp, n=X.count(corpus.k))
    write_embedding(args.out, X.simplices(corpus.k), model.F)
    losses = " ".join(f"{x:.6g}" for x in report.epoch_loss)
    print(f"trained {model.n}x{model.dim} in {report.wall_time:.2f}s; epoch loss {losses}")
    return EXIT_OK


def _read_truth(path: str, names: list[str]) -> np.ndarray:
    with open(path, newline="") as fh:
        lookup = {row["simplex"]: int(row["label"]) for row in csv.DictReader(fh)}
    missing = [s for s in names if s not in lookup]
    if missing:
        raise ConfigError(f"{path}: no label for {missing[:3]}")
    return np.array([lookup[s] for s in names], dtype=np.int64)


def cmd_eval(args) -> int:
    simplices, F = read_embedding(args.embedding)
    names = [str(s) for s in simplices]
    truth = _read_truth(args.labels, names) if args.labels else None
    if args.method == "kmeans":
        k = args.clusters if args.clusters is not None else (int(truth.max()) + 1 if truth is not None else None)
        if k is None:
            raise ConfigError("--clusters is required without --labels")
        result = kmeans(F, k, args.restarts, args.seed)
    else:
        result = dbscan(F, args.eps, args.min_pts)
    proj = pca_project(F, 2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_clusters(out / "clusters.csv", names, result.labels)
    write_pca(out / "pca.csv", names, proj.projected)
    scatter_svg(proj.projected, result.labels, out / "scatter.svg")
    summary = {"algorithm": result.algorithm, "n_clusters": result.n_clusters,
               "noise_fraction": result.noise_fraction, "inertia": result.inertia, **result.params}
    if truth is not None:
        summary["rand_index"] = rand_index(truth, result.labels, ignore=NOISE)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    if args.run_id:
        cfg.run_id = args.run_id
    cfg.validate()
    manifest = run_pipeline(cfg)
    r = manifest["results"]
    line = f"run {manifest['run_id']}: {r['algorithm']} found {r['n_clusters']} clusters"
    if "rand_index" in r:
        line += f", Rand index {r['rand_index']:.6g}"
    if r["algorithm"] == "dbscan":
        line += f", noise fraction {r['noise_fraction']:.6g}"
    print(line)
    print(f"outputs in {Path(cfg.out_dir) / manifest['run_id']}")
    return EXIT_OK


def cmd_grid(args) -> int:
    cfg = _config_from_args(args)
    cfg.save_artifacts = args.save_runs
    grid = ExperimentGrid(dims=args.dims, walks=args.grid_walks, length=cfg.walk_length,
                          repetitions=args.reps)
    out = Path(args.out or cfg.out_dir)
    rows = run_grid(grid, cfg, out_dir=out, workers=args.workers)
    failed = sum(1 for r in rows if r["error"])
    print(table_text(aggregate(rows), f"Rand index, k={cfg.k}"), end="")
    print(f"{len(rows)} runs, {failed} failed -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ksimplex2vec", description="Embed k-simplices of a simplicial complex via random walks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sbm", help="sample a stochastic block model graph")
    p.add_argument("--block-sizes", type=int, nargs="+", default=[20, 20, 20])
    p.add_argument("--p-in", type=float, default=0.8)
    p.add_argument("--p-out", type=float, default=0.3)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", "-o", required=True, help="directory for edges.txt and blocks.txt")
    p.set_defaults(func=cmd_sbm)

    p = sub.add_parser("complex", help="clique complex of an edge list")
    p.add_argument("--edges", required=True)
    p.add_argument("--max-dim", type=_max_dim, default=2, help="0 builds the full clique complex")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_complex)

    p = sub.add_parser("walks", help="random walks on k-simplices")
    p.add_argument("--complex", required=True, help="simplex list file")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--mode", choices=[m.value for m in WalkMode], default="both")
    p.add_argument("--walks", "-N", type=int, dest="walks_per_simplex", default=40)
    p.add_argument("--length", "-l", type=int, default=20)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--parallel-walks", action="store_true")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_walks)

    p = sub.add_parser("train", help="train an embedding on a walk corpus")
    p.add_argument("--walks", required=True, help="corpus file written by 'walks'")
    p.add_argument("--complex", required=True, help="simplex list the corpus was drawn from")
    d = Hyperparams()
    p.add_argument("--dim", "-d", type=int, default=d.dim)
    p.add_argument("--window", type=int, default=d.window)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--lr", type=float, default=d.lr_initial)
    p.add_argument("--lr-final", type=float, default=d.lr_final)
    p.add_argument("--negatives", type=int, default=d.negatives)
    p.add_argument("--parallel-train", action="store_true")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cluster an embedding, project it and score it")
    p.add_argument("--embedding", required=True)
    p.add_argument("--labels", help="labels.csv with ground-truth classes")
    p.add_argument("--method", choices=["kmeans", "dbscan"], default="kmeans")
    p.add_argument("--clusters", type=int)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", type=int, default=5)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run every stage and write a run directory")
    _run_flags(p)
    p.add_argument("--run-id")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("grid", help="repeat the pipeline over dimensions and walk counts")
    _run_flags(p)
    p.add_argument("--dims", type=int, nargs="+", required=True)
    p.add_argument("--grid-walks", type=int, nargs="+", required=True, help="walks-per-simplex values")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--save-runs", action="store_true", help="keep every run's artefacts")
    p.set_defaults(func=cmd_grid)
    return parser


# input-path arguments per subcommand, checked before any work starts
_INPUTS = {
    "complex": ("edges",),
    "walks": ("complex",),
    "train": ("walks", "complex"),
    "eval": ("embedding", "labels"),
}


def _check_inputs(args) -> None:
    for name in _INPUTS.get(args.command, ()):
        path = getattr(args, name)
        if path is not None and not Path(path).is_file():
            raise ConfigError(f"--{name}: file not found: {path}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _check_inputs(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, KeyError, OSError, FloatingPointError) as exc:
        # single-stage subcommands: the subcommand is the stage
        print(f"error: {StageError(args.command, exc)}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
