"""Stochastic block model graphs and block-based ground truth for simplices."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .complex import Simplex, SimplicialComplex
from .errors import UnknownVertex

__all__ = [
    "SBMGraph",
    "sample_sbm",
    "contiguous_blocks",
    "simplex_class",
    "class_labels",
    "write_labels",
]


@dataclass(frozen=True)
class SBMGraph:
    n_vertices: int
    edges: list[tuple[int, int]]
    blocks: np.ndarray  # blocks[v] = block index of vertex v


def contiguous_blocks(block_sizes: Sequence[int]) -> np.ndarray:
    """Block of each vertex when blocks occupy consecutive id ranges."""
    return np.repeat(np.arange(len(block_sizes)), block_sizes)


def sample_sbm(block_sizes: Sequence[int], p_in: float, p_out: float, seed: int) -> SBMGraph:
    """Sample an undirected SBM graph.

    One uniform draw per vertex pair is taken from ``numpy.random.default_rng(seed)``
    (PCG64), pairs visited in lexicographic order ``(u, v), u < v``; the pair is
    an edge iff the draw is below ``p_in`` (same block) or ``p_out``.
    """
    if not block_sizes or any(int(b) <= 0 for b in block_sizes):
        raise ValueError(f"block sizes must be positive, got {list(block_sizes)}")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValueError(f"need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    blocks = contiguous_blocks([int(b) for b in block_sizes])
    n = len(blocks)
    u, v = np.triu_indices(n, k=1)
    draws = np.random.default_rng(seed).random(len(u))
    prob = np.where(blocks[u] == blocks[v], p_in, p_out)
    keep = draws < prob
    edges = list(zip(u[keep].tolist(), v[keep].tolist()))
    return SBMGraph(n_vertices=n, edges=edges, blocks=blocks)


def simplex_class(simplex: Simplex, blocks: Mapping[int, int] | np.ndarray) -> tuple[int, ...]:
    """Sorted multiset of the blocks of the simplex's vertices."""
    out = []
    for v in simplex.vertices:
        try:
            if isinstance(blocks, np.ndarray) and not 0 <= v < len(blocks):
                raise IndexError(v)
            out.append(int(blocks[v]))
        except (KeyError, IndexError):
            raise UnknownVertex(f"vertex {v} has no block") from None
    return tuple(sorted(out))


def class_labels(
    X: SimplicialComplex, k: int, blocks: Mapping[int, int] | np.ndarray
) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Dense class label per k-simplex.

    Returns ``(labels, classes)``: ``classes`` lists the distinct multisets
    present in lexicographic order and ``labels[i]`` indexes into it.
    """
    per_simplex = [simplex_class(s, blocks) for s in X.simplices(k)]
    classes = sorted(set(per_simplex))
    lookup = {c: i for i, c in enumerate(classes)}
    return np.array([lookup[c] for c in per_simplex], dtype=np.int64), classes


def write_labels(
    path: str | Path, X: SimplicialComplex, k: int, labels: np.ndarray, classes: list[tuple[int, ...]]
) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["simplex", "class_multiset", "label"])
        for s, lab in zip(X.simplices(k), labels):
            w.writerow([str(s), "-".join(map(str, classes[lab])), int(lab)])
