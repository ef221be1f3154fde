"""Simplicial complexes built as clique complexes of graphs.

Simplices are stored per dimension in lexicographic order, so the dense
index of a k-simplex is its position in ``X.simplices(k)``. Upper and lower
adjacency between k-simplices is computed once per dimension and cached as
boolean CSR matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import total_ordering
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DuplicateVertex, EmptyDimension, InvalidDimension

__all__ = [
    "Simplex",
    "make_simplex",
    "SimplicialComplex",
    "AdjacencyStructure",
    "clique_complex",
    "upper_neighbors",
    "lower_neighbors",
    "read_edge_list",
    "write_simplex_list",
    "read_simplex_list",
]


@total_ordering
@dataclass(frozen=True)
class Simplex:
    """A k-simplex as a strictly increasing tuple of vertex ids."""

    vertices: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def faces(self) -> list["Simplex"]:
        """The (k-1)-faces, in lexicographic order."""
        if self.dim == 0:
            return []
        return [Simplex(f) for f in itertools.combinations(self.vertices, self.dim)]

    def __lt__(self, other: "Simplex") -> bool:
        return (len(self.vertices), self.vertices) < (len(other.vertices), other.vertices)

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __str__(self) -> str:
        return "-".join(map(str, self.vertices))

    @classmethod
    def parse(cls, text: str) -> "Simplex":
        return make_simplex([int(v) for v in text.split("-")])


def make_simplex(vertices: Sequence[int]) -> Simplex:
    verts = tuple(sorted(int(v) for v in vertices))
    if not verts:
        raise ValueError("a simplex needs at least one vertex")
    if verts[0] < 0:
        raise ValueError(f"vertex ids must be non-negative, got {verts[0]}")
    for a, b in zip(verts, verts[1:]):
        if a == b:
            raise DuplicateVertex(f"vertex {a} repeated in {list(vertices)}")
    return Simplex(verts)


@dataclass(frozen=True)
class AdjacencyStructure:
    """Upper and lower neighbour relations among the k-simplices.

    Both matrices are symmetric 0/1 CSR matrices with an empty diagonal.
    ``lower`` is all-zero for k = 0.
    """

    k: int
    upper: sp.csr_matrix
    lower: sp.csr_matrix

    def upper_of(self, i: int) -> np.ndarray:
        return self.upper.indices[self.upper.indptr[i] : self.upper.indptr[i + 1]]

    def lower_of(self, i: int) -> np.ndarray:
        return self.lower.indices[self.lower.indptr[i] : self.lower.indptr[i + 1]]


def _pairs_within_groups(groups: Iterable[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    rows: list[int] = []
    cols: list[int] = []
    for g in groups:
        for a, b in itertools.permutations(g, 2):
            rows.append(a)
            cols.append(b)
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)


def _set_matrix(rows: np.ndarray, cols: np.ndarray, n: int) -> sp.csr_matrix:
    # duplicates collapse to a single 1: neighbour lists have set semantics
    m = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    m.sum_duplicates()
    m.data[:] = 1
    m.sort_indices()
    return m


class SimplicialComplex:
    """An immutable simplicial complex with dense per-dimension indices."""

    def __init__(self, simplices_by_dim: Sequence[Iterable[Simplex]], *, check: bool = True):
        self._simplices: list[list[Simplex]] = [sorted(set(level)) for level in simplices_by_dim]
        while self._simplices and not self._simplices[-1]:
            self._simplices.pop()
        self._index: list[dict[Simplex, int]] = [
            {s: i for i, s in enumerate(level)} for level in self._simplices
        ]
        self._adjacency: dict[int, AdjacencyStructure] = {}
        for k, level in enumerate(self._simplices):
            for s in level:
                if s.dim != k:
                    raise InvalidDimension(f"simplex {s} listed under dimension {k}")
        if check:
            missing = self.missing_faces()
            if missing:
                raise ValueError(f"complex is not closed under faces, e.g. {missing[0]} is missing")

    @property
    def dim(self) -> int:
        """Top dimension, or -1 for the empty complex."""
        return len(self._simplices) - 1

    @property
    def n_vertices(self) -> int:
        return self.count(0)

    def count(self, k: int) -> int:
        if k < 0 or k > self.dim:
            return 0
        return len(self._simplices[k])

    def counts(self) -> list[int]:
        return [len(level) for level in self._simplices]

    def simplices(self, k: int) -> list[Simplex]:
        if k < 0 or k > self.dim:
            return []
        return list(self._simplices[k])

    def simplex(self, k: int, i: int) -> Simplex:
        return self._simplices[k][i]

    def index(self, simplex: Simplex) -> int:
        return self._index[simplex.dim][simplex]

    def __contains__(self, simplex: Simplex) -> bool:
        return 0 <= simplex.dim <= self.dim and simplex in self._index[simplex.dim]

    def vertex_array(self, k: int) -> np.ndarray:
        """``|X_k| x (k+1)`` integer array of vertex ids, row i = simplex i."""
        return np.array([s.vertices for s in self.simplices(k)], dtype=np.int64).reshape(-1, k + 1)

    def missing_faces(self) -> list[Simplex]:
        missing = []
        for k in range(1, self.dim + 1):
            lower = self._index[k - 1]
            for s in self._simplices[k]:
                missing.extend(f for f in s.faces() if f not in lower)
        return missing

    def adjacency(self, k: int) -> AdjacencyStructure:
        if k < 0 or k > self.dim:
            raise EmptyDimension(f"complex has no {k}-simplices (top dimension {self.dim})")
        if k not in self._adjacency:
            self._adjacency[k] = self._build_adjacency(k)
        return self._adjacency[k]

    def _build_adjacency(self, k: int) -> AdjacencyStructure:
        n = self.count(k)
        index = self._index[k]
        # facets of each (k+1)-simplex are pairwise upper neighbours
        upper_groups = (
            [index[f] for f in tau.faces()] for tau in self.simplices(k + 1)
        )
        upper = _set_matrix(*_pairs_within_groups(upper_groups), n)
        if k == 0:
            lower = sp.csr_matrix((n, n), dtype=np.int8)
        else:
            # k-simplices sharing a (k-1)-face are pairwise lower neighbours
            cofaces: dict[Simplex, list[int]] = {}
            for i, s in enumerate(self._simplices[k]):
                for f in s.faces():
                    cofaces.setdefault(f, []).append(i)
            lower = _set_matrix(*_pairs_within_groups(cofaces.values()), n)
        return AdjacencyStructure(k=k, upper=upper, lower=lower)

    def __repr__(self) -> str:
        return f"SimplicialComplex(counts={self.counts()})"


def clique_complex(
    edges: Iterable[tuple[int, int]], n_vertices: int, max_dim: int | None = 2
) -> SimplicialComplex:
    """Clique complex of a simple undirected graph on vertices ``0..n-1``.

    Cliques are grown one vertex at a time: a clique ``c`` is extended by each
    common neighbour larger than ``max(c)``, so every clique is produced once
    and in lexicographic order. ``max_dim=None`` builds the full complex.
    """
    if max_dim is not None and max_dim < 1:
        raise ValueError(f"max_dim must be >= 1, got {max_dim}")
    nbrs: list[set[int]] = [set() for _ in range(n_vertices)]
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise ValueError(f"edge ({u}, {v}) outside vertex range [0, {n_vertices})")
        nbrs[u].add(v)
        nbrs[v].add(u)
    higher = [{w for w in nbrs[v] if w > v} for v in range(n_vertices)]

    # each level holds (clique, candidate extensions)
    level = [((v,), higher[v]) for v in range(n_vertices)]
    by_dim: list[list[Simplex]] = [[Simplex(c) for c, _ in level]]
    while level and (max_dim is None or len(by_dim) <= max_dim):
        nxt = []
        for clique, cand in level:
            for w in sorted(cand):
                nxt.append((clique + (w,), cand & higher[w]))
        if not nxt:
            break
        by_dim.append([Simplex(c) for c, _ in nxt])
        level = nxt
    return SimplicialComplex(by_dim, check=False)


def _check_k(X: SimplicialComplex, k: int, i: int) -> None:
    if k < 0 or k > X.dim:
        raise EmptyDimension(f"complex has no {k}-simplices")
    if not 0 <= i < X.count(k):
        raise IndexError(f"{k}-simplex index {i} out of range [0, {X.count(k)})")


def upper_neighbors(X: SimplicialComplex, k: int, i: int) -> set[int]:
    """Indices of k-simplices sharing a (k+1)-coface with simplex ``i``."""
    _check_k(X, k, i)
    return set(X.adjacency(k).upper_of(i).tolist())


def lower_neighbors(X: SimplicialComplex, k: int, i: int) -> set[int]:
    """Indices of k-simplices sharing a (k-1)-face with simplex ``i``."""
    if k == 0:
        raise InvalidDimension("0-simplices have no lower neighbours")
    _check_k(X, k, i)
    return set(X.adjacency(k).lower_of(i).tolist())


# ---------------------------------------------------------------- file formats


def read_edge_list(path: str | Path) -> tuple[list[tuple[int, int]], int, list[int]]:
    """Read a whitespace-separated edge list.

    Returns ``(edges, n_vertices, original_ids)`` where vertices are re-indexed
    densely in ascending order of their original id and ``original_ids[new]``
    gives the id used in the file. Duplicate edges are dropped.
    """
    raw: list[tuple[int, int]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected two vertex ids, got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative vertex id")
            raw.append((u, v))
    ids = sorted({v for e in raw for v in e})
    remap = {old: new for new, old in enumerate(ids)}
    edges = sorted({tuple(sorted((remap[u], remap[v]))) for u, v in raw})
    return edges, len(ids), ids


def write_simplex_list(X: SimplicialComplex, path: str | Path) -> None:
    with open(path, "w") as fh:
        for k in range(X.dim + 1):
            for s in X.simplices(k):
                fh.write(" ".join(map(str, s.vertices)) + "\n")


def read_simplex_list(path: str | Path) -> SimplicialComplex:
    by_dim: list[list[Simplex]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            s = make_simplex([int(v) for v in line.split()])
            while len(by_dim) <= s.dim:
                by_dim.append([])
            by_dim[s.dim].append(s)
    return SimplicialComplex(by_dim)
