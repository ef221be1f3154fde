"""Random walks on the k-simplices of a complex.

A walk moves from a k-simplex to one of its neighbours chosen uniformly,
where the neighbour set depends on the :class:`WalkMode`: simplices sharing a
coface (upper), sharing a face (lower), or either (both). Simplices with no
neighbour stay in place.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numba import njit, prange

from ._rng import next_uniform, stream_key
from .complex import SimplicialComplex
from .errors import EmptyDimension, InvalidDimension

__all__ = [
    "WalkMode",
    "TransitionMatrix",
    "WalkCorpus",
    "transition_matrix",
    "simplicial_walk",
    "generate_corpus",
    "stationary_check",
    "write_corpus",
    "read_corpus",
]

MAX_SEED = 2**63 - 1


class WalkMode(str, enum.Enum):
    BOTH = "both"
    UPPER = "upper"
    LOWER = "lower"

    @classmethod
    def parse(cls, value: "WalkMode | str") -> "WalkMode":
        if isinstance(value, cls):
            return value
        aliases = {"upperonly": "upper", "loweronly": "lower", "upper_only": "upper", "lower_only": "lower"}
        v = str(value).lower()
        return cls(aliases.get(v, v))


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic CSR matrix over the k-simplices.

    ``cumulative`` is aligned with ``matrix.data`` and holds the running sum of
    each row, used for inverse-CDF sampling.
    """

    matrix: sp.csr_matrix
    k: int
    mode: WalkMode
    cumulative: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _row_cumsum(m: sp.csr_matrix) -> np.ndarray:
    cum = np.empty_like(m.data)
    for i in range(m.shape[0]):
        lo, hi = m.indptr[i], m.indptr[i + 1]
        cum[lo:hi] = np.cumsum(m.data[lo:hi])
    return cum


def transition_matrix(X: SimplicialComplex, k: int, mode: WalkMode | str = WalkMode.BOTH) -> TransitionMatrix:
    mode = WalkMode.parse(mode)
    if X.count(k) == 0:
        raise EmptyDimension(f"complex has no {k}-simplices (counts {X.counts()})")
    if k == 0 and mode is WalkMode.LOWER:
        raise InvalidDimension("0-simplices have no lower neighbours")
    adj = X.adjacency(k)
    if mode is WalkMode.UPPER:
        support = adj.upper
    elif mode is WalkMode.LOWER:
        support = adj.lower
    else:
        support = ((adj.upper + adj.lower) > 0).astype(np.int8)
    support = sp.csr_matrix(support)
    n = support.shape[0]
    degree = np.diff(support.indptr)
    isolated = np.flatnonzero(degree == 0)
    if len(isolated):
        support = support + sp.csr_matrix(
            (np.ones(len(isolated), dtype=np.int8), (isolated, isolated)), shape=(n, n)
        )
        support = sp.csr_matrix(support)
        degree = np.diff(support.indptr)
    support.sort_indices()
    data = np.repeat(1.0 / degree, degree)
    P = sp.csr_matrix((data, support.indices.copy(), support.indptr.copy()), shape=(n, n))
    return TransitionMatrix(matrix=P, k=k, mode=mode, cumulative=_row_cumsum(P))


@njit(cache=True)
def _pick(indptr, indices, cumulative, i, u):
    lo = indptr[i]
    hi = indptr[i + 1]
    # scale by the row total so rounding in the cumulative sum cannot overrun
    target = u * cumulative[hi - 1]
    a, b = lo, hi - 1
    while a < b:
        mid = (a + b) // 2
        if cumulative[mid] > target:
            b = mid
        else:
            a = mid + 1
    return indices[a]


def simplicial_walk(start: int, length: int, P: TransitionMatrix, rng: np.random.Generator) -> list[int]:
    """One walk of ``length`` steps from ``start``; returns ``length + 1`` indices."""
    if length < 0:
        raise ValueError(f"walk length must be >= 0, got {length}")
    if not 0 <= start < P.n:
        raise IndexError(f"start {start} out of range [0, {P.n})")
    m = P.matrix
    walk = [int(start)]
    for _ in range(length):
        walk.append(int(_pick(m.indptr, m.indices, P.cumulative, walk[-1], rng.random())))
    return walk


@njit(cache=True)
def _walk_into(out, row, start, seed, rep, indptr, indices, cumulative):
    state = stream_key(seed, rep, start)
    cur = start
    out[row, 0] = cur
    for t in range(1, out.shape[1]):
        state, u = next_uniform(state)
        cur = _pick(indptr, indices, cumulative, cur, u)
        out[row, t] = cur


@njit(cache=True)
def _corpus_sequential(out, n, reps, seed, indptr, indices, cumulative):
    for r in range(reps):
        for s in range(n):
            _walk_into(out, r * n + s, s, seed, r, indptr, indices, cumulative)


@njit(cache=True, parallel=True)
def _corpus_parallel(out, n, reps, seed, indptr, indices, cumulative):
    for row in prange(reps * n):
        r = row // n
        s = row - r * n
        _walk_into(out, row, s, seed, r, indptr, indices, cumulative)


@dataclass
class WalkCorpus:
    """``walks[r * n + s]`` is the r-th walk started at simplex ``s``."""

    walks: np.ndarray  # (N * n, l + 1) int64
    k: int
    n_simplices: int
    walks_per_simplex: int
    length: int
    mode: WalkMode
    seed: int | None

    def __len__(self) -> int:
        return self.walks.shape[0]

    def header(self) -> str:
        return (
            f"#k={self.k} N={self.walks_per_simplex} l={self.length} "
            f"mode={self.mode.value} seed={self.seed}"
        )


def generate_corpus(
    X: SimplicialComplex,
    k: int,
    walks_per_simplex: int,
    length: int,
    mode: WalkMode | str = WalkMode.BOTH,
    seed: int = 0,
    *,
    parallel: bool = False,
    P: TransitionMatrix | None = None,
) -> WalkCorpus:
    """Run ``walks_per_simplex`` walks of ``length`` steps from every k-simplex.

    The walk from simplex ``s`` in repetition ``r`` draws from its own stream
    keyed by ``(seed, r, s)``, so the sequential and parallel paths return the
    same corpus.
    """
    if walks_per_simplex < 1:
        raise ValueError(f"walks per simplex must be >= 1, got {walks_per_simplex}")
    if length < 0:
        raise ValueError(f"walk length must be >= 0, got {length}")
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must lie in [0, 2**63), got {seed}")
    mode = WalkMode.parse(mode)
    if P is None:
        P = transition_matrix(X, k, mode)
    n = P.n
    m = P.matrix
    out = np.empty((walks_per_simplex * n, length + 1), dtype=np.int64)
    kernel = _corpus_parallel if parallel else _corpus_sequential
    kernel(out, n, walks_per_simplex, seed, m.indptr.astype(np.int64), m.indices.astype(np.int64), P.cumulative)
    return WalkCorpus(
        walks=out, k=k, n_simplices=n, walks_per_simplex=walks_per_simplex,
        length=length, mode=mode, seed=seed,
    )


def stationary_check(P: TransitionMatrix, steps: int, seed: int = 0, start: int = 0) -> np.ndarray:
    """Visit frequencies of a single long walk (diagnostic only)."""
    walk = simplicial_walk(start, steps, P, np.random.default_rng(seed))
    counts = np.bincount(np.asarray(walk[1:] if steps else walk), minlength=P.n)
    return counts / counts.sum()


def write_corpus(corpus: WalkCorpus, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(corpus.header() + "\n")
        np.savetxt(fh, corpus.walks, fmt="%d", delimiter=" ")


def read_corpus(path: str | Path) -> WalkCorpus:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing corpus header line")
        meta = dict(tok.split("=", 1) for tok in header[1:].split())
        rows = [line.split() for line in fh if line.strip()]
    walks = np.array(rows, dtype=np.int64).reshape(len(rows), -1)
    reps = int(meta["N"])
    seed = None if meta.get("seed", "None") == "None" else int(meta["seed"])
    return WalkCorpus(
        walks=walks, k=int(meta["k"]), n_simplices=len(rows) // reps if reps else 0,
        walks_per_simplex=reps, length=int(meta["l"]), mode=WalkMode.parse(meta["mode"]), seed=seed,
    )
