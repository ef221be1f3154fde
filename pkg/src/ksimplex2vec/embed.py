"""Skip-gram embedding of simplices from a walk corpus.

Two trainers share one interface:

* negative sampling (``negatives > 0``): word2vec-style SGNS with input
  vectors ``F`` and output vectors ``C``, negatives drawn from the corpus
  unigram distribution raised to ``noise_power``;
* full softmax (``negatives == 0``): plain SGD on the exact objective, with
  the softmax partition taken over all simplices and a single table ``F``
  scoring both sides. Only practical for small complexes.

Co-occurrence is a symmetric window of ``window`` positions around each walk
position. The learning rate decays linearly per token across all epochs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit, prange

from ._rng import next_uniform, stream_key
from .complex import Simplex
from .errors import DegenerateCorpus
from .walks import MAX_SEED, WalkCorpus

__all__ = [
    "Hyperparams",
    "EmbeddingModel",
    "TrainingReport",
    "init_model",
    "context_pairs",
    "softmax_prob",
    "full_softmax_loss",
    "loss_gradient",
    "noise_distribution",
    "alias_table",
    "train",
    "write_embedding",
    "read_embedding",
]


@dataclass
class Hyperparams:
    dim: int = 20
    window: int = 10
    epochs: int = 5
    lr_initial: float = 0.025
    lr_final: float = 0.0001
    negatives: int = 5
    noise_power: float = 0.75
    seed: int = 0
    parallel: bool = False

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.negatives < 0:
            raise ValueError(f"negatives must be >= 0, got {self.negatives}")
        if not 0 <= self.lr_final <= self.lr_initial:
            raise ValueError("need 0 <= lr_final <= lr_initial")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must lie in [0, 2**63), got {self.seed}")


@dataclass
class EmbeddingModel:
    """``F`` is the embedding that gets written out; ``C`` holds output (context) vectors."""

    F: np.ndarray
    C: np.ndarray

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def dim(self) -> int:
        return self.F.shape[1]

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.F.copy(), self.C.copy())


@dataclass
class TrainingReport:
    epoch_loss: list[float] = field(default_factory=list)
    tokens: int = 0
    pairs: int = 0
    wall_time: float = 0.0


def init_model(n: int, dim: int, seed: int = 0) -> EmbeddingModel:
    if n < 1 or dim < 1:
        raise ValueError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
    rng = np.random.default_rng(seed)
    half = 0.5 / dim
    F = rng.uniform(-half, half, size=(n, dim))
    return EmbeddingModel(F=F, C=np.zeros((n, dim)))


def _walk_array(corpus: WalkCorpus | np.ndarray | Sequence[Sequence[int]]) -> np.ndarray:
    if isinstance(corpus, WalkCorpus):
        return corpus.walks
    arr = np.asarray(corpus, dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError("walks must form a 2-D array (equal-length walks)")
    return arr


def context_pairs(corpus, window: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``(center, context)`` index pairs within ``window`` positions."""
    walks = _walk_array(corpus)
    if walks.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    L = walks.shape[1]
    centers, contexts = [], []
    for off in range(1, min(window, L - 1) + 1):
        a, b = walks[:, :-off].ravel(), walks[:, off:].ravel()
        centers += [a, b]
        contexts += [b, a]
    if not centers:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def _context_table(model: EmbeddingModel, tied: bool) -> np.ndarray:
    return model.F if tied else model.C


def softmax_prob(model: EmbeddingModel, center: int, target: int, *, tied: bool = True) -> float:
    """Probability of ``target`` in the context of ``center`` under the softmax model."""
    scores = _context_table(model, tied) @ model.F[center]
    scores -= scores.max()
    w = np.exp(scores)
    return float(w[target] / w.sum())


_CHUNK = 2048


def _pair_terms(model: EmbeddingModel, centers, contexts, tied: bool, with_grad: bool):
    ctx_table = _context_table(model, tied)
    loss = 0.0
    gF = np.zeros_like(model.F) if with_grad else None
    gC = np.zeros_like(model.C) if with_grad else None
    gctx = gF if tied else gC
    for lo in range(0, len(centers), _CHUNK):
        s = centers[lo : lo + _CHUNK]
        t = contexts[lo : lo + _CHUNK]
        S = model.F[s]
        scores = S @ ctx_table.T
        mx = scores.max(axis=1, keepdims=True)
        w = np.exp(scores - mx)
        Z = w.sum(axis=1, keepdims=True)
        logZ = np.log(Z[:, 0]) + mx[:, 0]
        loss += float(np.sum(logZ - np.einsum("ij,ij->i", S, ctx_table[t])))
        if with_grad:
            p = w / Z
            # center side: E_p[ctx] - ctx_t
            np.add.at(gF, s, p @ ctx_table - ctx_table[t])
            # context side: p_v * F_s for every v, minus F_s at the observed target
            gctx += p.T @ S
            np.add.at(gctx, t, -S)
    return loss, gF, gC


def full_softmax_loss(model: EmbeddingModel, corpus, window: int, *, tied: bool = True) -> float:
    """Negative log-likelihood summed over all windowed ``(center, context)`` pairs.

    ``tied=True`` scores pairs by ``<F(t), F(s)>``; ``tied=False`` by ``<C(t), F(s)>``.
    """
    centers, contexts = context_pairs(corpus, window)
    return _pair_terms(model, centers, contexts, tied, with_grad=False)[0]


def loss_gradient(model: EmbeddingModel, corpus, window: int, *, tied: bool = True):
    """Analytic gradient ``(dF, dC)`` of :func:`full_softmax_loss`.

    In the tied form ``dC`` is identically zero.
    """
    centers, contexts = context_pairs(corpus, window)
    _, gF, gC = _pair_terms(model, centers, contexts, tied, with_grad=True)
    return gF, gC


def noise_distribution(walks: np.ndarray, n: int, power: float = 0.75) -> np.ndarray:
    counts = np.bincount(walks.ravel(), minlength=n).astype(np.float64)
    w = counts**power
    return w / w.sum()


# ---------------------------------------------------------------- kernels


@njit(cache=True, inline="always")
def _sigmoid_terms(x):
    """``(sigmoid(x), log sigmoid(x), log sigmoid(-x))`` from a single exp."""
    e = math.exp(-abs(x))
    l1 = math.log1p(e)
    if x >= 0:
        return 1.0 / (1.0 + e), -l1, -x - l1
    return e / (1.0 + e), x - l1, -l1


def alias_table(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table: bucket ``i`` keeps ``i`` with probability ``accept[i]``, else ``alias[i]``."""
    n = len(probs)
    scaled = np.asarray(probs, dtype=np.float64) * n / np.sum(probs)
    accept = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        accept[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    return accept, alias


@njit(cache=True, inline="always")
def _draw(accept, alias, u):
    x = u * accept.shape[0]
    i = int(x)
    if x - i < accept[i]:
        return i
    return alias[i]


@njit(cache=True, fastmath=True)
def _sgns_walk(F, C, walk, window, negatives, accept, alias, lr0, lr1, token0, total, state):
    L = walk.shape[0]
    d = F.shape[1]
    neu = np.empty(d)
    loss = 0.0
    npairs = 0
    for i in range(L):
        lr = lr0 - (lr0 - lr1) * ((token0 + i) / total)
        center = walk[i]
        lo = max(0, i - window)
        hi = min(L, i + window + 1)
        for j in range(lo, hi):
            if j == i:
                continue
            ctx = walk[j]
            for q in range(d):
                neu[q] = 0.0
            for s in range(negatives + 1):
                if s == 0:
                    target = ctx
                    label = 1.0
                else:
                    state, u = next_uniform(state)
                    target = _draw(accept, alias, u)
                    if target == ctx:
                        continue
                    label = 0.0
                f = 0.0
                for q in range(d):
                    f += F[center, q] * C[target, q]
                sig, log_pos, log_neg = _sigmoid_terms(f)
                if s == 0:
                    loss -= log_pos
                else:
                    loss -= log_neg
                g = (label - sig) * lr
                for q in range(d):
                    neu[q] += g * C[target, q]
                    C[target, q] += g * F[center, q]
            for q in range(d):
                F[center, q] += neu[q]
            npairs += 1
    return loss, npairs


@njit(cache=True)
def _sgns_sequential(F, C, walks, epoch, seed, window, negatives, accept, alias, lr0, lr1, total):
    L = walks.shape[1]
    n_walks = walks.shape[0]
    loss = 0.0
    npairs = 0
    for w in range(n_walks):
        token0 = (epoch * n_walks + w) * L
        a, b = _sgns_walk(F, C, walks[w], window, negatives, accept, alias, lr0, lr1, token0, total,
                          stream_key(seed, epoch, w))
        loss += a
        npairs += b
    return loss, npairs


@njit(cache=True, parallel=True)
def _sgns_parallel(F, C, walks, epoch, seed, window, negatives, accept, alias, lr0, lr1, total):
    # lock-free shared updates: result depends on thread scheduling
    L = walks.shape[1]
    n_walks = walks.shape[0]
    losses = np.zeros(n_walks)
    pairs = np.zeros(n_walks, dtype=np.int64)
    for w in prange(n_walks):
        token0 = (epoch * n_walks + w) * L
        a, b = _sgns_walk(F, C, walks[w], window, negatives, accept, alias, lr0, lr1, token0, total,
                          stream_key(seed, epoch, w))
        losses[w] = a
        pairs[w] = b
    return losses.sum(), pairs.sum()


@njit(cache=True)
def _softmax_epoch(F, walks, epoch, window, lr0, lr1, total):
    n, d = F.shape
    L = walks.shape[1]
    n_walks = walks.shape[0]
    scores = np.empty(n)
    fs = np.empty(d)
    ft = np.empty(d)
    expected = np.empty(d)
    loss = 0.0
    npairs = 0
    for w in range(n_walks):
        for i in range(L):
            lr = lr0 - (lr0 - lr1) * (((epoch * n_walks + w) * L + i) / total)
            s = walks[w, i]
            for j in range(max(0, i - window), min(L, i + window + 1)):
                if j == i:
                    continue
                t = walks[w, j]
                for q in range(d):
                    fs[q] = F[s, q]
                mx = -np.inf
                for v in range(n):
                    acc = 0.0
                    for q in range(d):
                        acc += F[v, q] * fs[q]
                    scores[v] = acc
                    if acc > mx:
                        mx = acc
                Z = 0.0
                for v in range(n):
                    scores[v] = math.exp(scores[v] - mx)
                    Z += scores[v]
                loss += math.log(Z) + mx
                for q in range(d):
                    ft[q] = F[t, q]
                    loss -= ft[q] * fs[q]
                    expected[q] = 0.0
                for v in range(n):
                    p = scores[v] / Z
                    for q in range(d):
                        expected[q] += p * F[v, q]
                # all three updates use pre-step values, so their order is irrelevant
                for v in range(n):
                    p = scores[v] / Z
                    for q in range(d):
                        F[v, q] -= lr * p * fs[q]
                for q in range(d):
                    F[t, q] += lr * fs[q]
                    F[s, q] -= lr * (expected[q] - ft[q])
                npairs += 1
    return loss, npairs


def train(corpus: WalkCorpus | np.ndarray, hp: Hyperparams, n: int | None = None,
          model: EmbeddingModel | None = None) -> tuple[EmbeddingModel, TrainingReport]:
    """Fit an embedding to a walk corpus.

    ``n`` defaults to the corpus' simplex count (or ``max index + 1`` for a bare
    array). Sequential training is bit-reproducible for a fixed seed.
    """
    hp.validate()
    walks = _walk_array(corpus)
    if n is None:
        n = corpus.n_simplices if isinstance(corpus, WalkCorpus) else int(walks.max()) + 1
    if walks.size == 0 or walks.shape[1] < 2:
        raise DegenerateCorpus("every walk has length 0: no co-occurrences to train on")
    walks = np.ascontiguousarray(walks, dtype=np.int64)
    if walks.min() < 0 or walks.max() >= n:
        raise ValueError("walk contains an index outside [0, n)")
    if model is None:
        model = init_model(n, hp.dim, hp.seed)
    report = TrainingReport(tokens=walks.size)
    total = float(hp.epochs * walks.size)
    t0 = time.perf_counter()
    if hp.negatives > 0:
        accept, alias = alias_table(noise_distribution(walks, n, hp.noise_power))
        kernel = _sgns_parallel if hp.parallel else _sgns_sequential
        for epoch in range(hp.epochs):
            loss, npairs = kernel(model.F, model.C, walks, epoch, hp.seed, hp.window, hp.negatives,
                                  accept, alias, hp.lr_initial, hp.lr_final, total)
            report.epoch_loss.append(loss / max(npairs, 1))
            report.pairs += int(npairs)
    else:
        for epoch in range(hp.epochs):
            loss, npairs = _softmax_epoch(model.F, walks, epoch, hp.window, hp.lr_initial, hp.lr_final, total)
            report.epoch_loss.append(loss / max(npairs, 1))
            report.pairs += int(npairs)
    report.wall_time = time.perf_counter() - t0
    if not (np.isfinite(model.F).all() and np.isfinite(model.C).all()):
        raise FloatingPointError("training diverged: non-finite embedding entries")
    return model, report


def write_embedding(path: str | Path, simplices: Sequence[Simplex], F: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(f"{F.shape[0]} {F.shape[1]}\n")
        for s, row in zip(simplices, F):
            fh.write(str(s) + " " + " ".join(f"{x:.9g}" for x in row) + "\n")


def read_embedding(path: str | Path) -> tuple[list[Simplex], np.ndarray]:
    with open(path) as fh:
        count, dim = map(int, fh.readline().split())
        simplices, rows = [], []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            simplices.append(Simplex.parse(parts[0]))
            rows.append([float(x) for x in parts[1:]])
    F = np.array(rows, dtype=np.float64).reshape(count, dim)
    return simplices, F
