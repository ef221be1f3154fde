"""Clustering and evaluation of embedded point clouds."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import LengthMismatch, TooFewPoints

__all__ = [
    "NOISE",
    "ClusteringResult",
    "kmeans",
    "dbscan",
    "knee_eps",
    "rand_index",
    "rand_index_pairs",
    "pca_project",
    "PCAResult",
    "write_clusters",
    "write_pca",
]

NOISE = -1


@dataclass
class ClusteringResult:
    labels: np.ndarray
    algorithm: str
    params: dict[str, Any] = field(default_factory=dict)
    inertia: float | None = None
    inertia_history: list[float] = field(default_factory=list)
    n_iter: int = 0

    @property
    def n_clusters(self) -> int:
        valid = self.labels[self.labels != NOISE]
        return int(valid.max()) + 1 if len(valid) else 0

    @property
    def noise_fraction(self) -> float:
        return float(np.mean(self.labels == NOISE)) if len(self.labels) else 0.0


def _check_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise ValueError("point cloud contains non-finite entries")
    return X


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # fewer distinct points than clusters: any remaining choice is equivalent
            idx = rng.integers(n)
        else:
            idx = min(int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right")), n - 1)
        centers[c] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centers[c : c + 1])[:, 0])
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    k = len(centers)
    history: list[float] = []
    labels = np.zeros(len(X), dtype=np.int64)
    for it in range(1, max_iter + 1):
        d = _sq_dists(X, centers)
        labels = np.argmin(d, axis=1)  # ties go to the lowest centroid index
        point_cost = d[np.arange(len(X)), labels]
        sizes = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(sizes == 0):
            # reseed an empty cluster at the farthest point whose cluster can spare it
            donor_ok = sizes[labels] > 1
            far = int(np.argmax(np.where(donor_ok, point_cost, -1.0)))
            sizes[labels[far]] -= 1
            sizes[c] += 1
            labels[far] = c
            point_cost[far] = 0.0
        inertia = float(point_cost.sum())
        history.append(inertia)
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
        if len(history) > 1 and history[-2] - inertia <= tol * max(history[-2], 1e-300):
            break
    d = _sq_dists(X, centers)
    labels = np.argmin(d, axis=1)
    inertia = float(d[np.arange(len(X)), labels].sum())
    history.append(inertia)
    return labels, centers, history, it


def kmeans(
    points, k: int, restarts: int = 10, seed: int = 0, *, max_iter: int = 300, tol: float = 1e-6
) -> ClusteringResult:
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` by inertia.

    Runs stop once the relative inertia decrease drops below ``tol``. Each
    restart uses its own child of ``SeedSequence(seed)``.
    """
    X = _check_points(points)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > len(X):
        raise TooFewPoints(f"cannot form {k} clusters from {len(X)} points")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, _, history, n_iter = _lloyd(X, _kmeanspp(X, k, rng), max_iter, tol)
        if best is None or history[-1] < best.inertia:
            best = ClusteringResult(
                labels=labels, algorithm="kmeans",
                params={"k": k, "restarts": restarts, "seed": seed, "max_iter": max_iter, "tol": tol},
                inertia=history[-1], inertia_history=history, n_iter=n_iter,
            )
    return best


def knee_eps(points, min_pts: int = 5) -> float:
    """Radius at the knee of the sorted ``min_pts``-nearest-neighbour distance curve.

    The knee is the point of the ascending curve farthest below the chord
    joining its endpoints, after scaling both axes to [0, 1].
    """
    X = _check_points(points)
    kk = min(min_pts, len(X) - 1)
    if kk < 1:
        return 1.0
    dist, _ = cKDTree(X).query(X, k=kk + 1)
    curve = np.sort(dist[:, -1])
    lo, hi = curve[0], curve[-1]
    if hi <= lo:
        return float(hi) if hi > 0 else 1.0
    y = (curve - lo) / (hi - lo)
    x = np.linspace(0.0, 1.0, len(curve))
    return float(curve[int(np.argmax(x - y))])


def dbscan(points, eps: float | None = None, min_pts: int = 5) -> ClusteringResult:
    """Density-based clustering; unreachable points get the label ``NOISE``.

    A point is a core point when at least ``min_pts`` points (itself
    included) lie within ``eps``. Clusters are the connected components of
    the core points; each border point joins the cluster of its nearest core
    point, which keeps the result independent of input order. Clusters are
    numbered by their smallest member index.
    """
    X = _check_points(points)
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    chosen = knee_eps(X, min_pts) if eps is None else float(eps)
    if chosen <= 0:
        raise ValueError(f"eps must be > 0, got {chosen}")
    n = len(X)
    tree = cKDTree(X)
    hoods = tree.query_ball_point(X, r=chosen)
    core = np.array([len(h) >= min_pts for h in hoods], dtype=bool)
    comp = np.full(n, -1, dtype=np.int64)
    n_comp = 0
    for start in np.flatnonzero(core):
        if comp[start] >= 0:
            continue
        comp[start] = n_comp
        stack = [start]
        while stack:
            p = stack.pop()
            for q in hoods[p]:
                if core[q] and comp[q] < 0:
                    comp[q] = n_comp
                    stack.append(q)
        n_comp += 1
    labels = comp.copy()
    core_idx = np.flatnonzero(core)
    for p in np.flatnonzero(~core):
        near = [q for q in hoods[p] if core[q]]
        if near:
            dist = np.linalg.norm(X[near] - X[p], axis=1)
            labels[p] = comp[near[int(np.argmin(dist))]]
    # renumber clusters by first appearance
    order = {}
    for lab in labels:
        if lab >= 0 and lab not in order:
            order[lab] = len(order)
    labels = np.array([order.get(lab, NOISE) for lab in labels], dtype=np.int64)
    return ClusteringResult(
        labels=labels, algorithm="dbscan",
        params={"eps": chosen, "min_pts": min_pts, "eps_from_knee": eps is None, "n_core": int(len(core_idx))},
    )


def _filtered(a, b, ignore):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"label arrays differ in length: {a.shape} vs {b.shape}")
    if ignore is not None:
        keep = (a != ignore) & (b != ignore)
        a, b = a[keep], b[keep]
    return a, b


def rand_index(labels_a: Sequence[int], labels_b: Sequence[int], *, ignore: int | None = None) -> float:
    """Unadjusted Rand index from the contingency table.

    Points carrying ``ignore`` in either labelling are dropped first.
    """
    a, b = _filtered(labels_a, labels_b, ignore)
    n = len(a)
    if n < 2:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def pairs(x):
        x = x.astype(np.int64)
        return int((x * (x - 1) // 2).sum())

    total = n * (n - 1) // 2
    same_both = pairs(table)
    agree = total + 2 * same_both - pairs(table.sum(1)) - pairs(table.sum(0))
    return agree / total


def rand_index_pairs(labels_a, labels_b, *, ignore: int | None = None) -> float:
    """Rand index by direct enumeration of all point pairs (O(n^2) reference)."""
    a, b = _filtered(labels_a, labels_b, ignore)
    n = len(a)
    if n < 2:
        return 1.0
    agree = 0
    for i in range(n):
        for j in range(i + 1, n):
            agree += (a[i] == a[j]) == (b[i] == b[j])
    return agree / (n * (n - 1) // 2)


@dataclass
class PCAResult:
    projected: np.ndarray
    components: np.ndarray  # (out_dim, d), orthonormal rows
    explained_variance_ratio: np.ndarray
    mean: np.ndarray


def pca_project(points, out_dim: int = 2) -> PCAResult:
    X = _check_points(points)
    if not 1 <= out_dim <= X.shape[1]:
        raise ValueError(f"out_dim must lie in [1, {X.shape[1]}], got {out_dim}")
    mean = X.mean(axis=0)
    Xc = X - mean
    # full V so that components exist even when there are fewer points than dimensions
    _, s, vt = np.linalg.svd(Xc, full_matrices=X.shape[0] < X.shape[1])
    comps = vt[:out_dim].copy()
    # deterministic sign: largest-magnitude loading of each component is positive
    signs = np.sign(comps[np.arange(out_dim), np.argmax(np.abs(comps), axis=1)])
    comps *= np.where(signs == 0, 1.0, signs)[:, None]
    var = np.zeros(X.shape[1])
    var[: len(s)] = s**2
    total = var.sum()
    ratios = var[:out_dim] / total if total > 0 else np.zeros(out_dim)
    return PCAResult(projected=Xc @ comps.T, components=comps, explained_variance_ratio=ratios, mean=mean)


def write_clusters(path: str | Path, names: Sequence[str], labels: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["simplex", "label"])
        for name, lab in zip(names, labels):
            w.writerow([name, int(lab)])


def write_pca(path: str | Path, names: Sequence[str], projected: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["simplex"] + [f"pc{i + 1}" for i in range(projected.shape[1])])
        for name, row in zip(names, projected):
            w.writerow([name] + [f"{x:.6g}" for x in row])
