"""Deterministic K-means (Lloyd's algorithm) for both clustering tiers.

Initialization is k-means++ from a seeded PCG64 generator with a fixed
number of restarts; ties everywhere break toward the lowest index so that
identical inputs give bit-identical models. An empty cluster is reseeded
with the point currently farthest from its own centroid, which keeps k
constant (tier labelling depends on it).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, TooFewPoints, UnsupportedK


class TierLabel(str, Enum):
    """Cluster verdicts for the two tiers."""

    NOT_SUSPICIOUS = "not_suspicious"
    TRANSITIONAL = "transitional"
    SUSPICIOUS = "suspicious"
    LESS_SUSPICIOUS = "less_suspicious"
    MORE_SUSPICIOUS = "more_suspicious"


TIER1_LABELS = (TierLabel.NOT_SUSPICIOUS, TierLabel.TRANSITIONAL, TierLabel.SUSPICIOUS)
TIER2_LABELS = (TierLabel.LESS_SUSPICIOUS, TierLabel.MORE_SUSPICIOUS)


@dataclass(frozen=True)
class KMeansModel:
    """Fitted centroids plus fit metadata."""

    k: int
    centroids: np.ndarray
    inertia: float
    iterations_run: int
    seed: int


def _squared_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances."""
    diff = X[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _nearest(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Assignment (argmin, ties to lowest index) and per-point squared distance."""
    d2 = _squared_distances(X, centroids)
    assignments = np.argmin(d2, axis=1)
    return assignments, d2[np.arange(X.shape[0]), assignments]


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted draws, uniform fallback when all zero."""
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    centroids[0] = X[rng.integers(n)]
    d2 = np.sum((X - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centroids[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centroids[j]) ** 2, axis=1))
    return centroids


def _lloyd(
    X: np.ndarray,
    centroids: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Run Lloyd iterations from the given centroids until convergence."""
    k = centroids.shape[0]
    centroids = centroids.copy()
    prev_inertia = np.inf
    iterations = 0
    for _ in range(max_iter):
        assignments, d2 = _nearest(X, centroids)
        inertia = float(d2.sum())
        # Lloyd's guarantee; reseeding an empty cluster also only lowers it.
        assert inertia <= prev_inertia + 1e-12 * max(1.0, abs(prev_inertia)), \
            "inertia increased during Lloyd iteration"
        prev_inertia = inertia
        iterations += 1

        new_centroids = centroids.copy()
        for j in range(k):
            members = assignments == j
            if members.any():
                new_centroids[j] = X[members].mean(axis=0)
        empty = [j for j in range(k) if not (assignments == j).any()]
        if empty:
            taken: set[int] = set()
            order = np.argsort(-d2, kind="stable")
            for j in empty:
                for idx in order:
                    if int(idx) not in taken:
                        new_centroids[j] = X[idx]
                        taken.add(int(idx))
                        break

        shift = float(np.max(np.abs(new_centroids - centroids)))
        centroids = new_centroids
        if shift < tol:
            break

    # Final pass so the returned assignment matches the returned centroids.
    assignments, d2 = _nearest(X, centroids)
    inertia = float(d2.sum())
    assert inertia <= prev_inertia + 1e-12 * max(1.0, abs(prev_inertia)), \
        "inertia increased after final assignment"
    return centroids, assignments, inertia, iterations


def fit(
    X: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
    restarts: int = 10,
    init: np.ndarray | None = None,
) -> tuple[KMeansModel, np.ndarray]:
    """Fit K-means with k-means++ restarts, keeping the lowest-inertia run.

    ``init`` bypasses seeding with explicit starting centroids (one run).
    Raises ``TooFewPoints`` when there are fewer rows than clusters.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected 2-D data, got shape {X.shape}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if X.shape[0] < k:
        raise TooFewPoints(f"{X.shape[0]} points for k={k}")

    if init is not None:
        init = np.asarray(init, dtype=np.float64)
        if init.shape != (k, X.shape[1]):
            raise DimensionMismatch(f"init shape {init.shape}, expected {(k, X.shape[1])}")
        starts = [init]
    else:
        rng = np.random.default_rng(seed)
        starts = [_kmeans_pp_init(X, k, rng) for _ in range(restarts)]

    best: tuple[np.ndarray, np.ndarray, float, int] | None = None
    for start in starts:
        result = _lloyd(X, start, max_iter, tol)
        if best is None or result[2] < best[2]:
            best = result
    centroids, assignments, inertia, iterations = best
    model = KMeansModel(
        k=k, centroids=centroids, inertia=inertia,
        iterations_run=iterations, seed=seed,
    )
    return model, assignments


def assign(model: KMeansModel, X: np.ndarray) -> np.ndarray:
    """Nearest-centroid index per row (ties to the lowest cluster index)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.centroids.shape[1]:
        raise DimensionMismatch(
            f"data shape {X.shape} vs model dimension {model.centroids.shape[1]}"
        )
    assignments, _ = _nearest(X, model.centroids)
    return assignments


def tier_labels(model: KMeansModel, count_column_index: int = 0) -> dict[int, TierLabel]:
    """Map cluster index to tier label by centroid order in the count dimension.

    k=3 orders clusters into not-suspicious / transitional / suspicious,
    k=2 into less / more suspicious. Equal count coordinates break by
    cluster index.
    """
    if model.k == 3:
        names = TIER1_LABELS
    elif model.k == 2:
        names = TIER2_LABELS
    else:
        raise UnsupportedK(f"tier labels need k in {{2, 3}}, got {model.k}")
    order = np.argsort(model.centroids[:, count_column_index], kind="stable")
    return {int(cluster): names[rank] for rank, cluster in enumerate(order)}


def save_model(model: KMeansModel, path) -> None:
    """Serialize a model to a plain-text key=value + centroid matrix file."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"kind=kmeans\nk={model.k}\nseed={model.seed}\n")
        fh.write(f"inertia={model.inertia!r}\niterations_run={model.iterations_run}\n")
        for row in model.centroids:
            fh.write("centroid " + " ".join(repr(float(v)) for v in row) + "\n")


def load_model(path) -> KMeansModel:
    """Inverse of ``save_model``; round-trips exactly via repr floats."""
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("centroid "):
                rows.append([float(v) for v in line.split()[1:]])
            elif "=" in line:
                key, value = line.split("=", 1)
                meta[key] = value
    if meta.get("kind") != "kmeans":
        raise ValueError(f"not a kmeans model file: {path}")
    return KMeansModel(
        k=int(meta["k"]),
        centroids=np.array(rows, dtype=np.float64),
        inertia=float(meta["inertia"]),
        iterations_run=int(meta["iterations_run"]),
        seed=int(meta["seed"]),
    )
