"""Prototype construction: K-Means on the Poincare ball and its bottom-up
hierarchical variant.

Assignment uses the exact geodesic distance; prototypes are Einstein midpoints
computed in Klein coordinates. A cosine-space twin (`CosineKMeans`) backs the
hyper-sphere ablation, clustering continuous codes with the scaled cosine
distance and mean prototypes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from . import geometry
from ._validation import check_array, check_curvature, check_in_ball, check_random_state
from .objective import cosine_distance, cosine_distance_matrix

__all__ = [
    "Hierarchy",
    "kmeans_plus_plus",
    "HyperbolicKMeans",
    "CosineKMeans",
    "HierarchicalHyperbolicKMeans",
    "build_hierarchy",
]


@dataclass
class Hierarchy:
    """Per-layer prototype sets plus the parent links that connect them.

    ``layers[l]`` holds the layer-l prototype coordinates (finest layer first),
    ``instance_parent[i]`` the layer-0 prototype of instance i, and
    ``proto_parent[l][j]`` the layer-(l+1) parent of layer-l prototype j.
    ``curvature`` is the ball parameter the prototypes live in; 0.0 marks a
    code-space hierarchy built for the cosine metric.
    """

    curvature: float
    layers: list[np.ndarray]
    instance_parent: np.ndarray
    proto_parent: list[np.ndarray] = field(default_factory=list)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def counts(self) -> list[int]:
        return [layer.shape[0] for layer in self.layers]

    @property
    def n_instances(self) -> int:
        return int(self.instance_parent.shape[0])

    def ancestor_arrays(self) -> list[np.ndarray]:
        """Layer-l ancestor index of every instance, for l = 0..L-1."""
        out = [self.instance_parent]
        current = self.instance_parent
        for parents in self.proto_parent:
            current = parents[current]
            out.append(current)
        return out

    def ancestor(self, instance: int, layer: int) -> int:
        """Ancestor prototype index of one instance at the given layer (0 = finest)."""
        if not 0 <= layer < self.n_layers:
            raise ValueError(f"layer must be in [0, {self.n_layers}), got {layer}")
        current = int(self.instance_parent[instance])
        for parents in self.proto_parent[:layer]:
            current = int(parents[current])
        return current

    def validate(self) -> None:
        counts = self.counts
        if any(a <= b for a, b in zip(counts, counts[1:])):
            raise ValueError(f"layer sizes must be strictly decreasing, got {counts}")
        if self.instance_parent.min(initial=0) < 0 or (
            self.instance_parent.size and self.instance_parent.max() >= counts[0]
        ):
            raise ValueError("instance_parent indices out of range")
        for l, parents in enumerate(self.proto_parent):
            if parents.shape[0] != counts[l]:
                raise ValueError(f"proto_parent[{l}] has wrong length")
            if parents.size and (parents.min() < 0 or parents.max() >= counts[l + 1]):
                raise ValueError(f"proto_parent[{l}] indices out of range")


def _check_counts(counts, n_points: int) -> list[int]:
    counts = [int(k) for k in counts]
    if not counts:
        raise ValueError("at least one layer size is required")
    if any(k < 1 for k in counts):
        raise ValueError(f"layer sizes must be >= 1, got {counts}")
    if any(a <= b for a, b in zip(counts, counts[1:])):
        raise ValueError(f"layer sizes must be strictly decreasing, got {counts}")
    if counts[0] > n_points:
        raise ValueError(
            f"first layer size {counts[0]} exceeds the number of points {n_points}"
        )
    return counts


def kmeans_plus_plus(
    x: np.ndarray, k: int, rng: np.random.Generator, distance_matrix_fn
) -> np.ndarray:
    """K-Means++ seed indices: first uniform, the rest sampled proportionally
    to the squared distance to the nearest seed chosen so far. When all those
    distances vanish (duplicate points) the draw falls back to uniform."""
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    seeds = np.empty(k, dtype=np.intp)
    seeds[0] = rng.integers(n)
    if k == 1:
        return seeds
    d2 = distance_matrix_fn(x, x[seeds[:1]])[:, 0] ** 2
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            seeds[j] = rng.choice(n, p=d2 / total)
        else:
            seeds[j] = rng.integers(n)
        d2 = np.minimum(d2, distance_matrix_fn(x, x[seeds[j : j + 1]])[:, 0] ** 2)
    return seeds


def _reassign_empty(labels: np.ndarray, dist: np.ndarray, k: int) -> np.ndarray:
    """Give each empty cluster the point of the largest cluster that lies
    farthest from that cluster's prototype. Keeps every cluster nonempty while
    preserving the requested cluster count; all tie-breaks take the lowest
    index, so the rule is deterministic."""
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        donor = int(np.argmax(counts))
        members = np.flatnonzero(labels == donor)
        steal = members[int(np.argmax(dist[members, donor]))]
        labels[steal] = j
        counts[donor] -= 1
        counts[j] += 1
    return labels


def _lloyd(x, init_protos, max_iter, tol, distance_matrix_fn, group_midpoint_fn, movement_fn):
    """Alternate nearest-prototype assignment and midpoint updates until the
    largest prototype movement drops below ``tol`` or ``max_iter`` is hit.

    Returns (prototypes, labels, n_iter, objective_history); the history holds
    the summed point-to-assigned-prototype distance after every assignment.
    """
    protos = init_protos.copy()
    k = protos.shape[0]
    n = x.shape[0]
    rows = np.arange(n)
    history = []
    n_iter = 0
    for _ in range(max_iter):
        dist = distance_matrix_fn(x, protos)
        labels = _reassign_empty(np.argmin(dist, axis=1), dist, k)
        history.append(float(dist[rows, labels].sum()))
        new_protos = group_midpoint_fn(x, labels, k)
        movement = float(np.max(movement_fn(protos, new_protos)))
        protos = new_protos
        n_iter += 1
        if movement < tol:
            break
    dist = distance_matrix_fn(x, protos)
    labels = _reassign_empty(np.argmin(dist, axis=1), dist, k)
    history.append(float(dist[rows, labels].sum()))
    return protos, labels, n_iter, history


def _indicator(labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], k))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


class _KMeansBase(BaseEstimator, ClusterMixin):
    """Shared Lloyd machinery; subclasses provide the metric backend."""

    def __init__(self, n_clusters=8, max_iter=30, tol=1e-4, random_state=None):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    # metric backend -------------------------------------------------------
    def _prepare(self, x):
        return check_array(x, "X", ndim=2)

    def _distance_matrix(self, x, protos):
        raise NotImplementedError

    def _group_midpoints(self, x, labels, k):
        raise NotImplementedError

    def _movement(self, old, new):
        raise NotImplementedError

    # sklearn surface ------------------------------------------------------
    def fit(self, X, y=None):
        x = self._prepare(X)
        k = int(self.n_clusters)
        if not 1 <= k <= x.shape[0]:
            raise ValueError(f"n_clusters must be in [1, {x.shape[0]}], got {k}")
        rng = check_random_state(self.random_state)
        seeds = kmeans_plus_plus(x, k, rng, self._distance_matrix)
        protos, labels, n_iter, history = _lloyd(
            x,
            x[seeds],
            int(self.max_iter),
            float(self.tol),
            self._distance_matrix,
            self._group_midpoints,
            self._movement,
        )
        self.cluster_centers_ = protos
        self.labels_ = labels
        self.n_iter_ = n_iter
        self.objective_history_ = history
        self.inertia_ = history[-1]
        self.n_features_in_ = x.shape[1]
        return self

    def predict(self, X):
        x = self._prepare(X)
        return np.argmin(self._distance_matrix(x, self.cluster_centers_), axis=1)

    def transform(self, X):
        x = self._prepare(X)
        return self._distance_matrix(x, self.cluster_centers_)


class HyperbolicKMeans(_KMeansBase):
    """K-Means on the Poincare ball: geodesic-distance assignment and Einstein
    midpoint prototype updates (Klein average weighted by Lorentz factors).

    Parameters mirror the scikit-learn clusterers; ``c`` is the ball curvature
    parameter. Fitted attributes: ``cluster_centers_``, ``labels_``,
    ``inertia_`` (summed geodesic distance to the assigned prototype),
    ``n_iter_`` and ``objective_history_``.
    """

    def __init__(self, n_clusters=8, c=0.1, max_iter=30, tol=1e-4, random_state=None):
        super().__init__(n_clusters, max_iter, tol, random_state)
        self.c = c

    def _prepare(self, x):
        return check_in_ball(check_array(x, "X", ndim=2), check_curvature(self.c), "X")

    def _distance_matrix(self, x, protos):
        return geometry.distance_matrix(x, protos, self.c)

    def _group_midpoints(self, x, labels, k):
        # Einstein midpoint of every cluster at once: Lorentz-weighted Klein
        # sums assembled with one indicator product
        klein = geometry.poincare_to_klein(x, self.c)
        gamma = geometry.lorentz_factor(klein, self.c)[:, 0]
        ind = _indicator(labels, k)
        sums = ind.T @ (gamma[:, None] * klein)
        totals = ind.T @ gamma
        return geometry.klein_to_poincare(sums / totals[:, None], self.c)

    def _movement(self, old, new):
        return geometry.distance(old, new, self.c)


class CosineKMeans(_KMeansBase):
    """K-Means under the scaled cosine distance (dim/2)(1 - cos), with mean
    prototypes. Used to cluster continuous hash codes for the hyper-sphere
    ablation; assignments are invariant to prototype scale."""

    def _distance_matrix(self, x, protos):
        return cosine_distance_matrix(x, protos)

    def _group_midpoints(self, x, labels, k):
        ind = _indicator(labels, k)
        return (ind.T @ x) / np.bincount(labels, minlength=k)[:, None]

    def _movement(self, old, new):
        return cosine_distance(old, new)


def build_hierarchy(
    x: np.ndarray,
    counts,
    *,
    metric: str = "hyperbolic",
    c: float = 0.1,
    max_iter: int = 30,
    tol: float = 1e-4,
    rng: np.random.Generator,
) -> Hierarchy:
    """Bottom-up hierarchy: cluster the instances into ``counts[0]`` prototypes,
    then repeatedly cluster each prototype layer into the next (coarser) one,
    recording parent connections along the way."""
    x = check_array(x, "X", ndim=2)
    counts = _check_counts(counts, x.shape[0])
    if metric == "hyperbolic":
        cls = HyperbolicKMeans
        kwargs = {"c": c}
        curvature = check_curvature(c)
    elif metric == "cosine":
        cls = CosineKMeans
        kwargs = {}
        curvature = 0.0
    else:
        raise ValueError(f"unknown metric {metric!r}")

    layers: list[np.ndarray] = []
    proto_parent: list[np.ndarray] = []
    instance_parent = None
    points = x
    for k in counts:
        km = cls(n_clusters=k, max_iter=max_iter, tol=tol, random_state=rng, **kwargs)
        km.fit(points)
        if instance_parent is None:
            instance_parent = km.labels_
        else:
            proto_parent.append(km.labels_)
        layers.append(km.cluster_centers_)
        points = km.cluster_centers_
    hierarchy = Hierarchy(curvature, layers, instance_parent, proto_parent)
    hierarchy.validate()
    return hierarchy


class HierarchicalHyperbolicKMeans(BaseEstimator):
    """Bottom-up hierarchical K-Means on the Poincare ball.

    ``layer_sizes`` must be strictly decreasing, e.g. ``[12, 4]``. After
    ``fit`` the result is exposed as ``hierarchy_`` plus the usual ``labels_``
    (finest-layer assignment of the fitted points).
    """

    def __init__(self, layer_sizes=(8, 2), c=0.1, max_iter=30, tol=1e-4, random_state=None):
        self.layer_sizes = layer_sizes
        self.c = c
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        x = check_in_ball(check_array(X, "X", ndim=2), check_curvature(self.c), "X")
        rng = check_random_state(self.random_state)
        self.hierarchy_ = build_hierarchy(
            x,
            self.layer_sizes,
            metric="hyperbolic",
            c=self.c,
            max_iter=int(self.max_iter),
            tol=float(self.tol),
            rng=rng,
        )
        self.labels_ = self.hierarchy_.instance_parent
        self.n_features_in_ = x.shape[1]
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
