"""Synthetic planted-structure generators for tests, demos and the CLI.

Two families: ball-point generators (Gaussian clusters in the tangent space at
the origin, pushed through the exponential map) used to exercise the
clusterers directly, and feature-space generators (hierarchical Gaussian
mixtures) used as desk-scale training corpora.
"""

from __future__ import annotations

import numpy as np

from . import geometry
from ._validation import check_random_state

__all__ = [
    "make_ball_clusters",
    "make_hierarchical_ball_clusters",
    "make_hierarchical_blobs",
]


def make_ball_clusters(
    n_clusters: int,
    n_per_cluster: int,
    dim: int,
    *,
    c: float = 0.1,
    center_norm: float = 2.0,
    spread: float = 0.05,
    random_state=None,
):
    """Planted clusters in the ball: cluster i sits at ``center_norm * e_i`` in
    the tangent space (so centers are mutually sqrt(2)*center_norm apart) with
    isotropic Gaussian scatter of scale ``spread`` before the exponential map.

    Returns ``(points, labels, centers)``.
    """
    if dim < n_clusters:
        raise ValueError("dim must be >= n_clusters for orthogonal center placement")
    rng = check_random_state(random_state)
    centers_t = np.zeros((n_clusters, dim))
    centers_t[np.arange(n_clusters), np.arange(n_clusters)] = center_norm
    labels = np.repeat(np.arange(n_clusters), n_per_cluster)
    tangent = centers_t[labels] + rng.normal(size=(labels.size, dim)) * spread
    return geometry.expmap0(tangent, c), labels, geometry.expmap0(centers_t, c)


def make_hierarchical_ball_clusters(
    n_super: int,
    n_sub_per_super: int,
    n_per_sub: int,
    dim: int,
    *,
    c: float = 0.1,
    super_norm: float = 2.0,
    sub_offset: float = 0.4,
    spread: float = 0.02,
    random_state=None,
):
    """Two-level planted structure in the ball: superclusters on orthogonal
    tangent axes, subclusters offset along further orthogonal axes.

    Returns ``(points, sub_labels, super_labels)`` where ``sub_labels`` index
    the ``n_super * n_sub_per_super`` fine clusters.
    """
    if dim < n_super + n_sub_per_super:
        raise ValueError("dim must be >= n_super + n_sub_per_super")
    rng = check_random_state(random_state)
    centers_t = np.zeros((n_super * n_sub_per_super, dim))
    for s in range(n_super):
        for j in range(n_sub_per_super):
            row = s * n_sub_per_super + j
            centers_t[row, s] = super_norm
            centers_t[row, n_super + j] = sub_offset
    sub_labels = np.repeat(np.arange(n_super * n_sub_per_super), n_per_sub)
    tangent = centers_t[sub_labels] + rng.normal(size=(sub_labels.size, dim)) * spread
    points = geometry.expmap0(tangent, c)
    return points, sub_labels, sub_labels // n_sub_per_super


def _rescale_mean_pairwise(vectors: np.ndarray, target: float) -> np.ndarray:
    """Scale a set of vectors so the mean pairwise Euclidean distance equals
    ``target`` exactly."""
    n = vectors.shape[0]
    if n < 2 or target <= 0:
        return vectors
    diffs = vectors[:, None, :] - vectors[None, :, :]
    dist = np.linalg.norm(diffs, axis=-1)
    mean = dist[np.triu_indices(n, k=1)].mean()
    return vectors * (target / mean)


def make_hierarchical_blobs(
    n_samples: int,
    dim: int,
    n_super: int,
    n_classes_per_super: int,
    *,
    super_separation: float = 8.0,
    class_separation: float = 3.0,
    spread: float = 1.0,
    n_queries: int = 0,
    random_state=None,
):
    """Feature-space corpus with a planted two-level label hierarchy.

    Superclass centers are Gaussian draws rescaled so their mean pairwise
    distance equals ``super_separation``; each superclass gets
    ``n_classes_per_super`` class centers whose offsets are rescaled the same
    way to ``class_separation``. Samples (and optional query samples drawn
    from the identical centers) are assigned to classes round-robin and
    scattered with scale ``spread``.

    Returns ``(X, y, X_query, y_query)``; ``y`` holds fine class ids, the
    superclass of class k is ``k // n_classes_per_super``.
    """
    rng = check_random_state(random_state)
    n_classes = n_super * n_classes_per_super
    super_centers = rng.normal(size=(n_super, dim))
    super_centers -= super_centers.mean(axis=0)
    super_centers = _rescale_mean_pairwise(super_centers, super_separation)
    class_centers = np.empty((n_classes, dim))
    for s in range(n_super):
        offsets = rng.normal(size=(n_classes_per_super, dim))
        offsets -= offsets.mean(axis=0)
        offsets = _rescale_mean_pairwise(offsets, class_separation)
        block = slice(s * n_classes_per_super, (s + 1) * n_classes_per_super)
        class_centers[block] = super_centers[s] + offsets

    def draw(count):
        y = np.arange(count) % n_classes
        x = class_centers[y] + rng.normal(size=(count, dim)) * spread
        return x, y

    x, y = draw(n_samples)
    xq, yq = draw(n_queries) if n_queries else (np.empty((0, dim)), np.empty(0, dtype=int))
    return x, y, xq, yq
