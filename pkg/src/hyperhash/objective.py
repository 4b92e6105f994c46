"""Training objectives: hierarchical instance-wise and prototype-wise
contrastive losses, the log-cosh quantization penalty, and their exact
gradients with respect to the embedding/code inputs.

Both distance backends are supported: the geodesic ball distance on the
hyperbolic embeddings and the scaled cosine distance on the continuous codes
(the hyper-sphere ablation). Negative-set construction is identical for the
two backends; only the distance changes.

Softmax ratios are evaluated through max-shifted exponentials, so arbitrarily
large distance magnitudes are safe; prototypes are treated as constants (they
are rebuilt once per epoch, outside the batch loop, and receive no gradient).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from ._validation import check_curvature

__all__ = [
    "LossConfig",
    "BatchEmbeddings",
    "LossValue",
    "cosine_distance",
    "cosine_distance_matrix",
    "cosine_distance_grad",
    "instance_negatives",
    "prototype_negatives",
    "instance_contrastive",
    "prototype_contrastive",
    "hierarchical_instance_loss",
    "hierarchical_prototype_loss",
    "quantization_loss",
    "total_loss",
    "OBJECTIVES",
]

OBJECTIVES = ("full", "ic", "pc", "hic", "hpc")


@dataclass
class LossConfig:
    """Objective hyperparameters.

    ``objective`` selects the ablation variant: "full" = hierarchical instance
    + hierarchical prototype, "hic"/"hpc" the hierarchical parts alone, "ic"
    flat in-batch instance negatives (no hierarchy), "pc" single-layer
    prototype contrast (the caller supplies a one-layer hierarchy).
    """

    tau: float = 0.2
    quant_weight: float = 0.01
    metric: str = "hyperbolic"
    curvature: float = 0.1
    objective: str = "full"

    def validate(self) -> None:
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.quant_weight < 0:
            raise ValueError(f"quant_weight must be nonnegative, got {self.quant_weight}")
        if self.metric not in ("hyperbolic", "cosine"):
            raise ValueError(f"metric must be 'hyperbolic' or 'cosine', got {self.metric!r}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.metric == "hyperbolic":
            check_curvature(self.curvature)


@dataclass
class BatchEmbeddings:
    """Aligned two-view batch: row i of every array comes from the same item.

    ``view1``/``view2`` are the hyperbolic embeddings, ``codes1``/``codes2``
    the continuous codes in (-1, 1), and ``instance_ids`` the dataset indices
    used to look up hierarchy ancestors.
    """

    view1: np.ndarray
    view2: np.ndarray
    codes1: np.ndarray
    codes2: np.ndarray
    instance_ids: np.ndarray


@dataclass
class LossValue:
    """Loss components plus gradients w.r.t. every batch input array."""

    total: float
    h_inst: float
    h_proto: float
    quant: float
    d_view1: np.ndarray = field(repr=False)
    d_view2: np.ndarray = field(repr=False)
    d_codes1: np.ndarray = field(repr=False)
    d_codes2: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# distance backends
# ---------------------------------------------------------------------------

def cosine_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Scaled cosine distance (K/2)(1 - cos(x, y)) with K the vector dimension."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = x.shape[-1]
    nx = np.linalg.norm(x, axis=-1)
    ny = np.linalg.norm(y, axis=-1)
    if np.any(nx == 0.0) or np.any(ny == 0.0):
        raise ValueError("cosine distance is undefined for zero-norm vectors")
    cos = np.sum(x * y, axis=-1) / (nx * ny)
    return (k / 2.0) * (1.0 - cos)


def cosine_distance_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """All-pairs scaled cosine distance, (N, K) x (M, K) -> (N, M)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = x.shape[-1]
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    if np.any(nx == 0.0) or np.any(ny == 0.0):
        raise ValueError("cosine distance is undefined for zero-norm vectors")
    cos = (x @ y.T) / np.outer(nx, ny)
    return (k / 2.0) * (1.0 - cos)


def cosine_distance_grad(x: np.ndarray, y: np.ndarray):
    """Distance plus gradients w.r.t. both arguments, broadcast over leading axes."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = x.shape[-1]
    nx = np.linalg.norm(x, axis=-1, keepdims=True)
    ny = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(nx == 0.0) or np.any(ny == 0.0):
        raise ValueError("cosine distance is undefined for zero-norm vectors")
    cos = np.sum(x * y, axis=-1, keepdims=True) / (nx * ny)
    d = (k / 2.0) * (1.0 - cos[..., 0])
    gx = -(k / 2.0) * (y / (nx * ny) - cos * x / (nx * nx))
    gy = -(k / 2.0) * (x / (nx * ny) - cos * y / (ny * ny))
    return d, gx, gy


def cosine_grad_coefficients(x: np.ndarray, y: np.ndarray):
    """Scaled-cosine analogue of ``geometry.distance_grad_coefficients``:
    gradients over the (N, M) pair grid expressed as self/other coefficients."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = x.shape[-1]
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    if np.any(nx == 0.0) or np.any(ny == 0.0):
        raise ValueError("cosine distance is undefined for zero-norm vectors")
    cos = (x @ y.T) / np.outer(nx, ny)
    d = (k / 2.0) * (1.0 - cos)
    cx_other = -(k / 2.0) / np.outer(nx, ny)
    cx_self = (k / 2.0) * cos / (nx * nx)[:, None]
    cy_self = (k / 2.0) * cos / (ny * ny)[None, :]
    return d, cx_self, cx_other, cy_self, cx_other


def _grad_coefficients(x, y, metric, c):
    if metric == "hyperbolic":
        return geometry.distance_grad_coefficients(x, y, c)
    return cosine_grad_coefficients(x, y)


def _distance_grad(x, y, metric, c):
    if metric == "hyperbolic":
        return geometry.pairwise_distance_grad(x, y, c)
    return cosine_distance_grad(x, y)


def _distance(x, y, metric, c):
    if metric == "hyperbolic":
        return geometry.pairwise_distance(x, y, c)
    return cosine_distance(x, y)


# ---------------------------------------------------------------------------
# negative-set construction
# ---------------------------------------------------------------------------

def instance_negatives(ancestors: np.ndarray, anchor: int) -> np.ndarray:
    """Batch indices whose ancestor differs from the anchor's at this layer."""
    ancestors = np.asarray(ancestors)
    return np.flatnonzero(ancestors != ancestors[anchor])


def instance_negative_mask(ancestors: np.ndarray) -> np.ndarray:
    """(B, B) mask: entry [i, j] is True when j is a valid negative for i."""
    ancestors = np.asarray(ancestors)
    return ancestors[:, None] != ancestors[None, :]


def flat_negative_mask(batch_size: int) -> np.ndarray:
    """Every other batch item is a negative (no hierarchy information)."""
    return ~np.eye(batch_size, dtype=bool)


def prototype_negatives(n_prototypes: int, ancestor: int) -> np.ndarray:
    """All prototype indices at a layer except the anchor's ancestor."""
    idx = np.arange(n_prototypes)
    return idx[idx != ancestor]


# ---------------------------------------------------------------------------
# per-anchor reference forms (used directly by small-scale callers and tests)
# ---------------------------------------------------------------------------

def instance_contrastive(
    anchor: int,
    view: int,
    negatives: np.ndarray,
    z1: np.ndarray,
    z2: np.ndarray,
    cfg: LossConfig,
) -> float:
    """Single-anchor, single-view contrastive term: cross-view positive versus
    both views of every negative instance."""
    views = (z1, z2)
    za = views[view][anchor]
    pos = -_distance(za, views[1 - view][anchor], cfg.metric, cfg.curvature) / cfg.tau
    neg_logits = [
        -_distance(za, views[u][j], cfg.metric, cfg.curvature) / cfg.tau
        for j in np.asarray(negatives, dtype=int)
        for u in (0, 1)
    ]
    all_logits = np.concatenate([[pos], neg_logits]) if neg_logits else np.array([pos])
    m = np.max(all_logits)
    return float(m + np.log(np.sum(np.exp(all_logits - m))) - pos)


def prototype_contrastive(
    anchor: int,
    view: int,
    prototypes: np.ndarray,
    ancestor: int,
    z1: np.ndarray,
    z2: np.ndarray,
    cfg: LossConfig,
) -> float:
    """Single-anchor, single-view prototype term: ancestor prototype positive
    versus every other prototype at the same layer."""
    za = (z1, z2)[view][anchor]
    logits = -_distance(za[None, :], prototypes, cfg.metric, cfg.curvature) / cfg.tau
    pos = logits[ancestor]
    m = np.max(logits)
    return float(m + np.log(np.sum(np.exp(logits - m))) - pos)


# ---------------------------------------------------------------------------
# batched losses with gradients
# ---------------------------------------------------------------------------

def _softmax_terms(pos_logit, neg_logits, neg_mask):
    """Per-anchor stabilized loss value and softmax weights over the candidate
    set {positive} + negatives. Masked-out entries contribute nothing."""
    neg_logits = np.where(neg_mask, neg_logits, -np.inf)
    m = np.maximum(pos_logit, neg_logits.max(axis=1))
    exp_pos = np.exp(pos_logit - m)
    exp_neg = np.where(neg_mask, np.exp(neg_logits - m[:, None]), 0.0)
    denom = exp_pos + exp_neg.sum(axis=1)
    loss = m + np.log(denom) - pos_logit
    return loss, exp_pos / denom, exp_neg / denom[:, None]


def hierarchical_instance_loss(
    z1: np.ndarray,
    z2: np.ndarray,
    negative_masks: list[np.ndarray],
    cfg: LossConfig,
):
    """Layer-weighted instance contrast over both views.

    ``negative_masks[l]`` is the (B, B) instance-level negative mask at layer
    l; the loss is (1/(B L)) sum_i sum_l (1/(l+1)) of the per-anchor two-view
    terms. Returns ``(value, d_z1, d_z2)``.
    """
    b = z1.shape[0]
    layers = len(negative_masks)
    z = np.concatenate([z1, z2], axis=0)
    dist, cx_self, cx_other, cy_self, cy_other = _grad_coefficients(
        z, z, cfg.metric, cfg.curvature
    )
    logits = -dist / cfg.tau
    pos_index = np.concatenate([np.arange(b) + b, np.arange(b)])
    rows = np.arange(2 * b)
    pos_logit = logits[rows, pos_index]

    weight = np.zeros((2 * b, 2 * b))
    value = 0.0
    for layer, mask in enumerate(negative_masks):
        mask2 = np.tile(mask, (2, 2))
        loss, s_pos, s_neg = _softmax_terms(pos_logit, logits, mask2)
        coef = 1.0 / (b * layers * (layer + 1))
        value += coef * loss.sum()
        # d loss / d dist: positive gets (1 - s_pos)/tau, negatives -s/tau
        weight[rows, pos_index] += coef * (1.0 - s_pos) / cfg.tau
        weight -= coef * s_neg / cfg.tau
    # contract pair weights against the coefficient decomposition of the
    # distance gradients: dz_p takes row sums as the "x" argument and column
    # sums as the "y" argument of every pair it participates in
    dz = (
        (weight * cx_self).sum(axis=1)[:, None] * z
        + (weight * cx_other) @ z
        + (weight * cy_self).sum(axis=0)[:, None] * z
        + (weight * cy_other).T @ z
    )
    return float(value), dz[:b], dz[b:]


def hierarchical_prototype_loss(
    z1: np.ndarray,
    z2: np.ndarray,
    prototype_layers: list[np.ndarray],
    ancestor_layers: list[np.ndarray],
    cfg: LossConfig,
):
    """Layer-weighted prototype contrast: the anchor's ancestor prototype is
    the positive, every other prototype at that layer a negative. Prototypes
    are constants; gradients flow only into the anchors.

    Returns ``(value, d_z1, d_z2)``.
    """
    b = z1.shape[0]
    layers = len(prototype_layers)
    z = np.concatenate([z1, z2], axis=0)
    rows = np.arange(2 * b)
    dz = np.zeros_like(z)
    value = 0.0
    for layer, (protos, anc) in enumerate(zip(prototype_layers, ancestor_layers)):
        dist, cx_self, cx_other, _, _ = _grad_coefficients(
            z, protos, cfg.metric, cfg.curvature
        )
        logits = -dist / cfg.tau
        anc2 = np.concatenate([anc, anc])
        pos_logit = logits[rows, anc2]
        mask = np.ones((2 * b, protos.shape[0]), dtype=bool)
        mask[rows, anc2] = False
        loss, s_pos, s_neg = _softmax_terms(pos_logit, logits, mask)
        coef = 1.0 / (b * layers * (layer + 1))
        value += coef * loss.sum()
        weight = -coef * s_neg / cfg.tau
        weight[rows, anc2] += coef * (1.0 - s_pos) / cfg.tau
        dz += (weight * cx_self).sum(axis=1)[:, None] * z + (weight * cx_other) @ protos
    return float(value), dz[:b], dz[b:]


def quantization_loss(codes1: np.ndarray, codes2: np.ndarray):
    """(1/2) sum log cosh(|h| - 1) over every code entry of both views, the
    literal triple sum with no batch normalization.

    Returns ``(value, d_codes1, d_codes2)``; at h = 0 the subgradient of |h|
    is taken as 0.
    """
    value = 0.0
    grads = []
    for codes in (codes1, codes2):
        a = np.abs(codes) - 1.0
        # log cosh(a) = |a| + log1p(exp(-2|a|)) - log 2, stable for any a
        value += 0.5 * np.sum(np.abs(a) + np.log1p(np.exp(-2.0 * np.abs(a))) - np.log(2.0))
        grads.append(0.5 * np.tanh(a) * np.sign(codes))
    return float(value), grads[0], grads[1]


def total_loss(
    batch: BatchEmbeddings,
    hierarchy,
    cfg: LossConfig,
) -> LossValue:
    """Combined objective: hierarchical instance + hierarchical prototype +
    quant_weight x quantization, with gradients for all four batch arrays.

    Under the hyperbolic metric the contrastive terms act on the embeddings;
    under the cosine metric they act on the continuous codes (and ``hierarchy``
    must hold code-space prototypes). ``hierarchy`` may be None only for the
    "ic" objective, which needs no prototypes.
    """
    cfg.validate()
    b = batch.codes1.shape[0]
    if cfg.metric == "hyperbolic":
        za, zb = batch.view1, batch.view2
    else:
        za, zb = batch.codes1, batch.codes2

    use_inst = cfg.objective in ("full", "ic", "hic")
    use_proto = cfg.objective in ("full", "pc", "hpc")
    if use_proto or cfg.objective == "hic":
        if hierarchy is None:
            raise ValueError(f"objective {cfg.objective!r} requires a hierarchy")

    if hierarchy is not None:
        batch_ancestors = [
            arr[batch.instance_ids] for arr in hierarchy.ancestor_arrays()
        ]

    h_inst = 0.0
    h_proto = 0.0
    d_za = np.zeros_like(za)
    d_zb = np.zeros_like(zb)
    if use_inst:
        if cfg.objective == "ic":
            masks = [flat_negative_mask(b)]
        else:
            masks = [instance_negative_mask(anc) for anc in batch_ancestors]
        h_inst, g1, g2 = hierarchical_instance_loss(za, zb, masks, cfg)
        d_za += g1
        d_zb += g2
    if use_proto:
        h_proto, g1, g2 = hierarchical_prototype_loss(
            za, zb, hierarchy.layers, batch_ancestors, cfg
        )
        d_za += g1
        d_zb += g2

    quant, d_codes1, d_codes2 = quantization_loss(batch.codes1, batch.codes2)
    d_codes1 = cfg.quant_weight * d_codes1
    d_codes2 = cfg.quant_weight * d_codes2

    if cfg.metric == "hyperbolic":
        d_view1, d_view2 = d_za, d_zb
    else:
        d_view1 = np.zeros_like(batch.view1)
        d_view2 = np.zeros_like(batch.view2)
        d_codes1 = d_codes1 + d_za
        d_codes2 = d_codes2 + d_zb

    return LossValue(
        total=h_inst + h_proto + cfg.quant_weight * quant,
        h_inst=h_inst,
        h_proto=h_proto,
        quant=quant,
        d_view1=d_view1,
        d_view2=d_view2,
        d_codes1=d_codes1,
        d_codes2=d_codes2,
    )
