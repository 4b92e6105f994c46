"""Training loop: rebuild the prototype hierarchy from the full dataset once
per epoch, then sweep shuffled two-view batches through the network, the
combined objective and Adam.

Labels never influence training; when present they are used only to log a
desk-scale self-retrieval mAP per epoch, and the parameter trajectory is
byte-identical with or without them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_array
from .clustering import Hierarchy, build_hierarchy
from .exceptions import NumericalError
from .model import Adam, HashNetwork
from .objective import BatchEmbeddings, LossConfig, total_loss
from .retrieval import RetrievalSet, binarize, map_at_k, pack_bits

__all__ = [
    "ModelSettings",
    "ClusterSettings",
    "LossSettings",
    "AugmentSettings",
    "TrainConfig",
    "TrainResult",
    "augment_views",
    "build_epoch_hierarchy",
    "train",
]


@dataclass
class ModelSettings:
    n_bits: int = 16
    hidden_dim: int = 1024
    embed_dim: int = 128
    curvature: float = 0.1


@dataclass
class ClusterSettings:
    counts: tuple = (32, 8)
    max_iter: int = 30
    tol: float = 1e-4


@dataclass
class LossSettings:
    tau: float = 0.2
    quant_weight: float = 0.01
    metric: str = "hyperbolic"
    objective: str = "full"


@dataclass
class AugmentSettings:
    noise_sigma: float | None = None  # None: 0.1 x the dataset's feature std
    mask_fraction: float = 0.1


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 0.001
    seed: int = 0
    map_k: int = 100
    map_queries: int = 256
    model: ModelSettings = field(default_factory=ModelSettings)
    cluster: ClusterSettings = field(default_factory=ClusterSettings)
    loss: LossSettings = field(default_factory=LossSettings)
    augment: AugmentSettings = field(default_factory=AugmentSettings)

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if not 0.0 <= self.augment.mask_fraction <= 1.0:
            raise ValueError("mask_fraction must lie in [0, 1]")
        if self.augment.noise_sigma is not None and self.augment.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        self._loss_config().validate()

    def _loss_config(self) -> LossConfig:
        return LossConfig(
            tau=self.loss.tau,
            quant_weight=self.loss.quant_weight,
            metric=self.loss.metric,
            curvature=self.model.curvature,
            objective=self.loss.objective,
        )


@dataclass
class TrainResult:
    model: HashNetwork
    metrics: list[dict]
    hierarchy: Hierarchy | None  # snapshot from the final epoch


def augment_views(rows: np.ndarray, rng: np.random.Generator, noise_sigma: float, mask_fraction: float):
    """Two stochastic views of each feature row: additive Gaussian noise plus
    an independent random coordinate mask per view."""
    views = []
    for _ in range(2):
        noise = rng.standard_normal(rows.shape) * noise_sigma
        mask = rng.random(rows.shape) < mask_fraction
        view = rows + noise
        view[mask] = 0.0
        views.append(view)
    return views[0], views[1]


def resolve_noise_sigma(setting: float | None, features: np.ndarray) -> float:
    return float(setting) if setting is not None else 0.1 * float(features.std())


def build_epoch_hierarchy(
    model: HashNetwork, features: np.ndarray, cfg: TrainConfig, rng: np.random.Generator
) -> Hierarchy | None:
    """Embed the full, unaugmented dataset with the current model and cluster
    it bottom-up. The flat "ic" objective needs no prototypes and skips the
    build; "pc" keeps only the first layer."""
    if cfg.loss.objective == "ic":
        return None
    hyperbolic = cfg.loss.metric == "hyperbolic"
    codes, embeddings, _ = model.forward(features, with_projection=hyperbolic)
    points = embeddings if hyperbolic else codes
    counts = list(cfg.cluster.counts)
    if cfg.loss.objective == "pc":
        counts = counts[:1]
    return build_hierarchy(
        points,
        counts,
        metric=cfg.loss.metric,
        c=cfg.model.curvature,
        max_iter=cfg.cluster.max_iter,
        tol=cfg.cluster.tol,
        rng=rng,
    )


def _desk_map(model: HashNetwork, features, label_sets, cfg: TrainConfig) -> float:
    """Self-retrieval mAP on the training set (hash layer only, binarized),
    with a deterministic query cap to keep per-epoch evaluation cheap."""
    codes, _, _ = model.forward(features, with_projection=False)
    packed = pack_bits(binarize(codes))
    n_query = min(cfg.map_queries, packed.shape[0])
    rset = RetrievalSet(
        packed[:n_query], label_sets[:n_query], packed, label_sets, model.n_bits
    )
    return map_at_k(rset, cfg.map_k, exclude_self=True)


def train(features: np.ndarray, cfg: TrainConfig, labels=None) -> TrainResult:
    """Run the full optimization and return the model, per-epoch metrics and
    the final epoch's hierarchy. ``labels`` is optional and only adds a "map"
    field to the metrics records."""
    cfg.validate()
    x = check_array(features, "features", ndim=2)
    n = x.shape[0]
    if n // cfg.batch_size < 1:
        raise ValueError(
            f"batch_size {cfg.batch_size} exceeds the dataset size {n}"
        )
    if labels is not None and len(labels) != n:
        raise ValueError("labels length does not match the feature count")

    rng = np.random.default_rng(cfg.seed)
    model = HashNetwork(
        feature_dim=x.shape[1],
        n_bits=cfg.model.n_bits,
        hidden_dim=cfg.model.hidden_dim,
        embed_dim=cfg.model.embed_dim,
        c=cfg.model.curvature,
        random_state=rng,
    )
    optimizer = Adam(model.parameters(), lr=cfg.lr)
    loss_cfg = cfg._loss_config()
    sigma = resolve_noise_sigma(cfg.augment.noise_sigma, x)
    hyperbolic = cfg.loss.metric == "hyperbolic"
    n_batches = n // cfg.batch_size

    metrics: list[dict] = []
    hierarchy: Hierarchy | None = None
    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        hierarchy = build_epoch_hierarchy(model, x, cfg, rng)
        order = rng.permutation(n)
        sums = np.zeros(4)
        for b in range(n_batches):
            ids = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            view_a, view_b = augment_views(x[ids], rng, sigma, cfg.augment.mask_fraction)
            codes1, emb1, tape1 = model.forward(view_a, with_projection=hyperbolic)
            codes2, emb2, tape2 = model.forward(view_b, with_projection=hyperbolic)
            batch = BatchEmbeddings(
                view1=emb1 if hyperbolic else codes1,
                view2=emb2 if hyperbolic else codes2,
                codes1=codes1,
                codes2=codes2,
                instance_ids=ids,
            )
            value = total_loss(batch, hierarchy, loss_cfg)
            if not np.isfinite(value.total):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {b}: {value.total}"
                )
            g1 = model.backward(tape1, value.d_codes1, value.d_view1 if hyperbolic else None)
            g2 = model.backward(tape2, value.d_codes2, value.d_view2 if hyperbolic else None)
            grads = {name: g1[name] + g2[name] for name in g1}
            optimizer.step(model.parameters(), grads)
            sums += (value.h_inst, value.h_proto, value.quant, value.total)

        means = sums / n_batches
        record = {
            "epoch": epoch,
            "h_inst": float(means[0]),
            "h_proto": float(means[1]),
            "quant": float(means[2]),
            "total": float(means[3]),
            "wall_ms": round((time.perf_counter() - started) * 1000.0, 3),
        }
        if labels is not None:
            record["map"] = float(_desk_map(model, x, labels, cfg))
        metrics.append(record)
    return TrainResult(model=model, metrics=metrics, hierarchy=hierarchy)
