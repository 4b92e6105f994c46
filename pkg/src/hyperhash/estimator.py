"""Scikit-learn style facade over the trainer: ``fit`` on a feature matrix,
``transform`` to continuous codes, plus helpers for binary codes and ball
embeddings."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_array
from .retrieval import binarize
from .trainer import (
    AugmentSettings,
    ClusterSettings,
    LossSettings,
    ModelSettings,
    TrainConfig,
    train,
)

__all__ = ["HyperbolicHasher"]


class HyperbolicHasher(BaseEstimator, TransformerMixin):
    """Unsupervised feature-to-hash-code encoder.

    ``fit(X)`` trains the hash network with hierarchical contrastive learning
    in the Poincare ball (or on the code hyper-sphere with ``metric="cosine"``);
    ``transform(X)`` returns continuous codes in (-1, 1), ``transform_binary``
    their sign patterns, and ``embed`` the ball embeddings used for clustering.
    Any ``y`` passed to ``fit`` is ignored: training is label-free.
    """

    def __init__(
        self,
        n_bits=16,
        epochs=30,
        batch_size=64,
        lr=0.001,
        curvature=0.1,
        tau=0.2,
        quant_weight=0.01,
        metric="hyperbolic",
        objective="full",
        cluster_sizes=(32, 8),
        kmeans_max_iter=30,
        kmeans_tol=1e-4,
        hidden_dim=1024,
        embed_dim=128,
        noise_sigma=None,
        mask_fraction=0.1,
        random_state=0,
    ):
        self.n_bits = n_bits
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.curvature = curvature
        self.tau = tau
        self.quant_weight = quant_weight
        self.metric = metric
        self.objective = objective
        self.cluster_sizes = cluster_sizes
        self.kmeans_max_iter = kmeans_max_iter
        self.kmeans_tol = kmeans_tol
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.noise_sigma = noise_sigma
        self.mask_fraction = mask_fraction
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=int(self.epochs),
            batch_size=int(self.batch_size),
            lr=float(self.lr),
            seed=int(self.random_state),
            model=ModelSettings(
                n_bits=int(self.n_bits),
                hidden_dim=int(self.hidden_dim),
                embed_dim=int(self.embed_dim),
                curvature=float(self.curvature),
            ),
            cluster=ClusterSettings(
                counts=tuple(self.cluster_sizes),
                max_iter=int(self.kmeans_max_iter),
                tol=float(self.kmeans_tol),
            ),
            loss=LossSettings(
                tau=float(self.tau),
                quant_weight=float(self.quant_weight),
                metric=self.metric,
                objective=self.objective,
            ),
            augment=AugmentSettings(
                noise_sigma=None if self.noise_sigma is None else float(self.noise_sigma),
                mask_fraction=float(self.mask_fraction),
            ),
        )

    def fit(self, X, y=None):
        result = train(check_array(X, "X", ndim=2), self._train_config())
        self.model_ = result.model
        self.metrics_ = result.metrics
        self.hierarchy_ = result.hierarchy
        self.n_features_in_ = result.model.feature_dim
        return self

    def transform(self, X) -> np.ndarray:
        """Continuous codes in (-1, 1), hash layer only."""
        codes, _, _ = self.model_.forward(check_array(X, "X", ndim=2), with_projection=False)
        return codes

    def transform_binary(self, X) -> np.ndarray:
        """Sign-pattern codes in {-1, +1}."""
        return binarize(self.transform(X))

    def embed(self, X) -> np.ndarray:
        """Poincare-ball embeddings (hash layer plus projection head)."""
        _, embeddings, _ = self.model_.forward(check_array(X, "X", ndim=2))
        return embeddings
