"""Hyperbolic hierarchical contrastive hashing on precomputed feature vectors.

The package trains a small hash network whose continuous codes are projected
into the Poincare ball, organizes the embeddings with bottom-up hyperbolic
K-Means, and optimizes hierarchical instance- and prototype-wise contrastive
objectives plus a quantization penalty. Retrieval quality of the binarized
codes is measured with Hamming-ranking metrics.
"""

from . import datasets, geometry, io, retrieval
from .clustering import HierarchicalHyperbolicKMeans, Hierarchy, HyperbolicKMeans
from .estimator import HyperbolicHasher
from .exceptions import DataFormatError, HyperhashError, NumericalError
from .model import Adam, HashNetwork
from .objective import BatchEmbeddings, LossConfig, LossValue, total_loss
from .trainer import TrainConfig, TrainResult, train

__all__ = [
    "datasets",
    "geometry",
    "io",
    "retrieval",
    "Hierarchy",
    "HierarchicalHyperbolicKMeans",
    "HyperbolicKMeans",
    "HyperbolicHasher",
    "HashNetwork",
    "Adam",
    "BatchEmbeddings",
    "LossConfig",
    "LossValue",
    "total_loss",
    "TrainConfig",
    "TrainResult",
    "train",
    "HyperhashError",
    "DataFormatError",
    "NumericalError",
]

__version__ = "0.1.0"
