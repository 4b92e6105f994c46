"""The trainable stack: a two-layer hash network producing tanh codes and a
projection head that places codes in the Poincare ball via the exponential
map at the origin. Forward passes record a tape; gradients are exact
reverse-mode, small enough to certify against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import geometry
from ._validation import check_curvature, check_random_state
from .exceptions import DataFormatError

__all__ = ["HashNetwork", "ForwardTape", "Adam"]

_MAGIC = b"HNET"
_VERSION = 1
_PARAM_ORDER = ("w1", "b1", "w2", "b2", "wp", "bp")


@dataclass
class ForwardTape:
    """Intermediates recorded by ``HashNetwork.forward`` for backprop."""

    features: np.ndarray
    pre_hidden: np.ndarray
    hidden: np.ndarray
    codes: np.ndarray
    pre_embed: np.ndarray | None


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class HashNetwork:
    """features -> relu dense -> dense -> tanh codes -> dense -> exp map.

    The hash layer is (w1, b1, w2, b2); the projection head (wp, bp) is used
    during training only. Codes live in (-1, 1)^n_bits, embeddings strictly
    inside the ball of the configured curvature.
    """

    def __init__(
        self,
        feature_dim: int,
        n_bits: int,
        hidden_dim: int = 1024,
        embed_dim: int = 128,
        c: float = 0.1,
        random_state=None,
    ):
        if min(feature_dim, n_bits, hidden_dim, embed_dim) < 1:
            raise ValueError("all dimensions must be positive")
        self.feature_dim = int(feature_dim)
        self.n_bits = int(n_bits)
        self.hidden_dim = int(hidden_dim)
        self.embed_dim = int(embed_dim)
        self.c = check_curvature(c)
        rng = check_random_state(random_state)
        self.w1 = _glorot(rng, self.feature_dim, self.hidden_dim)
        self.b1 = np.zeros(self.hidden_dim)
        self.w2 = _glorot(rng, self.hidden_dim, self.n_bits)
        self.b2 = np.zeros(self.n_bits)
        self.wp = _glorot(rng, self.n_bits, self.embed_dim)
        self.bp = np.zeros(self.embed_dim)

    # ------------------------------------------------------------------
    def parameters(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_ORDER}

    def set_parameters(self, params: dict[str, np.ndarray]) -> None:
        for name in _PARAM_ORDER:
            getattr(self, name)[...] = params[name]

    def forward(self, features: np.ndarray, with_projection: bool = True):
        """Return ``(codes, embeddings, tape)``; ``embeddings`` is None when
        the projection head is disabled."""
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.feature_dim:
            raise ValueError(
                f"expected feature dimension {self.feature_dim}, got {x.shape[1]}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        pre_hidden = x @ self.w1 + self.b1
        hidden = np.maximum(pre_hidden, 0.0)
        codes = np.tanh(hidden @ self.w2 + self.b2)
        if with_projection:
            pre_embed = codes @ self.wp + self.bp
            embeddings = geometry.expmap0(pre_embed, self.c)
        else:
            pre_embed = None
            embeddings = None
        tape = ForwardTape(x, pre_hidden, hidden, codes, pre_embed)
        return codes, embeddings, tape

    def backward(
        self,
        tape: ForwardTape,
        d_codes: np.ndarray | None,
        d_embeddings: np.ndarray | None,
    ) -> dict[str, np.ndarray]:
        """Exact gradients of a scalar loss w.r.t. every parameter, given the
        loss gradients at the code and embedding outputs."""
        grads = {}
        d_codes_total = np.zeros_like(tape.codes) if d_codes is None else d_codes.copy()
        if d_embeddings is not None:
            if tape.pre_embed is None:
                raise ValueError("tape was recorded without the projection head")
            d_pre_embed = geometry.expmap0_vjp(tape.pre_embed, d_embeddings, self.c)
            grads["wp"] = tape.codes.T @ d_pre_embed
            grads["bp"] = d_pre_embed.sum(axis=0)
            d_codes_total += d_pre_embed @ self.wp.T
        else:
            grads["wp"] = np.zeros_like(self.wp)
            grads["bp"] = np.zeros_like(self.bp)
        d_pre_codes = d_codes_total * (1.0 - tape.codes**2)
        grads["w2"] = tape.hidden.T @ d_pre_codes
        grads["b2"] = d_pre_codes.sum(axis=0)
        d_hidden = d_pre_codes @ self.w2.T
        d_pre_hidden = d_hidden * (tape.pre_hidden > 0.0)  # subgradient 0 at 0
        grads["w1"] = tape.features.T @ d_pre_hidden
        grads["b1"] = d_pre_hidden.sum(axis=0)
        return grads

    # ------------------------------------------------------------------
    def save(self, path) -> None:
        """Binary container: magic, version, dimension header, curvature, then
        the parameter blocks as little-endian float64 in declared order."""
        header = struct.pack(
            "<4sIIIIId",
            _MAGIC,
            _VERSION,
            self.feature_dim,
            self.hidden_dim,
            self.n_bits,
            self.embed_dim,
            self.c,
        )
        with open(path, "wb") as fh:
            fh.write(header)
            for name in _PARAM_ORDER:
                fh.write(np.ascontiguousarray(getattr(self, name), dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "HashNetwork":
        with open(path, "rb") as fh:
            blob = fh.read()
        header_size = struct.calcsize("<4sIIIIId")
        if len(blob) < header_size:
            raise DataFormatError(f"{path}: truncated model header")
        magic, version, feature_dim, hidden_dim, n_bits, embed_dim, c = struct.unpack(
            "<4sIIIIId", blob[:header_size]
        )
        if magic != _MAGIC:
            raise DataFormatError(f"{path}: not a model file (bad magic {magic!r})")
        if version != _VERSION:
            raise DataFormatError(f"{path}: unsupported model version {version}")
        model = cls.__new__(cls)
        model.feature_dim = feature_dim
        model.hidden_dim = hidden_dim
        model.n_bits = n_bits
        model.embed_dim = embed_dim
        model.c = c
        shapes = {
            "w1": (feature_dim, hidden_dim),
            "b1": (hidden_dim,),
            "w2": (hidden_dim, n_bits),
            "b2": (n_bits,),
            "wp": (n_bits, embed_dim),
            "bp": (embed_dim,),
        }
        offset = header_size
        for name in _PARAM_ORDER:
            shape = shapes[name]
            nbytes = int(np.prod(shape)) * 8
            block = blob[offset : offset + nbytes]
            if len(block) != nbytes:
                raise DataFormatError(f"{path}: truncated parameter block {name!r}")
            setattr(model, name, np.frombuffer(block, dtype="<f8").reshape(shape).copy())
            offset += nbytes
        if offset != len(blob):
            raise DataFormatError(f"{path}: {len(blob) - offset} trailing bytes")
        return model


class Adam:
    """Standard bias-corrected Adam over a named parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        b1c = 1.0 - self.beta1**self.step_count
        b2c = 1.0 - self.beta2**self.step_count
        for name, p in params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / b1c
            v_hat = self.v[name] / b2c
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
