"""SNR-conditioned feature gate.

The scalar SNR ``r`` is lifted by a ReLU/ReLU/Sigmoid stack to a vector ``v``;
host features ``G`` go through one more affine layer to give ``e``; the gate
``K = sigmoid(e * v)`` (elementwise) then rescales ``G`` feature by feature.
Applied position-wise when ``G`` carries a sequence axis.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .numerics import Linear, Module, Tensor, relu, reshape, sigmoid
from .numerics import tensor as T

# hidden widths of the SNR projection for a 128-wide host
REFERENCE_HOST_DIM = 128
REFERENCE_HIDDEN = (56, 128)


def scaled_hidden(host_dim: int) -> tuple[int, int]:
    """Hidden projection widths scaled proportionally to the host width."""
    f = host_dim / REFERENCE_HOST_DIM
    return tuple(max(1, int(round(w * f))) for w in REFERENCE_HIDDEN)  # type: ignore[return-value]


class NoiseAttention(Module):
    def __init__(self, rng: np.random.Generator, feature_dim: int, hidden: tuple[int, int] | None = None):
        h1, h2 = hidden if hidden is not None else scaled_hidden(feature_dim)
        if min(h1, h2, feature_dim) < 1:
            raise ConfigError(f"invalid NAM widths {(h1, h2, feature_dim)}")
        self.proj1 = Linear(rng, 1, h1)
        self.proj2 = Linear(rng, h1, h2)
        self.proj3 = Linear(rng, h2, feature_dim)
        self.feature = Linear(rng, feature_dim, feature_dim)

    @property
    def feature_dim(self) -> int:
        return self.feature.n_in

    def project_snr(self, snr_db) -> Tensor:
        """(B,) or scalar SNR in dB -> (B, feature_dim) projection in (0, 1)."""
        r = np.asarray(snr_db, dtype=np.float64).reshape(-1, 1)
        hidden = relu(self.proj2(relu(self.proj1(r))))
        return sigmoid(self.proj3(hidden))

    def scale_features(self, G: Tensor, v: Tensor) -> Tensor:
        """Gate ``G`` (..., feature_dim) with ``v`` (B, feature_dim)."""
        if G.shape[-1] != self.feature_dim:
            raise ConfigError(f"NAM expects feature dim {self.feature_dim}, got {G.shape[-1]}")
        e = self.feature(G)
        if G.ndim == 3:
            v = reshape(v, (v.shape[0], 1, v.shape[1]))
        K = sigmoid(T.mul(e, v))
        return T.mul(K, G)

    def __call__(self, snr_db, G: Tensor) -> Tensor:
        return self.scale_features(G, self.project_snr(snr_db))


class Identity(Module):
    """Stand-in used when a codec is built without noise attention."""

    def __call__(self, snr_db, G: Tensor) -> Tensor:
        return G


def project_snr(r, params: NoiseAttention) -> np.ndarray:
    return params.project_snr(r).data[0]


def scale_features(G, v, params: NoiseAttention) -> np.ndarray:
    G = T.as_tensor(G)
    v = T.as_tensor(np.atleast_2d(np.asarray(v.data if isinstance(v, Tensor) else v)))
    return params.scale_features(G, v).data


def nam_forward(r, G, params: NoiseAttention) -> np.ndarray:
    return params(np.asarray([r], dtype=np.float64), T.as_tensor(G)).data
