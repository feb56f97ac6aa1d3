"""Channel encoder/decoder: feed-forward stacks interleaved with noise attention.

The decoder mirrors the encoder: if the encoder maps ``d -> w1 -> ... -> wk``
the decoder maps ``wk -> ... -> w1 -> d``. Every hidden layer uses ReLU; the
last layer of each stack is affine so symbols and features can take any sign.
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateInputError
from ..numerics import Linear, Module, Tensor, relu, sqrt
from ..numerics import tensor as T
from .arch import ArchConfig
from .semantic import _nam


class FFStack(Module):
    def __init__(self, rng, cfg: ArchConfig, widths: list[int]):
        self.widths = list(widths)
        self.layers = [Linear(rng, a, b) for a, b in zip(widths[:-1], widths[1:])]
        self.nams = [_nam(rng, cfg, b) for b in widths[1:]]

    def __call__(self, x: Tensor, snr_db) -> Tensor:
        last = len(self.layers) - 1
        for i, (layer, nam) in enumerate(zip(self.layers, self.nams)):
            x = layer(x)
            if i < last:
                x = relu(x)
            x = nam(snr_db, x)
        return x


def masked_power_normalize(y: Tensor, mask: np.ndarray) -> Tensor:
    """Scale each frame (row of ``y`` over valid positions) to unit mean power."""
    m = mask[:, :, None].astype(np.float64)
    count = m.sum(axis=(1, 2), keepdims=True) * y.shape[-1]
    power = T.tsum(T.square(y) * m, axis=(1, 2), keepdims=True) / count
    if np.any(power.data <= 0.0):
        raise DegenerateInputError("channel encoder produced an all-zero frame")
    return (y * m) / sqrt(power)


class ChannelCodec(Module):
    def __init__(self, rng: np.random.Generator, cfg: ArchConfig):
        dims = [cfg.dim, *cfg.channel_widths]
        self.encoder = FFStack(rng, cfg, dims)
        self.decoder = FFStack(rng, cfg, dims[::-1])

    def encode(self, features: Tensor, mask: np.ndarray, snr_db) -> Tensor:
        return masked_power_normalize(self.encoder(features, snr_db), mask)

    def decode(self, received, snr_db) -> Tensor:
        return self.decoder(T.as_tensor(received), snr_db)
