"""Transformer building blocks on top of the numerics tape."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError
from ..numerics import Linear, Module, Tensor, gelu, layer_norm, param, reshape, softmax, transpose
from ..numerics import tensor as T

NEG_INF = -1e9


class LayerNorm(Module):
    def __init__(self, rng: np.random.Generator, dim: int):
        self.gain = Tensor(np.ones(dim), requires_grad=True)
        self.shift = param(rng, dim, zero=True)

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x) * self.gain + self.shift


class MultiHeadAttention(Module):
    def __init__(self, rng: np.random.Generator, dim: int, heads: int):
        if dim % heads:
            raise ConfigError(f"head count {heads} must divide feature dim {dim}")
        self.heads = heads
        self.q = Linear(rng, dim, dim)
        self.k = Linear(rng, dim, dim)
        self.v = Linear(rng, dim, dim)
        self.out = Linear(rng, dim, dim)

    def _split(self, x: Tensor) -> Tensor:
        b, n, d = x.shape
        return transpose(reshape(x, (b, n, self.heads, d // self.heads)), (0, 2, 1, 3))

    def __call__(self, query: Tensor, source: Tensor, mask: np.ndarray | None) -> Tensor:
        """``mask`` is additive, broadcastable to (B, heads, Lq, Lk)."""
        b, n, d = query.shape
        q = self._split(self.q(query))
        k = self._split(self.k(source))
        v = self._split(self.v(source))
        scores = T.matmul(q, transpose(k, (0, 1, 3, 2))) * (1.0 / math.sqrt(d // self.heads))
        if mask is not None:
            scores = scores + mask
        ctx = T.matmul(softmax(scores), v)
        return self.out(reshape(transpose(ctx, (0, 2, 1, 3)), (b, n, d)))


class FeedForward(Module):
    def __init__(self, rng: np.random.Generator, dim: int, hidden: int):
        self.inner = Linear(rng, dim, hidden)
        self.outer = Linear(rng, hidden, dim)

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(gelu(self.inner(x)))


class EncoderLayer(Module):
    def __init__(self, rng, dim: int, heads: int, ff_dim: int):
        self.attn = MultiHeadAttention(rng, dim, heads)
        self.norm1 = LayerNorm(rng, dim)
        self.ff = FeedForward(rng, dim, ff_dim)
        self.norm2 = LayerNorm(rng, dim)

    def __call__(self, x: Tensor, key_mask: np.ndarray) -> Tensor:
        x = self.norm1(x + self.attn(x, x, key_mask))
        return self.norm2(x + self.ff(x))


class DecoderLayer(Module):
    def __init__(self, rng, dim: int, heads: int, ff_dim: int):
        self.self_attn = MultiHeadAttention(rng, dim, heads)
        self.norm1 = LayerNorm(rng, dim)
        self.cross_attn = MultiHeadAttention(rng, dim, heads)
        self.norm2 = LayerNorm(rng, dim)
        self.ff = FeedForward(rng, dim, ff_dim)
        self.norm3 = LayerNorm(rng, dim)

    def __call__(self, x: Tensor, memory: Tensor, self_mask: np.ndarray, memory_mask: np.ndarray) -> Tensor:
        x = self.norm1(x + self.self_attn(x, x, self_mask))
        x = self.norm2(x + self.cross_attn(x, memory, memory_mask))
        return self.norm3(x + self.ff(x))


def key_padding_mask(mask: np.ndarray) -> np.ndarray:
    """(B, L) bool validity -> additive (B, 1, 1, L)."""
    return np.where(mask, 0.0, NEG_INF)[:, None, None, :]


def causal_mask(mask: np.ndarray) -> np.ndarray:
    n = mask.shape[1]
    tri = np.triu(np.full((n, n), NEG_INF), k=1)
    return tri[None, None, :, :] + key_padding_mask(mask)
