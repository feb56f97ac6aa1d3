"""Semantic encoder/decoder: transformer layers interleaved with noise attention."""

from __future__ import annotations

import numpy as np

from ..nam import Identity, NoiseAttention
from ..numerics import Linear, Module, Tensor, param, take_rows
from .arch import ArchConfig
from .layers import DecoderLayer, EncoderLayer, causal_mask, key_padding_mask


def _nam(rng, cfg: ArchConfig, dim: int):
    return NoiseAttention(rng, dim, cfg.nam_hidden) if cfg.use_nam else Identity()


class SemanticEncoder(Module):
    def __init__(self, rng: np.random.Generator, cfg: ArchConfig, vocab_size: int):
        self.embed = param(rng, vocab_size, cfg.dim)
        self.position = param(rng, cfg.max_len + 1, cfg.dim)
        self.layers = [EncoderLayer(rng, cfg.dim, cfg.heads, cfg.ff_dim) for _ in range(cfg.layers)]
        self.nams = [_nam(rng, cfg, cfg.dim) for _ in range(cfg.layers)]

    def __call__(self, tokens: np.ndarray, mask: np.ndarray, snr_db: np.ndarray) -> Tensor:
        n = tokens.shape[1]
        x = take_rows(self.embed, tokens) + take_rows(self.position, np.arange(n))
        km = key_padding_mask(mask)
        for layer, nam in zip(self.layers, self.nams):
            x = nam(snr_db, layer(x, km))
        return x


class SemanticDecoder(Module):
    def __init__(self, rng: np.random.Generator, cfg: ArchConfig, vocab_size: int):
        self.embed = param(rng, vocab_size, cfg.dim)
        self.position = param(rng, cfg.max_len + 1, cfg.dim)
        self.layers = [DecoderLayer(rng, cfg.dim, cfg.heads, cfg.ff_dim) for _ in range(cfg.layers)]
        self.nams = [_nam(rng, cfg, cfg.dim) for _ in range(cfg.layers)]
        self.project = Linear(rng, cfg.dim, vocab_size)

    def __call__(
        self,
        prefix: np.ndarray,
        prefix_mask: np.ndarray,
        memory: Tensor,
        memory_mask: np.ndarray,
        snr_db: np.ndarray,
    ) -> Tensor:
        """Teacher-forced logits (B, Lp, V) for every prefix position."""
        n = prefix.shape[1]
        x = take_rows(self.embed, prefix) + take_rows(self.position, np.arange(n))
        sm = causal_mask(prefix_mask)
        mm = key_padding_mask(memory_mask)
        for layer, nam in zip(self.layers, self.nams):
            x = nam(snr_db, layer(x, memory, sm, mm))
        return self.project(x)


class SemanticCodec(Module):
    def __init__(self, rng: np.random.Generator, cfg: ArchConfig, vocab_size: int):
        self.encoder = SemanticEncoder(rng, cfg, vocab_size)
        self.decoder = SemanticDecoder(rng, cfg, vocab_size)
