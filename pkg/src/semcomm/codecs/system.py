"""The trainable end-to-end text link: semantic codec + channel codec + channel."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import channel as ch
from ..errors import ContractError
from ..numerics import Tensor, checkpoint, log_softmax, rng as rngs
from ..numerics import tensor as T
from .arch import ArchConfig
from .channel_codec import ChannelCodec
from .semantic import SemanticCodec
from .vocab import END, PAD, START, Vocab


class TruncationWarning(UserWarning):
    pass


@dataclass
class Batch:
    """Padded batch. ``src`` = tokens + END; decoder reads ``tgt_in`` and predicts ``tgt_out``."""

    src: np.ndarray
    tgt_in: np.ndarray
    tgt_out: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_sequences(cls, seqs: Sequence[Sequence[int]], max_len: int, pad_to: int | None = None) -> "Batch":
        clipped = []
        for s in seqs:
            if len(s) > max_len:
                warnings.warn(f"sequence of length {len(s)} truncated to {max_len}", TruncationWarning, stacklevel=3)
                s = s[:max_len]
            clipped.append(list(s))
        width = max(len(s) for s in clipped) + 1
        if pad_to is not None:
            width = max(width, pad_to)
        b = len(clipped)
        src = np.full((b, width), PAD, dtype=np.int64)
        tgt_in = np.full((b, width), PAD, dtype=np.int64)
        mask = np.zeros((b, width), dtype=bool)
        for i, s in enumerate(clipped):
            n = len(s)
            src[i, :n] = s
            src[i, n] = END
            tgt_in[i, 0] = START
            tgt_in[i, 1 : n + 1] = s
            mask[i, : n + 1] = True
        return cls(src, tgt_in, src.copy(), mask)

    def __len__(self) -> int:
        return self.src.shape[0]


@dataclass
class LinkOutput:
    features: Tensor
    symbols: Tensor
    received: Tensor
    decoded_features: Tensor
    gains: np.ndarray
    dropped: np.ndarray


def ce_loss(logits: Tensor, target: np.ndarray, pad: int = PAD) -> Tensor:
    """Mean negative log-likelihood of the target word over non-pad positions.

    With a one-hot reference distribution the per-word cross-entropy
    ``-[q log p + (1 - q) log(1 - p)]`` evaluated at the reference word reduces
    to ``-log p(word)``.
    """
    target = np.asarray(target)
    if logits.shape[:-1] != target.shape:
        raise ContractError(f"logits {logits.shape} do not align with targets {target.shape}")
    valid = target != pad
    n = int(valid.sum())
    if n == 0:
        raise ContractError("target has no non-pad positions")
    v = logits.shape[-1]
    pick = (target[..., None] == np.arange(v)) & valid[..., None]
    return T.tsum(log_softmax(logits) * pick.astype(np.float64)) * (-1.0 / n)


class SemComSystem:
    def __init__(self, vocab: Vocab, arch: ArchConfig, seed: int = 0):
        self.vocab = vocab
        self.arch = arch
        init = rngs.stream(seed, rngs.INIT)
        self.semantic = SemanticCodec(init, arch, len(vocab))
        self.channel = ChannelCodec(init, arch)

    # -- parameters -----------------------------------------------------------------
    def semantic_parameters(self) -> dict[str, Tensor]:
        return {"semantic." + k: v for k, v in self.semantic.named_parameters()}

    def channel_parameters(self) -> dict[str, Tensor]:
        return {"channel." + k: v for k, v in self.channel.named_parameters()}

    def parameters(self) -> dict[str, Tensor]:
        return {**self.semantic_parameters(), **self.channel_parameters()}

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.parameters().items()}

    def load_state_dict(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(arrays) != set(params):
            raise KeyError(f"checkpoint does not match architecture: {sorted(set(arrays) ^ set(params))[:5]}")
        for k, p in params.items():
            if arrays[k].shape != p.shape:
                raise ValueError(f"shape mismatch for {k}: {arrays[k].shape} vs {p.shape}")
            p.data = np.array(arrays[k], dtype=np.float64)

    def save(self, path) -> None:
        checkpoint.save(path, self.state_dict())

    def load(self, path) -> None:
        self.load_state_dict(checkpoint.load(path))

    def digest(self) -> str:
        return checkpoint.digest(self.state_dict())

    # -- forward pieces -------------------------------------------------------------
    def batch(self, seqs: Sequence[Sequence[int]], pad_to: int | None = None) -> Batch:
        return Batch.from_sequences(seqs, self.arch.max_len, pad_to)

    def encode(self, batch: Batch, snr_db: np.ndarray) -> Tensor:
        return self.semantic.encoder(batch.src, batch.mask, snr_db)

    def link(
        self,
        features: Tensor,
        mask: np.ndarray,
        snr_db: np.ndarray,
        kind: str,
        rng: np.random.Generator | None,
    ) -> LinkOutput:
        """Channel-encode, transmit, equalize and channel-decode a batch.

        ``rng=None`` gives a noiseless unit-gain channel.
        """
        snr_db = np.asarray(snr_db, dtype=np.float64)
        b = features.shape[0]
        y = self.channel.encode(features, mask, snr_db)
        dropped = np.zeros(b, dtype=bool)
        if rng is None:
            gains = np.ones(b)
            received = equalized = y
        else:
            gains = ch.draw_gains(kind, rng, b)
            std = np.sqrt(ch.noise_variance(snr_db))
            noise = rng.normal(size=y.shape) * std.reshape(-1, 1, 1)
            dropped = gains < ch.MIN_GAIN
            safe = np.where(dropped, 1.0, gains).reshape(-1, 1, 1)
            received = T.mul(y, gains.reshape(-1, 1, 1)) + noise
            equalized = T.div(received, safe)
        decoded = self.channel.decode(equalized, snr_db)
        return LinkOutput(features, y, received, decoded, gains, dropped)

    def logits(self, batch: Batch, memory: Tensor, snr_db: np.ndarray) -> Tensor:
        return self.semantic.decoder(batch.tgt_in, batch.mask, memory, batch.mask, snr_db)

    def loss(self, batch: Batch, snr_db, kind: str = "awgn", rng: np.random.Generator | None = None) -> Tensor:
        snr_db = np.broadcast_to(np.asarray(snr_db, dtype=np.float64), (len(batch),))
        out = self.link(self.encode(batch, snr_db), batch.mask, snr_db, kind, rng)
        target = batch.tgt_out
        if out.dropped.any():
            target = np.where(out.dropped[:, None], PAD, target)
        return ce_loss(self.logits(batch, out.decoded_features, snr_db), target)

    def greedy_decode(self, memory: Tensor, memory_mask: np.ndarray, snr_db: np.ndarray) -> list[list[int]]:
        b, n = memory_mask.shape
        prefix = np.full((b, 1), START, dtype=np.int64)
        done = np.zeros(b, dtype=bool)
        for _ in range(n):
            logits = self.semantic.decoder(prefix, np.ones(prefix.shape, dtype=bool), memory, memory_mask, snr_db)
            nxt = logits.data[:, -1, :].argmax(axis=-1)
            prefix = np.concatenate([prefix, nxt[:, None]], axis=1)
            done |= nxt == END
            if done.all():
                break
        out = []
        for row in prefix[:, 1:]:
            seq = []
            for t in row:
                if t == END:
                    break
                seq.append(int(t))
            out.append(seq)
        return out

    def transmit_sentences(
        self,
        seqs: Sequence[Sequence[int]],
        snr_db,
        kind: str = "awgn",
        rng: np.random.Generator | None = None,
    ) -> list[list[int]]:
        """Full link for token sequences; returns the greedily decoded sequences."""
        batch = self.batch(seqs)
        snr = np.broadcast_to(np.asarray(snr_db, dtype=np.float64), (len(batch),))
        out = self.link(self.encode(batch, snr), batch.mask, snr, kind, rng)
        decoded = self.greedy_decode(out.decoded_features, batch.mask, snr)
        return [[] if drop else seq for seq, drop in zip(decoded, out.dropped)]

    def sentence_features(self, seqs: Sequence[Sequence[int]], snr_db: float = 10.0) -> np.ndarray:
        """One vector per sentence: encoder output averaged over valid positions."""
        batch = self.batch(seqs)
        snr = np.full(len(batch), float(snr_db))
        f = self.encode(batch, snr).data
        m = batch.mask[:, :, None]
        return (f * m).sum(axis=1) / m.sum(axis=1)
