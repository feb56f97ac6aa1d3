"""Single-image pass through the whole cross-modal link, with a replayable trace.

caption -> tokenize -> semantic encode -> channel encode -> transmit ->
equalize -> channel decode -> semantic decode -> detokenize -> reconstruct
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .. import channel as ch
from ..codecs import SemComSystem
from ..errors import SemcommError, StageError
from ..kb_bridge.records import ImageRecord
from ..numerics import Tensor, no_tape

STAGES = (
    "caption",
    "tokenize",
    "semantic_encode",
    "channel_encode",
    "transmit",
    "equalize",
    "channel_decode",
    "semantic_decode",
    "detokenize",
    "reconstruct",
)


@dataclass
class Trace:
    text: str
    tokens: list[int]
    features: np.ndarray
    symbols: np.ndarray
    received: np.ndarray
    recovered: list[int]
    recovered_text: str
    snr_db: float
    realization: ch.ChannelRealization
    timings: dict[str, float] = field(default_factory=dict)

    INTERMEDIATES = ("tokens", "features", "symbols", "received", "recovered")

    @property
    def intermediates(self) -> dict[str, object]:
        """s, semantic features, y, y-hat and s-hat."""
        return {k: getattr(self, k) for k in self.INTERMEDIATES}


def _snr(snr_db: float) -> np.ndarray:
    return np.array([float(snr_db)])


def semantic_encode(system: SemComSystem, tokens, snr_db: float) -> np.ndarray:
    batch = system.batch([tokens])
    with no_tape():
        return system.encode(batch, _snr(snr_db)).data[0].copy()


def channel_encode(system: SemComSystem, features: np.ndarray, snr_db: float) -> ch.SymbolFrame:
    mask = np.ones((1, features.shape[0]), dtype=bool)
    with no_tape():
        y = system.channel.encode(Tensor(features[None]), mask, _snr(snr_db))
    return ch.SymbolFrame(y.data[0].reshape(-1).copy())


def channel_decode(system: SemComSystem, frame: ch.SymbolFrame, positions: int, snr_db: float) -> np.ndarray:
    received = frame.symbols.reshape(1, positions, -1)
    with no_tape():
        return system.channel.decode(received, _snr(snr_db)).data[0].copy()


def semantic_decode(system: SemComSystem, features: np.ndarray, snr_db: float) -> list[int]:
    mask = np.ones((1, features.shape[0]), dtype=bool)
    with no_tape():
        return system.greedy_decode(Tensor(features[None]), mask, _snr(snr_db))[0]


@contextmanager
def _stage(name: str, timings: dict[str, float]):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (SemcommError, ValueError, KeyError) as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - t0


def run_pipeline(
    img: ImageRecord,
    snr_db: float,
    system: SemComSystem,
    captioner,
    reconstructor,
    kind: str = "awgn",
    rng: np.random.Generator | None = None,
) -> tuple[ImageRecord, Trace]:
    """Transmit one image's semantics; returns the reconstruction and the full trace."""
    rng = np.random.default_rng(0) if rng is None else rng
    t: dict[str, float] = {}
    with _stage("caption", t):
        cap = captioner.caption(img)
    with _stage("tokenize", t):
        tokens = system.vocab.encode(cap.text)
    with _stage("semantic_encode", t):
        feats = semantic_encode(system, tokens, snr_db)
    with _stage("channel_encode", t):
        frame = channel_encode(system, feats, snr_db)
    with _stage("transmit", t):
        received, realization = ch.transmit(frame, snr_db, kind, rng)
    with _stage("equalize", t):
        equalized = ch.equalize(received, realization)
    with _stage("channel_decode", t):
        decoded = channel_decode(system, equalized, feats.shape[0], snr_db)
    with _stage("semantic_decode", t):
        recovered = semantic_decode(system, decoded, snr_db)
    with _stage("detokenize", t):
        text = system.vocab.decode(recovered)
    with _stage("reconstruct", t):
        caption_out = type(cap)(cap.image_id, text if text.strip() else "<empty>", cap.source)
        out = reconstructor.reconstruct(caption_out)
    trace = Trace(
        cap.text, tokens, feats, frame.symbols, received.symbols, recovered, text, float(snr_db), realization, t
    )
    return out, trace
