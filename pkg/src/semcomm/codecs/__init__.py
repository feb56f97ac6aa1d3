"""Semantic and channel codecs plus their training loops."""

from .arch import PRESETS, ArchConfig, preset
from .system import Batch, SemComSystem, TruncationWarning, ce_loss
from .vocab import Vocab, detokenize, normalize, tokenize

__all__ = [
    "PRESETS",
    "ArchConfig",
    "Batch",
    "SemComSystem",
    "TruncationWarning",
    "Vocab",
    "ce_loss",
    "detokenize",
    "normalize",
    "preset",
    "tokenize",
]
