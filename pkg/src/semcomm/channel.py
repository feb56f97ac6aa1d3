"""Physical channel simulation: AWGN and block Rayleigh fading.

Signal power is fixed at 1 by :func:`power_normalize`, so an SNR of ``r`` dB
means a per-symbol noise variance of ``10 ** (-r / 10)``. Rayleigh gains are
drawn once per frame and the receiver is assumed to know them exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, ContractError, DegenerateInputError, SingularChannelError

ChannelKind = Literal["awgn", "rayleigh"]
KINDS = ("awgn", "rayleigh")
MIN_GAIN = 1e-8
POWER_TOL = 1e-6


@dataclass(frozen=True)
class SymbolFrame:
    symbols: np.ndarray

    def __post_init__(self):
        if self.symbols.size == 0:
            raise ContractError("symbol frame must be non-empty")

    @property
    def power(self) -> float:
        return float(np.mean(self.symbols**2))

    def __len__(self) -> int:
        return self.symbols.size


@dataclass(frozen=True)
class ChannelRealization:
    kind: str
    gain: float
    noise_var: float
    noise: np.ndarray | None = None


@dataclass(frozen=True)
class SnrDistribution:
    """``fixed`` at ``lo`` or ``uniform`` over ``[lo, hi]`` (dB)."""

    kind: Literal["fixed", "uniform"]
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform"):
            raise ConfigError(f"unknown SNR distribution {self.kind!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError("SNR bounds must be finite")
        if self.lo > self.hi:
            raise ConfigError(f"SNR interval has lo > hi: [{self.lo}, {self.hi}]")

    @classmethod
    def fixed(cls, value: float) -> "SnrDistribution":
        return cls("fixed", float(value), float(value))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "SnrDistribution":
        return cls("uniform", float(lo), float(hi))

    @classmethod
    def parse(cls, text: str) -> "SnrDistribution":
        """Parse ``"fixed 7"`` or ``"uniform 0 10"``."""
        parts = text.split()
        try:
            if parts[0] == "fixed" and len(parts) == 2:
                return cls.fixed(float(parts[1]))
            if parts[0] == "uniform" and len(parts) == 3:
                return cls.uniform(float(parts[1]), float(parts[2]))
        except (ValueError, IndexError):
            pass
        raise ConfigError(f"cannot parse SNR distribution {text!r}; expected 'fixed V' or 'uniform LO HI'")

    def __str__(self) -> str:
        if self.kind == "fixed":
            return f"fixed {self.lo:g}"
        return f"uniform {self.lo:g} {self.hi:g}"


def noise_variance(snr_db) -> np.ndarray | float:
    return 10.0 ** (-np.asarray(snr_db, dtype=np.float64) / 10.0)


def sample_snr(dist: SnrDistribution, rng: np.random.Generator, size: int | None = None):
    """Draw SNR values (dB). Returns a float, or an array when ``size`` is given."""
    if dist.kind == "fixed" or dist.lo == dist.hi:
        return dist.lo if size is None else np.full(size, dist.lo)
    return float(rng.uniform(dist.lo, dist.hi)) if size is None else rng.uniform(dist.lo, dist.hi, size)


def draw_gains(kind: str, rng: np.random.Generator, size: int) -> np.ndarray:
    """Per-frame gains: ones for AWGN, Rayleigh magnitudes with E[h^2] = 1."""
    if kind == "awgn":
        return np.ones(size)
    if kind == "rayleigh":
        re, im = rng.normal(0.0, math.sqrt(0.5), size=(2, size))
        return np.sqrt(re * re + im * im)
    raise ConfigError(f"unknown channel kind {kind!r}; choose from {KINDS}")


def power_normalize(frame: SymbolFrame | np.ndarray) -> SymbolFrame:
    y = frame.symbols if isinstance(frame, SymbolFrame) else np.asarray(frame, dtype=np.float64)
    p = float(np.mean(y**2)) if y.size else 0.0
    if p == 0.0:
        raise DegenerateInputError("cannot normalize an all-zero symbol frame")
    return SymbolFrame(y / math.sqrt(p))


def transmit(
    frame: SymbolFrame,
    snr_db: float,
    kind: str,
    rng: np.random.Generator,
) -> tuple[SymbolFrame, ChannelRealization]:
    """Return ``h * y + n`` with ``n ~ N(0, sigma^2 I)``; ``h`` fixed per frame."""
    y = frame.symbols
    if abs(frame.power - 1.0) > POWER_TOL:
        raise ContractError(f"frame must be power-normalized before transmission (power={frame.power:.6g})")
    gain = float(draw_gains(kind, rng, 1)[0])
    var = float(noise_variance(snr_db))
    noise = rng.normal(0.0, math.sqrt(var), size=y.shape)
    return SymbolFrame(gain * y + noise), ChannelRealization(kind, gain, var, noise)


def equalize(frame: SymbolFrame, realization: ChannelRealization) -> SymbolFrame:
    """Perfect-CSI zero-forcing: divide by the known gain."""
    h = realization.gain
    if h < MIN_GAIN:
        raise SingularChannelError(h)
    if h == 1.0:
        return frame
    return SymbolFrame(frame.symbols / h)
