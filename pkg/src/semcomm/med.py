"""Short/long-term replay memory with RBF-kernel consolidation.

Fresh samples accumulate in the short-term memory (STM). When it fills, each
STM sample is scored by its mean kernel similarity to the long-term memory
(LTM) and moved there if it passes the threshold rule; the STM is then
cleared. Training batches mix draws from both stores.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import ConfigError, ContractError, EmptyBatchError

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1
Direction = Literal["similar", "diverse"]
FeatureFn = Callable[[Sequence[Sequence[int]]], np.ndarray]


@dataclass
class MemorySample:
    tokens: tuple[int, ...]
    feature: np.ndarray | None
    source: str
    step: int
    version: str = ""

    def __post_init__(self):
        self.tokens = tuple(int(t) for t in self.tokens)
        if self.feature is not None:
            self.feature = np.asarray(self.feature, dtype=np.float64).reshape(-1)


def rbf(a: MemorySample | np.ndarray, b: MemorySample | np.ndarray, tau: float) -> float:
    """exp(-||a - b||^2 / (2 tau^2))."""
    va = a.feature if isinstance(a, MemorySample) else np.asarray(a, dtype=np.float64)
    vb = b.feature if isinstance(b, MemorySample) else np.asarray(b, dtype=np.float64)
    if va is None or vb is None:
        raise ContractError("rbf needs feature vectors on both samples")
    if va.shape != vb.shape:
        raise ContractError(f"feature dimensions differ: {va.shape} vs {vb.shape}")
    d = va - vb
    return float(np.exp(-np.dot(d, d) / (2.0 * tau * tau)))


def kernel_matrix(a: np.ndarray, b: np.ndarray, tau: float) -> np.ndarray:
    """Pairwise RBF via ||a||^2 + ||b||^2 - 2 a.b (clipped at zero for roundoff)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        return np.zeros((a.shape[0] if a.ndim == 2 else 0, b.shape[0] if b.ndim == 2 else 0))
    if a.shape[1] != b.shape[1]:
        raise ContractError(f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * tau * tau))


@dataclass
class ConsolidationReport:
    step: int
    considered: int
    transferred: int
    dropped: int
    scores: np.ndarray
    cold_start: bool
    evicted: int = 0


@dataclass
class MemoryPool:
    n_stm_max: int = 500
    tau: float = 10.0
    lam: float = 0.05
    direction: Direction = "similar"
    ltm_cap: int | None = None
    seed: int = 0
    stm: list[MemorySample] = field(default_factory=list)
    ltm: list[MemorySample] = field(default_factory=list)
    reports: list[ConsolidationReport] = field(default_factory=list)
    transferred_total: int = 0
    dropped_total: int = 0
    pushes: int = 0
    featurizer: FeatureFn | None = field(default=None, repr=False, compare=False)
    version_fn: Callable[[], str] | None = field(default=None, repr=False, compare=False)
    refreshed_total: int = 0

    def __post_init__(self):
        if self.n_stm_max < 1:
            raise ConfigError(f"n_stm_max must be >= 1, got {self.n_stm_max}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.direction not in ("similar", "diverse"):
            raise ConfigError(f"direction must be 'similar' or 'diverse', got {self.direction!r}")
        if self.ltm_cap is not None and self.ltm_cap < 1:
            raise ConfigError(f"ltm_cap must be >= 1 when set, got {self.ltm_cap}")
        self._evict_rng = np.random.default_rng([self.seed, 0xE1C7])

    # -- feature caches -------------------------------------------------------------
    @staticmethod
    def _matrix(samples: Sequence[MemorySample]) -> np.ndarray:
        if not samples:
            return np.zeros((0, 0))
        if any(s.feature is None for s in samples):
            raise ContractError("memory sample without a cached feature vector")
        return np.stack([s.feature for s in samples])

    @property
    def b_stm(self) -> np.ndarray:
        return self._matrix(self.stm)

    @property
    def b_ltm(self) -> np.ndarray:
        return self._matrix(self.ltm)

    def refresh(self, features: FeatureFn, version: str) -> int:
        """Recompute features of samples extracted under a different encoder version."""
        stale = [s for s in self.stm + self.ltm if s.version != version or s.feature is None]
        if stale:
            feats = features([s.tokens for s in stale])
            for s, f in zip(stale, feats):
                s.feature = np.asarray(f, dtype=np.float64).reshape(-1)
                s.version = version
        return len(stale)

    # -- scoring --------------------------------------------------------------------
    def similarity_matrix(self) -> np.ndarray:
        if not self.stm or not self.ltm:
            return np.zeros((len(self.stm), len(self.ltm)))
        return kernel_matrix(self.b_stm, self.b_ltm, self.tau)

    def avg_similarity(self, i: int, s: np.ndarray | None = None) -> float:
        if not 0 <= i < len(self.stm):
            raise IndexError(f"STM index {i} out of range (size {len(self.stm)})")
        if not self.ltm:
            return 0.0
        s = self.similarity_matrix() if s is None else s
        return float(s[i].mean())

    def scores(self) -> np.ndarray:
        if not self.ltm:
            return np.zeros(len(self.stm))
        return self.similarity_matrix().mean(axis=1)

    def transfer_mask(self, scores: np.ndarray) -> np.ndarray:
        if self.direction == "similar":
            return scores > self.lam
        return scores < self.lam

    # -- mutation -------------------------------------------------------------------
    def push_stm(self, sample: MemorySample) -> ConsolidationReport | None:
        """Append to STM; consolidate once it reaches capacity."""
        if sample.feature is None:
            raise ContractError("sample must carry a feature vector before entering memory")
        self.stm.append(sample)
        self.pushes += 1
        if len(self.stm) >= self.n_stm_max:
            return self.consolidate()
        return None

    def consolidate(self) -> ConsolidationReport:
        if self.featurizer is not None and self.version_fn is not None:
            self.refreshed_total += self.refresh(self.featurizer, self.version_fn())
        cold = not self.ltm
        scores = self.scores()
        move = np.ones(len(self.stm), dtype=bool) if cold else self.transfer_mask(scores)
        moved = [s for s, m in zip(self.stm, move) if m]
        n_moved = len(moved)
        n_dropped = len(self.stm) - n_moved
        self.ltm.extend(moved)
        evicted = 0
        if self.ltm_cap is not None and len(self.ltm) > self.ltm_cap:
            evicted = len(self.ltm) - self.ltm_cap
            keep = np.sort(self._evict_rng.choice(len(self.ltm), size=self.ltm_cap, replace=False))
            self.ltm = [self.ltm[k] for k in keep]
        report = ConsolidationReport(self.pushes, len(self.stm), n_moved, n_dropped, scores, cold, evicted)
        self.stm = []
        self.reports.append(report)
        self.transferred_total += n_moved
        self.dropped_total += n_dropped
        logger.info(
            "consolidation at push %d: %d transferred, %d dropped%s",
            self.pushes,
            n_moved,
            n_dropped,
            " (cold start)" if cold else "",
        )
        return report

    def replay_batch(
        self, batch_size: int, mix_ratio: float, rng: np.random.Generator, use_ltm: bool = True
    ) -> list[MemorySample]:
        """Uniform draws with replacement: ``mix_ratio`` of the batch from LTM, the rest from STM.

        If one store cannot supply its share the other fills the gap; with
        ``use_ltm=False`` only the STM is consulted.
        """
        if not 0.0 <= mix_ratio <= 1.0:
            raise ConfigError(f"mix ratio must lie in [0, 1], got {mix_ratio}")
        ltm = self.ltm if use_ltm else []
        if not self.stm and not ltm:
            raise EmptyBatchError("both memory stores are empty")
        n_ltm = int(round(batch_size * mix_ratio))
        if not ltm:
            n_ltm = 0
        elif not self.stm:
            n_ltm = batch_size
        n_stm = batch_size - n_ltm
        out = [ltm[i] for i in rng.integers(0, len(ltm), size=n_ltm)] if n_ltm else []
        if n_stm:
            out += [self.stm[i] for i in rng.integers(0, len(self.stm), size=n_stm)]
        return out

    # -- persistence ----------------------------------------------------------------
    def to_json(self) -> dict:
        def dump(samples):
            return [{"tokens": list(s.tokens), "source": s.source, "step": s.step} for s in samples]

        return {
            "version": SNAPSHOT_VERSION,
            "n_stm_max": self.n_stm_max,
            "tau": self.tau,
            "lam": self.lam,
            "direction": self.direction,
            "ltm_cap": self.ltm_cap,
            "seed": self.seed,
            "pushes": self.pushes,
            "transferred_total": self.transferred_total,
            "dropped_total": self.dropped_total,
            "stm": dump(self.stm),
            "ltm": dump(self.ltm),
        }

    @classmethod
    def from_json(cls, data: dict) -> "MemoryPool":
        if data.get("version") != SNAPSHOT_VERSION:
            raise ContractError(f"unsupported memory snapshot version {data.get('version')!r}")

        def load(items):
            return [MemorySample(d["tokens"], None, d["source"], d["step"]) for d in items]

        pool = cls(
            n_stm_max=data["n_stm_max"],
            tau=data["tau"],
            lam=data["lam"],
            direction=data["direction"],
            ltm_cap=data["ltm_cap"],
            seed=data["seed"],
        )
        pool.stm = load(data["stm"])
        pool.ltm = load(data["ltm"])
        pool.pushes = data["pushes"]
        pool.transferred_total = data["transferred_total"]
        pool.dropped_total = data["dropped_total"]
        return pool

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "MemoryPool":
        return cls.from_json(json.loads(Path(path).read_text()))

    def summary(self) -> dict:
        sources: dict[str, dict[str, int]] = {}
        for store, samples in (("stm", self.stm), ("ltm", self.ltm)):
            for s in samples:
                sources.setdefault(s.source, {"stm": 0, "ltm": 0})[store] += 1
        return {
            "stm": len(self.stm),
            "ltm": len(self.ltm),
            "pushes": self.pushes,
            "consolidations": len(self.reports),
            "transferred_total": self.transferred_total,
            "dropped_total": self.dropped_total,
            "by_source": sources,
        }
