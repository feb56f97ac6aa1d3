"""Staged optimization of the link.

Stage 1 fits the channel codec (and its gates) to reproduce semantic
features through the noisy channel; stage 2 fits the semantic codec (and its
gates) on token cross-entropy through the frozen channel. The crossover loop
alternates the two until validation cross-entropy stops improving.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..channel import SnrDistribution, sample_snr
from ..errors import TrainingDivergedError
from ..numerics import Adam, GradientTape, Tensor, backward, no_tape
from ..numerics import rng as rngs
from ..numerics import tensor as T
from .system import Batch, SemComSystem

logger = logging.getLogger(__name__)

BatchSource = Callable[[np.random.Generator], Sequence[Sequence[int]]]


@dataclass(frozen=True)
class TrainConfig:
    snr_train: SnrDistribution = SnrDistribution.uniform(0.0, 10.0)
    channel: str = "awgn"
    batch_size: int = 32
    lr: float = 3e-3
    channel_steps: int = 100
    semantic_steps: int = 300
    rounds: int = 20
    tol: float = 1e-3


@dataclass
class TrainLog:
    """Per-step loss curve: (step, stage, loss, mean SNR of the batch)."""

    rows: list[tuple[int, str, float, float]] = field(default_factory=list)

    def add(self, stage: str, loss: float, snr: float) -> None:
        self.rows.append((len(self.rows), stage, loss, snr))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "stage", "loss", "snr_sample"])
            for step, stage, loss, snr in self.rows:
                w.writerow([step, stage, repr(loss), repr(snr)])


@dataclass
class StageResult:
    stage: str
    initial_loss: float
    final_loss: float
    steps: int


@dataclass
class RoundMetrics:
    round: int
    channel: StageResult
    semantic: StageResult
    val_ce: float
    accepted: bool


@dataclass
class CrossoverResult:
    rounds: list[RoundMetrics]
    converged: bool
    best_val_ce: float


def corpus_source(seqs: Sequence[Sequence[int]], batch_size: int) -> BatchSource:
    """Uniform minibatches without replacement within a batch."""
    seqs = [list(s) for s in seqs]
    k = min(batch_size, len(seqs))

    def draw(rng: np.random.Generator):
        idx = rng.choice(len(seqs), size=k, replace=False)
        return [seqs[i] for i in idx]

    return draw


def _check(stage: str, step: int, value: float) -> float:
    if not math.isfinite(value):
        raise TrainingDivergedError(stage, step, value)
    return value


def feature_mse(decoded: Tensor, target: np.ndarray, mask: np.ndarray) -> Tensor:
    m = mask[:, :, None].astype(np.float64)
    diff = (decoded - target) * m
    return T.tsum(T.square(diff)) * (1.0 / (m.sum() * target.shape[-1]))


def channel_objective(system: SemComSystem, batch: Batch, snr: np.ndarray, kind: str, rng) -> Tensor:
    """Feature reconstruction error through the channel (semantic encoder held fixed)."""
    with no_tape():
        feats = system.encode(batch, snr).data
    out = system.link(Tensor(feats), batch.mask, snr, kind, rng)
    return feature_mse(out.decoded_features, feats, batch.mask)


def _heldout(system, seqs, cfg: TrainConfig, seed: int, objective) -> float:
    rng = rngs.stream(seed, rngs.EVAL, 17)
    batch = system.batch(seqs)
    snr = sample_snr(cfg.snr_train, rng, size=len(batch))
    return objective(system, batch, snr, cfg.channel, rng).item()


def _semantic_objective(system, batch, snr, kind, rng) -> Tensor:
    return system.loss(batch, snr, kind, rng)


def _run_stage(
    stage: str,
    system: SemComSystem,
    params: dict[str, Tensor],
    objective,
    source: BatchSource,
    cfg: TrainConfig,
    steps: int,
    rng: np.random.Generator,
    log: TrainLog | None,
    heldout: Sequence[Sequence[int]] | None,
    seed: int,
) -> StageResult:
    opt = Adam(params, lr=cfg.lr)
    plist = list(params.values())
    initial = _heldout(system, heldout, cfg, seed, objective) if heldout else float("nan")
    loss_val = float("nan")
    for step in range(steps):
        batch = system.batch(source(rng))
        snr = sample_snr(cfg.snr_train, rng, size=len(batch))
        with GradientTape() as tape:
            loss = objective(system, batch, snr, cfg.channel, rng)
        loss_val = _check(stage, step, loss.item())
        backward(tape, loss, plist)
        opt.step()
        if log is not None:
            log.add(stage, loss_val, float(np.mean(snr)))
    final = _heldout(system, heldout, cfg, seed, objective) if heldout else loss_val
    _check(stage, steps, final)
    logger.debug("%s stage: %d steps, held-out %.4g -> %.4g", stage, steps, initial, final)
    return StageResult(stage, initial, final, steps)


def train_channel_stage(
    system: SemComSystem,
    source: BatchSource,
    cfg: TrainConfig,
    rng: np.random.Generator,
    *,
    log: TrainLog | None = None,
    heldout: Sequence[Sequence[int]] | None = None,
    seed: int = 0,
    steps: int | None = None,
) -> StageResult:
    """Fit channel codec + gates; semantic parameters are untouched."""
    steps = cfg.channel_steps if steps is None else steps
    return _run_stage(
        "channel", system, system.channel_parameters(), channel_objective, source, cfg, steps, rng, log, heldout, seed
    )


def train_semantic_stage(
    system: SemComSystem,
    source: BatchSource,
    cfg: TrainConfig,
    rng: np.random.Generator,
    *,
    log: TrainLog | None = None,
    heldout: Sequence[Sequence[int]] | None = None,
    seed: int = 0,
    steps: int | None = None,
) -> StageResult:
    """Fit semantic codec + gates on cross-entropy; channel parameters stay frozen."""
    steps = cfg.semantic_steps if steps is None else steps
    return _run_stage(
        "semantic",
        system,
        system.semantic_parameters(),
        _semantic_objective,
        source,
        cfg,
        steps,
        rng,
        log,
        heldout,
        seed,
    )


def validation_ce(system: SemComSystem, seqs: Sequence[Sequence[int]], cfg: TrainConfig, seed: int) -> float:
    """Cross-entropy on a fixed validation set with a fixed noise draw."""
    return _heldout(system, seqs, cfg, seed, _semantic_objective)


def crossover_train(
    system: SemComSystem,
    source: BatchSource,
    val_seqs: Sequence[Sequence[int]],
    cfg: TrainConfig,
    seed: int,
    *,
    log: TrainLog | None = None,
    round_offset: int = 0,
) -> CrossoverResult:
    """Alternate channel and semantic stages; keep the best validation round.

    Stops when the relative validation improvement of a round drops below
    ``cfg.tol`` or a round fails to improve (that round is rolled back).
    """
    best = math.inf
    best_state = None
    rounds: list[RoundMetrics] = []
    converged = False
    for r in range(cfg.rounds):
        tag = round_offset + r
        c = train_channel_stage(
            system, source, cfg, rngs.stream(seed, rngs.DATA, tag, 0), log=log, heldout=val_seqs, seed=seed
        )
        s = train_semantic_stage(
            system, source, cfg, rngs.stream(seed, rngs.DATA, tag, 1), log=log, heldout=val_seqs, seed=seed
        )
        val = validation_ce(system, val_seqs, cfg, seed)
        accepted = val < best
        improvement = (best - val) / best if math.isfinite(best) else math.inf
        rounds.append(RoundMetrics(r, c, s, val, accepted))
        if accepted:
            best = val
            best_state = system.state_dict()
        else:
            system.load_state_dict(best_state)
            converged = True
            break
        if improvement < cfg.tol:
            converged = True
            break
    if not converged:
        logger.warning("crossover training hit the round cap (%d) without converging", cfg.rounds)
    return CrossoverResult(rounds, converged, best)
