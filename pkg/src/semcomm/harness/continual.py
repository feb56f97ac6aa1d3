"""Sequential training over shifting datasets, with and without replay memory.

Both arms run the identical schedule and optimizer. At every step a handful of
fresh samples from the current dataset enter the short-term memory and the
training batch is drawn from the pool; the ablation arm never consults the
long-term memory. After each dataset stage BLEU is measured on every dataset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..codecs import SemComSystem, Vocab
from ..codecs.training import TrainLog, train_channel_stage, train_semantic_stage
from ..errors import EmptyBatchError
from ..med import MemoryPool, MemorySample
from ..metrics import VARIANTS, EvalMatrix, bleu, continual_map, write_continual_csv
from ..numerics import checkpoint, no_tape
from ..numerics import rng as rngs
from .config import ExperimentConfig
from .manifest import RunManifest
from .runtime import Corpus, validation_subset

logger = logging.getLogger(__name__)

FEATURE_SNR_DB = 10.0


@dataclass
class ArmResult:
    """Per-BLEU-variant maps for one arm (``med`` or ``no-med``) and one seed."""

    arm: str
    seed: int
    maps: dict[str, EvalMatrix]
    memory: dict = field(default_factory=dict)
    pool: MemoryPool | None = field(default=None, repr=False)


@dataclass
class ContinualResult:
    datasets: list[str]
    arms: list[ArmResult]

    def mean_map(self, arm: str, variant: str = "bleu1") -> EvalMatrix:
        mats = [a.maps[variant] for a in self.arms if a.arm == arm]
        k = len(self.datasets)
        values = [[float(np.mean([m.values[i][j] for m in mats])) for j in range(k)] for i in range(k)]
        return EvalMatrix(list(self.datasets), values)

    def forgetting(self, arm: str, variant: str = "bleu1", seed: int | None = None) -> float:
        """Drop on the first dataset between its own stage and the final stage."""
        if seed is None:
            m = self.mean_map(arm, variant)
        else:
            m = next(a.maps[variant] for a in self.arms if a.arm == arm and a.seed == seed)
        return m.values[0][0] - m.values[-1][0]


class ReplayFeed:
    """Batch source that streams fresh samples into the pool and draws replay batches."""

    def __init__(self, system: SemComSystem, pool: MemoryPool, corpus: Corpus, fresh: int, batch: int, mix: float, use_ltm: bool):
        self.system = system
        self.pool = pool
        self.corpus = corpus
        self.fresh = fresh
        self.batch = batch
        self.mix = mix
        self.use_ltm = use_ltm
        self.step = 0
        self._order: list[int] = []

    def _next(self, rng: np.random.Generator) -> list[int]:
        out = []
        while len(out) < self.fresh:
            if not self._order:
                self._order = list(rng.permutation(len(self.corpus.seqs)))
            out.append(self._order.pop())
        return out

    def __call__(self, rng: np.random.Generator):
        idx = self._next(rng)
        seqs = [self.corpus.seqs[i] for i in idx]
        version = encoder_version(self.system)
        feats = sentence_features(self.system, seqs)
        for s, f in zip(seqs, feats):
            self.pool.push_stm(MemorySample(s, f, self.corpus.name, self.step, version))
        self.step += 1
        try:
            drawn = self.pool.replay_batch(self.batch, self.mix, rng, use_ltm=self.use_ltm)
        except EmptyBatchError:
            # the STM was just consolidated and the LTM is off limits: train on this step's fresh samples
            return [list(seqs[i]) for i in rng.integers(0, len(seqs), size=self.batch)]
        return [list(s.tokens) for s in drawn]


def sentence_features(system: SemComSystem, seqs) -> np.ndarray:
    with no_tape():
        return system.sentence_features(seqs, FEATURE_SNR_DB)


def encoder_version(system: SemComSystem) -> str:
    enc = {k: v.data for k, v in system.semantic.encoder.named_parameters()}
    return checkpoint.digest(enc)


def evaluate_all(system, corpora: list[Corpus], cfg: ExperimentConfig, seed: int, stage: int) -> dict[str, list[float]]:
    """BLEU of every dataset for every BLEU variant, with a fixed noise draw per (stage, dataset)."""
    out: dict[str, list[float]] = {v: [] for v in VARIANTS}
    for j, corpus in enumerate(corpora):
        rng = rngs.stream(seed, rngs.EVAL, 0xC0, stage, j)
        with no_tape():
            dec = system.transmit_sentences(corpus.seqs, cfg.med.eval_snr, cfg.med.channel, rng)
        for name, bcfg in VARIANTS.items():
            out[name].append(float(np.mean([bleu(s, o, bcfg) for s, o in zip(corpus.seqs, dec)])))
    return out


def run_arm(
    cfg: ExperimentConfig,
    vocab: Vocab,
    corpora: list[Corpus],
    seed: int,
    use_med: bool,
    log: TrainLog | None = None,
) -> ArmResult:
    system = SemComSystem(vocab, cfg.arch, seed=seed)
    m = cfg.med
    pool = MemoryPool(m.n_stm_max, m.tau, m.lam, m.direction, m.ltm_cap, seed=seed)
    pool.featurizer = lambda seqs: sentence_features(system, seqs)
    pool.version_fn = lambda: encoder_version(system)
    train = replace(cfg.train, channel=m.channel)
    names = [c.name for c in corpora]
    cells = {v: {} for v in VARIANTS}
    for i, corpus in enumerate(corpora):
        feed = ReplayFeed(system, pool, corpus, m.fresh_per_step, train.batch_size, m.mix_ratio, use_ltm=use_med)
        held = validation_subset(corpus.seqs, seed)
        for r in range(train.rounds):
            data_rng = rngs.stream(seed, rngs.REPLAY, i, r)
            train_channel_stage(system, feed, train, data_rng, log=log, heldout=held, seed=seed)
            train_semantic_stage(system, feed, train, data_rng, log=log, heldout=held, seed=seed)
        scores = evaluate_all(system, corpora, cfg, seed, i)
        for v, row in scores.items():
            for j, name in enumerate(names):
                cells[v][(names[i], name)] = row[j]
        logger.info("%s seed %d after %s: %s", "med" if use_med else "no-med", seed, corpus.name, scores["bleu1"])
    maps = {v: continual_map(names, cells[v]) for v in VARIANTS}
    return ArmResult("med" if use_med else "no-med", seed, maps, pool.summary(), pool)


def continual_experiment(
    cfg: ExperimentConfig,
    vocab: Vocab,
    corpora: dict[str, Corpus],
    out_dir: str | Path | None = None,
    manifest: RunManifest | None = None,
) -> ContinualResult:
    seq = [corpora[n] for n in cfg.sequence]
    arms = []
    for k in range(cfg.med.seeds):
        seed = cfg.seed + k
        for use_med in (True, False):
            arms.append(run_arm(cfg, vocab, seq, seed, use_med))
    result = ContinualResult([c.name for c in seq], arms)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for a in arms:
            path = out / f"continual_{a.arm}_seed{a.seed}.csv"
            write_continual_csv(path, {f"{a.arm}-{v}": mat for v, mat in a.maps.items()})
            snap = out / f"memory_{a.arm}_seed{a.seed}.json"
            a.pool.save(snap)
            if manifest is not None:
                manifest.add("metrics", path)
                manifest.add("memory", snap)
        path = out / "continual_map.csv"
        write_continual_csv(
            path, {f"{arm}-{v}": result.mean_map(arm, v) for arm in ("med", "no-med") for v in VARIANTS}
        )
        if manifest is not None:
            manifest.add("metrics", path)
            manifest.notes["memory"] = {f"{a.arm}-seed{a.seed}": a.memory for a in arms}
            manifest.notes["forgetting_bleu1"] = {arm: result.forgetting(arm) for arm in ("med", "no-med")}
    return result
