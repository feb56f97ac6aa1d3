"""BLEU versus test SNR for SNR-adaptive and fixed-SNR-trained variants.

Every variant is trained under ``sweep_seeds`` seeds. For seed ``k`` and test
SNR index ``j`` all variants see the same eval sentences and the same channel
noise stream, so differences between rows are paired.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..codecs import SemComSystem, Vocab
from ..codecs.training import TrainLog
from ..metrics import BLEU_RUN_HEADER
from ..numerics import rng as rngs
from .config import ExperimentConfig, variant_spec
from .manifest import RunManifest
from .runtime import Corpus, decode_bleu, train_variant

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    variant: str
    mean: float
    stddev: float
    n: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    missing: list[str] = field(default_factory=list)

    def cell(self, variant: str, snr_db: float) -> SweepRow:
        for r in self.rows:
            if r.variant == variant and r.snr_db == snr_db:
                return r
        raise KeyError((variant, snr_db))


def seed_list(cfg: ExperimentConfig) -> list[int]:
    return [cfg.seed + k for k in range(cfg.sweep_seeds)]


def checkpoint_name(variant: str, seed: int) -> str:
    return f"{variant}-seed{seed}.ckpt"


def train_sweep_variants(
    cfg: ExperimentConfig, vocab: Vocab, corpus: Corpus, ckpt_dir: Path, manifest: RunManifest | None = None
) -> list[Path]:
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for variant in cfg.variants:
        for seed in seed_list(cfg):
            log = TrainLog()
            system, result = train_variant(cfg, vocab, corpus.seqs, variant, seed, log)
            path = ckpt_dir / checkpoint_name(variant, seed)
            system.save(path)
            curve = ckpt_dir / f"{variant}-seed{seed}.curve.csv"
            log.write_csv(curve)
            written.append(path)
            logger.info("trained %s seed %d: best val CE %.4f", variant, seed, result.best_val_ce)
            if manifest is not None:
                manifest.add("checkpoints", path)
                manifest.add("curves", curve)
    return written


def evaluate_sweep(
    cfg: ExperimentConfig, vocab: Vocab, corpus: Corpus, ckpt_dir: Path
) -> SweepResult:
    """Mean and sample stddev (n - 1) over seeds of the per-seed mean BLEU."""
    rows: list[SweepRow] = []
    missing: list[str] = []
    for variant in cfg.variants:
        _, use_nam = variant_spec(variant)
        arch = replace(cfg.arch, use_nam=use_nam)
        per_seed: list[list[float]] = []
        for seed in seed_list(cfg):
            path = ckpt_dir / checkpoint_name(variant, seed)
            if not path.is_file():
                missing.append(str(path))
                logger.warning("missing checkpoint %s; skipped", path)
                continue
            system = SemComSystem(vocab, arch, seed=seed)
            system.load(path)
            scores = []
            for j, snr in enumerate(cfg.snr_test):
                rng = rngs.stream(seed, rngs.EVAL, 0x5EE9, j)
                scores.append(decode_bleu(system, corpus.seqs, snr, cfg.train.channel, rng)[0])
            per_seed.append(scores)
        if not per_seed:
            continue
        arr = np.asarray(per_seed)
        n = arr.shape[0]
        for j, snr in enumerate(cfg.snr_test):
            col = arr[:, j]
            std = float(np.std(col, ddof=1)) if n > 1 else math.nan
            rows.append(SweepRow(float(snr), variant, float(np.mean(col)), std, n))
    return SweepResult(rows, missing)


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BLEU_RUN_HEADER)
        for r in result.rows:
            w.writerow([repr(r.snr_db), r.variant, repr(r.mean), repr(r.stddev), r.n])


def read_sweep_csv(path: str | Path) -> SweepResult:
    with open(path, newline="") as fh:
        rows = [
            SweepRow(float(d["snr_db"]), d["variant"], float(d["mean"]), float(d["stddev"]), int(d["n"]))
            for d in csv.DictReader(fh)
        ]
    return SweepResult(rows)


def snr_sweep(
    cfg: ExperimentConfig,
    vocab: Vocab,
    corpus: Corpus,
    out_dir: str | Path,
    manifest: RunManifest | None = None,
    checkpoints: str | Path | None = None,
) -> SweepResult:
    """Train (unless ``checkpoints`` points at existing ones), evaluate, write ``bleu_vs_snr.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if checkpoints is None:
        ckpt_dir = out / "checkpoints"
        train_sweep_variants(cfg, vocab, corpus, ckpt_dir, manifest)
    else:
        ckpt_dir = Path(checkpoints)
    result = evaluate_sweep(cfg, vocab, corpus, ckpt_dir)
    path = out / "bleu_vs_snr.csv"
    write_sweep_csv(result, path)
    if manifest is not None:
        manifest.add("metrics", path)
        manifest.notes["missing_checkpoints"] = result.missing
    return result
