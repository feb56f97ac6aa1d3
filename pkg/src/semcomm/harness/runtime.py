"""Shared experiment plumbing: backends, corpora, training and BLEU evaluation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..codecs import SemComSystem, Vocab
from ..codecs.training import CrossoverResult, TrainLog, corpus_source, crossover_train
from ..kb_bridge import MockCaptioner, MockReconstructor, RemoteCaptioner, RemoteReconstructor, load_dataset
from ..kb_bridge.records import ImageRecord
from ..metrics import BLEU1, BleuConfig, bleu
from ..numerics import no_tape
from ..numerics import rng as rngs
from .config import ExperimentConfig, variant_spec

VALIDATION_SIZE = 40


def make_backends(cfg: ExperimentConfig):
    b = cfg.backend
    if b.kind == "remote":
        kw = {"timeout": b.timeout, "retries": b.retries}
        return RemoteCaptioner(b.url, **kw), RemoteReconstructor(b.url, seed=cfg.seed, steps=b.generate_steps, **kw)
    return MockCaptioner(b.caption_seed), MockReconstructor()


@dataclass
class Corpus:
    """Captioned dataset: records, caption texts and token sequences, aligned by index."""

    name: str
    records: list[ImageRecord]
    texts: list[str]
    seqs: list[list[int]]


def caption_texts(records: Sequence[ImageRecord], captioner) -> list[str]:
    return [captioner.caption(r).text for r in records]


def build_corpora(cfg: ExperimentConfig, captioner) -> tuple[Vocab, dict[str, Corpus]]:
    """Caption every configured dataset and build one shared vocabulary."""
    names = list(dict.fromkeys([*cfg.sequence, cfg.eval_dataset]))
    raw = {}
    for name in names:
        records = load_dataset(name)
        raw[name] = (records, caption_texts(records, captioner))
    vocab = Vocab.build(t for name in names for t in raw[name][1])
    corpora = {n: Corpus(n, r, t, [vocab.encode(x) for x in t]) for n, (r, t) in raw.items()}
    return vocab, corpora


def validation_subset(seqs: Sequence[Sequence[int]], seed: int) -> list[list[int]]:
    rng = rngs.stream(seed, rngs.EVAL, 0xA1)
    k = min(VALIDATION_SIZE, len(seqs))
    return [list(seqs[i]) for i in sorted(rng.choice(len(seqs), size=k, replace=False))]


def train_variant(
    cfg: ExperimentConfig,
    vocab: Vocab,
    seqs: Sequence[Sequence[int]],
    variant: str,
    seed: int,
    log: TrainLog | None = None,
) -> tuple[SemComSystem, CrossoverResult]:
    dist, use_nam = variant_spec(variant)
    arch = replace(cfg.arch, use_nam=use_nam)
    train = cfg.train if dist is None else replace(cfg.train, snr_train=dist)
    system = SemComSystem(vocab, arch, seed=seed)
    result = crossover_train(
        system, corpus_source(seqs, train.batch_size), validation_subset(seqs, seed), train, seed, log=log
    )
    return system, result


def decode_bleu(
    system: SemComSystem,
    seqs: Sequence[Sequence[int]],
    snr_db: float,
    kind: str,
    rng: np.random.Generator,
    cfg: BleuConfig = BLEU1,
) -> tuple[float, float]:
    """Mean sentence BLEU and exact-recovery rate of the full link at one SNR."""
    with no_tape():
        out = system.transmit_sentences(seqs, snr_db, kind, rng)
    scores = [bleu(s, o, cfg) for s, o in zip(seqs, out)]
    exact = [list(s) == o for s, o in zip(seqs, out)]
    return float(np.mean(scores)), float(np.mean(exact))
