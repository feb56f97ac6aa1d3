"""Text- and task-level scores.

BLEU here follows the log form

    log BLEU = min(1 - len(candidate) / len(reference), 0) + sum_n u_n log p_n

with ``p_n`` the clipped n-gram precision over candidate n-grams. Orders
longer than both sentences are left out of the sum. This
length term penalizes candidates *longer* than the reference;
``brevity="standard"`` switches to the usual short-candidate penalty.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Literal, Mapping, Sequence

from .errors import ContractError

HOLE = "NA"


@dataclass(frozen=True)
class BleuConfig:
    weights: tuple[float, ...] = (1.0, 0.0)
    brevity: Literal["inverted", "standard"] = "inverted"

    def __post_init__(self):
        if not self.weights:
            raise ValueError("BLEU needs at least one n-gram order")
        if any(w < 0 for w in self.weights):
            raise ValueError(f"BLEU weights must be non-negative: {self.weights}")
        if not math.isclose(sum(self.weights), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"BLEU weights must sum to 1: {self.weights}")
        if self.brevity not in ("inverted", "standard"):
            raise ValueError(f"unknown brevity rule {self.brevity!r}")

    @property
    def max_order(self) -> int:
        return len(self.weights)


BLEU1 = BleuConfig((1.0, 0.0))
BLEU2 = BleuConfig((0.5, 0.5))
VARIANTS: dict[str, BleuConfig] = {"bleu1": BLEU1, "bleu2": BLEU2}


@dataclass(frozen=True)
class BleuResult:
    score: float
    precisions: tuple[float, ...]
    degenerate: bool


def _ngrams(tokens: Sequence[Hashable], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def ngram_precision_detail(reference: Sequence, candidate: Sequence, n: int) -> tuple[float, bool]:
    """Clipped n-gram precision and whether the candidate was too short to have any n-grams."""
    if n < 1:
        raise ValueError("n-gram order must be >= 1")
    if not reference:
        raise ContractError("reference sequence must be non-empty")
    if len(candidate) < n:
        return 0.0, True
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    clipped = sum(min(c, ref[g]) for g, c in cand.items())
    return clipped / sum(cand.values()), False


def ngram_precision(reference: Sequence, candidate: Sequence, n: int) -> float:
    return ngram_precision_detail(reference, candidate, n)[0]


def bleu_detail(reference: Sequence, candidate: Sequence, cfg: BleuConfig = BLEU1) -> BleuResult:
    if not reference:
        raise ContractError("reference sequence must be non-empty")
    if not candidate:
        return BleuResult(0.0, tuple(0.0 for _ in cfg.weights), True)
    ls, lc = len(reference), len(candidate)
    precisions = []
    terms = []
    degenerate = False
    for n, w in enumerate(cfg.weights, start=1):
        p, short = ngram_precision_detail(reference, candidate, n)
        precisions.append(p)
        degenerate |= short and w > 0
        # an order neither sentence is long enough to contain carries no evidence either way
        if w > 0 and not (short and ls < n):
            terms.append((w, p))
    if any(p == 0.0 for _, p in terms):
        return BleuResult(0.0, tuple(precisions), degenerate)
    if cfg.brevity == "inverted":
        length_term = min(1.0 - lc / ls, 0.0)
    else:
        length_term = min(1.0 - ls / lc, 0.0)
    log_score = length_term + math.fsum(w * math.log(p) for w, p in terms)
    return BleuResult(math.exp(log_score), tuple(precisions), degenerate)


def bleu(reference: Sequence, candidate: Sequence, cfg: BleuConfig = BLEU1) -> float:
    """Sentence BLEU of ``candidate`` against a single ``reference``, in [0, 1]."""
    return bleu_detail(reference, candidate, cfg).score


# ---------------------------------------------------------------------------
# task quality

Task = Callable[[Sequence, Sequence[str]], float]


def label_accuracy(records: Sequence, truth: Sequence[str]) -> float:
    """Classification accuracy of records whose ``label`` is the prediction."""
    if not records:
        return 0.0
    return sum(r.label == t for r, t in zip(records, truth)) / len(records)


def ssq(task: Task, source: Sequence, recovered: Sequence, truth: Sequence[str] | None = None) -> float:
    """Task score on recovered items relative to the score on the source items.

    ``truth`` defaults to the source labels. Returns ``nan`` when the source
    score is zero (the ratio is undefined).
    """
    if len(source) != len(recovered):
        raise ContractError(f"source ({len(source)}) and recovered ({len(recovered)}) sets are not aligned")
    if truth is None:
        truth = [r.label for r in source]
    base = task(source, truth)
    if base == 0:
        return math.nan
    return task(recovered, truth) / base


def compression_ratio(original_bytes: int, symbol_count: int, bits_per_symbol: int) -> Fraction:
    """Transmitted payload bits over original payload bits (exact)."""
    if original_bytes <= 0:
        raise ContractError("original payload size must be positive")
    if symbol_count <= 0 or bits_per_symbol <= 0:
        raise ContractError("symbol count and bits per symbol must be positive")
    return Fraction(symbol_count * bits_per_symbol, original_bytes * 8)


# ---------------------------------------------------------------------------
# continual-learning map


@dataclass
class EvalMatrix:
    """``values[i][j]``: score on dataset j after training through dataset i (None = hole)."""

    datasets: list[str]
    values: list[list[float | None]]

    def __getitem__(self, ij: tuple[int, int]) -> float | None:
        i, j = ij
        return self.values[i][j]

    @property
    def diagonal(self) -> list[float | None]:
        return [self.values[i][i] for i in range(len(self.datasets))]


def continual_map(datasets: Sequence[str], results: Mapping[tuple[str, str], float]) -> EvalMatrix:
    """Assemble ``{(stage_dataset, eval_dataset): value}`` into a square matrix."""
    names = list(datasets)
    values = [[results.get((row, col)) for col in names] for row in names]
    return EvalMatrix(names, values)


CONTINUAL_HEADER = ["stage", "dataset", "variant", "value"]


def write_continual_csv(path, maps: Mapping[str, EvalMatrix]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONTINUAL_HEADER)
        for variant, m in maps.items():
            for i, stage in enumerate(m.datasets):
                for j, ds in enumerate(m.datasets):
                    v = m.values[i][j]
                    w.writerow([stage, ds, variant, HOLE if v is None else repr(float(v))])


def read_continual_csv(path) -> dict[str, EvalMatrix]:
    cells: dict[str, dict[tuple[str, str], float | None]] = {}
    order: dict[str, list[str]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            variant = row["variant"]
            cells.setdefault(variant, {})[(row["stage"], row["dataset"])] = (
                None if row["value"] == HOLE else float(row["value"])
            )
            names = order.setdefault(variant, [])
            if row["stage"] not in names:
                names.append(row["stage"])
    return {v: continual_map(order[v], cells[v]) for v in cells}


BLEU_RUN_HEADER = ["snr_db", "variant", "mean", "stddev", "n"]
