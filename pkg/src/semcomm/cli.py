"""Command-line entry point.

Every subcommand reads a config file (``--config``) plus ``--set
section.key=value`` overrides, writes its outputs and a ``manifest.json`` to
the output directory, and reports failures as one JSON line on stderr.
Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .codecs import SemComSystem, Vocab
from .codecs.arch import ArchConfig
from .codecs.training import TrainLog
from .errors import ConfigError, SemcommError
from .harness import continual as cont
from .harness import sweep as sw
from .harness.config import ExperimentConfig, load_config, variant_spec
from .harness.manifest import RunManifest
from .harness.pipeline import run_pipeline
from .harness.plotting import write_plot_script
from .harness.runtime import build_corpora, make_backends, train_variant
from .kb_bridge import load_dataset
from .med import MemoryPool
from .metrics import BLEU1, bleu, label_accuracy, ssq
from .numerics import rng as rngs

logger = logging.getLogger("semcomm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def _overrides(pairs: Sequence[str]) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot or not section or not name:
            raise UsageError(f"--set expects section.key=value, got {pair!r}")
        out.setdefault(section, {})[name] = value
    return out


def _config(args) -> ExperimentConfig:
    over = _overrides(args.set)
    if args.seed is not None:
        over.setdefault("run", {})["seed"] = str(args.seed)
    if args.out is not None:
        over.setdefault("output", {})["dir"] = args.out
    return load_config(args.config, over)


def _manifest(cmd: str, cfg: ExperimentConfig) -> RunManifest:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return RunManifest(cmd, cfg.hash(), cfg.to_dict(), str(out))


# -- model directories ---------------------------------------------------------------


def save_model(out: Path, system: SemComSystem, variant: str, manifest: RunManifest) -> None:
    system.save(manifest.add("checkpoints", out / "model.ckpt"))
    manifest.add("model", out / "vocab.json").write_text(system.vocab.to_json())
    meta = {"variant": variant, "arch": {**system.arch.__dict__, "channel_widths": list(system.arch.channel_widths)}}
    manifest.add("model", out / "model.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def load_model(directory: str | Path) -> SemComSystem:
    root = Path(directory)
    for name in ("model.ckpt", "vocab.json", "model.json"):
        if not (root / name).is_file():
            raise ConfigError(f"model directory {root.resolve()} lacks {name}")
    meta = json.loads((root / "model.json").read_text())
    a = meta["arch"]
    nam_hidden = tuple(a["nam_hidden"]) if a.get("nam_hidden") else None
    arch = ArchConfig(**{**a, "channel_widths": tuple(a["channel_widths"]), "nam_hidden": nam_hidden})
    system = SemComSystem(Vocab.from_json((root / "vocab.json").read_text()), arch)
    system.load(root / "model.ckpt")
    return system


# -- subcommands ---------------------------------------------------------------------


def cmd_train(args, cfg: ExperimentConfig) -> dict:
    m = _manifest("train", cfg)
    out = Path(cfg.output_dir)
    cap, _ = make_backends(cfg)
    vocab, corpora = build_corpora(cfg, cap)
    log = TrainLog()
    variant_spec(args.variant)
    system, result = train_variant(cfg, vocab, corpora[cfg.eval_dataset].seqs, args.variant, cfg.seed, log)
    save_model(out, system, args.variant, m)
    log.write_csv(m.add("curves", out / "train_curve.csv"))
    with open(m.add("metrics", out / "rounds.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "channel_loss", "semantic_loss", "val_ce", "accepted"])
        for r in result.rounds:
            w.writerow([r.round, repr(r.channel.final_loss), repr(r.semantic.final_loss), repr(r.val_ce), r.accepted])
    m.exercise("channel-mse-surrogate", "greedy-decoding")
    if system.arch.use_nam:
        m.exercise("nam-elementwise")
    if cfg.train.channel == "rayleigh":
        m.exercise("perfect-csi")
    m.notes.update(converged=result.converged, best_val_ce=result.best_val_ce, rounds=len(result.rounds))
    m.finish()
    return {"checkpoint": str(out / "model.ckpt"), "converged": result.converged, "best_val_ce": result.best_val_ce}


def cmd_pipeline(args, cfg: ExperimentConfig) -> dict:
    out = Path(cfg.output_dir)
    m = _manifest("pipeline", cfg)
    cap, rec = make_backends(cfg)
    if args.model:
        system = load_model(args.model)
        m.notes["model"] = str(Path(args.model).resolve())
    else:
        vocab, corpora = build_corpora(cfg, cap)
        system, _ = train_variant(cfg, vocab, corpora[cfg.eval_dataset].seqs, "nam-uniform", cfg.seed)
        save_model(out, system, "nam-uniform", m)
        m.exercise("channel-mse-surrogate", "nam-elementwise")
    records = load_dataset(cfg.eval_dataset)
    if args.limit:
        records = records[: args.limit]
    kind = args.channel or cfg.train.channel
    rng = rngs.stream(cfg.seed, rngs.NOISE, 0x919E)
    recovered, rows = [], []
    for img in records:
        out_img, trace = run_pipeline(img, args.snr, system, cap, rec, kind, rng)
        recovered.append(out_img)
        score = bleu(trace.tokens, trace.recovered, BLEU1)
        rows.append([img.id, img.label, repr(args.snr), trace.text, trace.recovered_text, out_img.label, repr(score),
                     int(trace.tokens == trace.recovered)])
    with open(m.add("metrics", out / "pipeline.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "snr_db", "source", "recovered", "recovered_label", "bleu1", "exact"])
        w.writerows(rows)
    quality = ssq(label_accuracy, records, recovered)
    exact = sum(r[-1] for r in rows) / len(rows)
    m.exercise("greedy-decoding", "bleu-inverted-brevity", "bleu-candidate-denominator")
    if kind == "rayleigh":
        m.exercise("perfect-csi")
    m.notes.update(ssq=quality, exact_rate=exact, channel=kind, snr_db=args.snr)
    m.finish()
    return {"ssq": quality, "exact_rate": exact, "n": len(rows)}


def cmd_sweep(args, cfg: ExperimentConfig) -> dict:
    out = Path(cfg.output_dir)
    m = _manifest("sweep-snr", cfg)
    cap, _ = make_backends(cfg)
    vocab, corpora = build_corpora(cfg, cap)
    result = sw.snr_sweep(cfg, vocab, corpora[cfg.eval_dataset], out, m, args.checkpoints)
    m.add("scripts", write_plot_script(out, "sweep"))
    m.exercise("channel-mse-surrogate", "nam-elementwise", "greedy-decoding", "bleu-inverted-brevity",
               "bleu-candidate-denominator")
    m.finish()
    return {"csv": str(out / "bleu_vs_snr.csv"), "rows": len(result.rows), "missing": result.missing}


def cmd_continual(args, cfg: ExperimentConfig) -> dict:
    out = Path(cfg.output_dir)
    m = _manifest("continual-map", cfg)
    cap, _ = make_backends(cfg)
    vocab, corpora = build_corpora(cfg, cap)
    cont.continual_experiment(cfg, vocab, corpora, out, m)
    m.add("scripts", write_plot_script(out, "continual"))
    m.exercise("channel-mse-surrogate", "nam-elementwise", "greedy-decoding", "bleu-inverted-brevity",
               "bleu-candidate-denominator", "med-distance-expansion", "med-cold-start", "med-encoder-refresh",
               "perfect-csi")
    m.finish()
    return {"csv": str(out / "continual_map.csv"), "forgetting_bleu1": m.notes["forgetting_bleu1"]}


def cmd_inspect(args, cfg: ExperimentConfig | None) -> dict:
    path = Path(args.snapshot)
    if not path.is_file():
        raise ConfigError(f"memory snapshot not found: {path.resolve()}")
    return MemoryPool.load(path).summary()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semcomm", description="Semantic communication simulator")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="config file (sectioned key = value)")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--out", help="override [output] dir")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config key")

    p = sub.add_parser("train", help="train one system on the eval dataset")
    common(p)
    p.add_argument("--variant", default="nam-uniform", help="nam-uniform or fixed-<dB>")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pipeline", help="run images through the full link and score them")
    common(p)
    p.add_argument("--model", help="directory written by 'train' (trains a fresh model if omitted)")
    p.add_argument("--snr", type=float, default=10.0, help="test SNR in dB")
    p.add_argument("--channel", choices=("awgn", "rayleigh"))
    p.add_argument("--limit", type=int, default=0, help="only the first N images")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep-snr", help="BLEU vs test SNR per trained variant")
    common(p)
    p.add_argument("--checkpoints", help="evaluate existing checkpoints from this directory instead of training")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("continual-map", help="sequential training with and without replay memory")
    common(p)
    p.set_defaults(func=cmd_continual)

    p = sub.add_parser("inspect-memory", help="summarize a saved memory snapshot")
    p.add_argument("snapshot")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        cfg = None if args.func is cmd_inspect else _config(args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return 2
    except ConfigError as exc:
        _emit_error("config", str(exc))
        return 2
    try:
        summary = args.func(args, cfg)
    except ConfigError as exc:
        _emit_error("config", str(exc))
        return 2
    except SemcommError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1
    except OSError as exc:
        _emit_error("io", str(exc))
        return 1
    print(json.dumps(summary, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
