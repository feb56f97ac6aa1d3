"""Experiment configuration: sectioned key/value files parsed with configparser.

Every recognized key is declared once in :data:`KEYS`; parsing, defaults,
validation and the generated key reference all derive from that table.
Unknown sections or keys are rejected. Only the output directory and the
remote backend URL may be overridden from the environment.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from ..channel import KINDS, SnrDistribution
from ..codecs.arch import PRESETS, ArchConfig, preset
from ..codecs.training import TrainConfig
from ..errors import ConfigError
from ..kb_bridge.datasets import FIXTURE_SIZES

ENV_OUTPUT = "SEMCOMM_OUTPUT_DIR"
ENV_BACKEND_URL = "SEMCOMM_BACKEND_URL"


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _words(text: str) -> tuple[str, ...]:
    return tuple(text.replace(",", " ").split())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


def _opt_str(text: str) -> str | None:
    return text.strip() or None


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    default: str
    parse: Callable[[str], Any]
    doc: str


KEYS: list[Key] = [
    Key("run", "seed", "0", int, "Base seed; every random stream is derived from it."),
    Key("architecture", "preset", "toy", str, f"Architecture preset: {', '.join(sorted(PRESETS))}."),
    Key("architecture", "dim", "", _opt_int, "Override feature dimension."),
    Key("architecture", "heads", "", _opt_int, "Override attention head count."),
    Key("architecture", "layers", "", _opt_int, "Override encoder/decoder layer count."),
    Key("architecture", "ff_dim", "", _opt_int, "Override transformer feed-forward width."),
    Key("architecture", "channel_widths", "", _opt_str, "Override channel-encoder widths, e.g. '64 16'."),
    Key("architecture", "max_len", "", _opt_int, "Override maximum token sequence length."),
    Key("channel", "kind", "awgn", str, "Channel used for training and the SNR sweep: awgn or rayleigh."),
    Key("channel", "snr_train", "uniform 0 10", SnrDistribution.parse, "Training SNR: 'fixed V' or 'uniform LO HI' (dB)."),
    Key("channel", "snr_test", "0 1 2 3 4 5 6 7 8 9 10", _floats, "Test SNR points (dB) for the sweep."),
    Key("training", "batch_size", "32", int, "Minibatch size."),
    Key("training", "lr", "0.003", float, "Adam learning rate."),
    Key("training", "channel_steps", "50", int, "Optimizer steps per channel stage."),
    Key("training", "semantic_steps", "150", int, "Optimizer steps per semantic stage."),
    Key("training", "rounds", "3", int, "Crossover round cap."),
    Key("training", "tol", "0.001", float, "Relative validation-CE improvement below which crossover stops."),
    Key("med", "n_stm_max", "500", int, "Short-term memory capacity; reaching it triggers consolidation."),
    Key("med", "tau", "10", float, "RBF kernel scale."),
    Key("med", "lam", "0.05", float, "Transfer threshold on mean similarity."),
    Key("med", "direction", "similar", str, "'similar' transfers R > lam; 'diverse' transfers R < lam."),
    Key("med", "mix_ratio", "0.5", float, "Fraction of each replay batch drawn from long-term memory."),
    Key("med", "ltm_cap", "", _opt_int, "Optional long-term memory cap (uniform eviction); empty = unbounded."),
    Key("med", "fresh_per_step", "8", int, "Fresh samples pushed into short-term memory per training step."),
    Key("med", "eval_snr", "10", float, "Test SNR (dB) for the continual-learning map."),
    Key("med", "channel", "rayleigh", str, "Channel used by the continual experiment."),
    Key("med", "seeds", "3", int, "Number of seeds for the continual experiment."),
    Key("datasets", "sequence", "toy-cifar toy-birds toy-catsdogs", _words, "Dataset order for continual learning."),
    Key("datasets", "eval", "toy-cifar", str, "Dataset used for training and evaluation in train/sweep/pipeline."),
    Key("sweep", "variants", "nam-uniform fixed-1 fixed-4 fixed-7 fixed-10", _words, "Variants for the SNR sweep."),
    Key("sweep", "seeds", "5", int, "Seeds per variant (stddev uses n - 1)."),
    Key("output", "dir", "runs/default", str, f"Output directory (env {ENV_OUTPUT} overrides)."),
    Key("backend", "kind", "mock", str, "Knowledge-base backend: mock or remote."),
    Key("backend", "url", "", str, f"Remote backend base URL (env {ENV_BACKEND_URL} overrides)."),
    Key("backend", "timeout", "10", float, "Remote request timeout in seconds."),
    Key("backend", "retries", "2", int, "Extra attempts after a failed remote request."),
    Key("backend", "caption_seed", "0", int, "Seed for the mock captioner phrase choice."),
    Key("backend", "generate_steps", "20", int, "Diffusion steps requested from a remote generator."),
]

SECTIONS = tuple(dict.fromkeys(k.section for k in KEYS))
_BY_ID = {(k.section, k.name): k for k in KEYS}


@dataclass(frozen=True)
class MedConfig:
    n_stm_max: int = 500
    tau: float = 10.0
    lam: float = 0.05
    direction: str = "similar"
    mix_ratio: float = 0.5
    ltm_cap: int | None = None
    fresh_per_step: int = 8
    eval_snr: float = 10.0
    channel: str = "rayleigh"
    seeds: int = 3


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    url: str = ""
    timeout: float = 10.0
    retries: int = 2
    caption_seed: int = 0
    generate_steps: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    arch_preset: str = "toy"
    arch: ArchConfig = field(default_factory=ArchConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    snr_test: tuple[float, ...] = tuple(float(x) for x in range(11))
    med: MedConfig = field(default_factory=MedConfig)
    sequence: tuple[str, ...] = ("toy-cifar", "toy-birds", "toy-catsdogs")
    eval_dataset: str = "toy-cifar"
    variants: tuple[str, ...] = ("nam-uniform", "fixed-1", "fixed-4", "fixed-7", "fixed-10")
    sweep_seeds: int = 5
    output_dir: str = "runs/default"
    backend: BackendConfig = field(default_factory=BackendConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"]["snr_train"] = str(self.train.snr_train)
        return d

    def hash(self) -> str:
        """Digest of every setting that affects results (the output path does not)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)


def variant_spec(name: str) -> tuple[SnrDistribution | None, bool]:
    """``nam-uniform`` -> (None, True) meaning the configured training range with NAMs;
    ``fixed-V`` -> (fixed V, False) meaning a NAM-free model trained at V dB."""
    if name == "nam-uniform":
        return None, True
    if name.startswith("fixed-"):
        try:
            return SnrDistribution.fixed(float(name[len("fixed-") :])), False
        except ValueError:
            pass
    raise ConfigError(f"unknown sweep variant {name!r}; use 'nam-uniform' or 'fixed-<dB>'")


def _arch(values: dict) -> ArchConfig:
    overrides = {}
    for k in ("dim", "heads", "layers", "ff_dim", "max_len"):
        if values[k] is not None:
            overrides[k] = values[k]
    if values["channel_widths"] is not None:
        overrides["channel_widths"] = _ints(values["channel_widths"])
    return preset(values["preset"], **overrides)


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.train.channel not in KINDS or cfg.med.channel not in KINDS:
        raise ConfigError(f"channel kind must be one of {KINDS}")
    if cfg.med.direction not in ("similar", "diverse"):
        raise ConfigError(f"med.direction must be 'similar' or 'diverse', got {cfg.med.direction!r}")
    if not 0.0 <= cfg.med.mix_ratio <= 1.0:
        raise ConfigError("med.mix_ratio must lie in [0, 1]")
    if not 0.0 <= cfg.med.lam <= 1.0 or cfg.med.tau <= 0 or cfg.med.n_stm_max < 1:
        raise ConfigError("med requires tau > 0, lam in [0, 1], n_stm_max >= 1")
    if cfg.backend.kind not in ("mock", "remote"):
        raise ConfigError(f"backend.kind must be 'mock' or 'remote', got {cfg.backend.kind!r}")
    if cfg.backend.kind == "remote" and not cfg.backend.url:
        raise ConfigError(f"remote backend needs backend.url or {ENV_BACKEND_URL}")
    if cfg.sweep_seeds < 2:
        raise ConfigError("sweep.seeds must be >= 2 for a standard deviation")
    if min(cfg.train.batch_size, cfg.train.channel_steps, cfg.train.semantic_steps, cfg.train.rounds) < 1:
        raise ConfigError("training sizes must be positive")
    for v in cfg.variants:
        variant_spec(v)
    for name in (*cfg.sequence, cfg.eval_dataset):
        if name.removeprefix("fixture:") not in FIXTURE_SIZES and not Path(name).is_dir():
            raise ConfigError(f"dataset {name!r} is neither a fixture nor a directory")
    if not cfg.snr_test:
        raise ConfigError("channel.snr_test must list at least one SNR point")


def from_mapping(raw: dict[str, dict[str, str]], env: dict[str, str] | None = None) -> ExperimentConfig:
    """Build a config from ``{section: {key: text}}``; missing keys take defaults."""
    env = os.environ if env is None else env
    for section, items in raw.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section [{section}]; known: {', '.join(SECTIONS)}")
        for k in items:
            if (section, k) not in _BY_ID:
                raise ConfigError(f"unknown config key '{k}' in [{section}]")
    v: dict[tuple[str, str], Any] = {}
    for key in KEYS:
        text = raw.get(key.section, {}).get(key.name, key.default)
        try:
            v[(key.section, key.name)] = key.parse(text)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"invalid value for [{key.section}] {key.name} = {text!r}: {exc}") from None
    sec = lambda s: {name: v[(s, name)] for (ss, name) in v if ss == s}  # noqa: E731
    arch_values = sec("architecture")
    train = TrainConfig(
        snr_train=v[("channel", "snr_train")],
        channel=v[("channel", "kind")],
        **sec("training"),
    )
    backend = BackendConfig(**sec("backend"))
    if env.get(ENV_BACKEND_URL):
        backend = replace(backend, url=env[ENV_BACKEND_URL])
    output = env.get(ENV_OUTPUT) or v[("output", "dir")]
    cfg = ExperimentConfig(
        seed=v[("run", "seed")],
        arch_preset=arch_values["preset"],
        arch=_arch(arch_values),
        train=train,
        snr_test=v[("channel", "snr_test")],
        med=MedConfig(**sec("med")),
        sequence=v[("datasets", "sequence")],
        eval_dataset=v[("datasets", "eval")],
        variants=v[("sweep", "variants")],
        sweep_seeds=v[("sweep", "seeds")],
        output_dir=output,
        backend=backend,
    )
    _validate(cfg)
    return cfg


def load_config(path: str | Path | None, overrides: dict[str, dict[str, str]] | None = None, env=None) -> ExperimentConfig:
    raw: dict[str, dict[str, str]] = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p.resolve()}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(p)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from None
        raw = {s: dict(parser[s]) for s in parser.sections()}
    for section, items in (overrides or {}).items():
        raw.setdefault(section, {}).update(items)
    return from_mapping(raw, env)


def reference_markdown() -> str:
    """Generated documentation of every config key."""
    lines = ["# Configuration reference", ""]
    lines.append(f"Environment overrides: `{ENV_OUTPUT}` replaces `[output] dir`; `{ENV_BACKEND_URL}` replaces `[backend] url`.")
    for section in SECTIONS:
        lines += ["", f"## [{section}]", "", "| key | default | description |", "|---|---|---|"]
        for k in KEYS:
            if k.section == section:
                default = f"`{k.default}`" if k.default else "(unset)"
                lines.append(f"| `{k.name}` | {default} | {k.doc} |")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    print(reference_markdown(), end="")
