"""Run manifests and the catalogue of documented design deviations."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import ContractError

MANIFEST_NAME = "manifest.json"

DEVIATIONS: dict[str, str] = {
    "channel-mse-surrogate": "channel stage minimizes feature MSE through the channel instead of a mutual-information objective",
    "nam-elementwise": "NAM gate K = sigmoid(e * v) taken elementwise; projection width equals the host width",
    "perfect-csi": "receiver divides by the known Rayleigh gain",
    "bleu-inverted-brevity": "BLEU length term min(1 - l_cand / l_ref, 0), which penalizes long candidates",
    "bleu-candidate-denominator": "n-gram precision denominator is the total candidate n-gram count",
    "med-distance-expansion": "MED similarity uses the squared-distance expansion, instead of a Gram-matrix form",
    "med-cold-start": "first consolidation with an empty long-term memory transfers every sample",
    "med-encoder-refresh": "stored features are re-extracted when the encoder parameters change",
    "greedy-decoding": "autoregressive decoder with greedy argmax decoding",
}


@dataclass
class RunManifest:
    command: str
    config_hash: str
    config: dict
    output_dir: str
    files: dict[str, list[str]] = field(default_factory=dict)
    deviations: dict[str, str] = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    started: float = field(default_factory=time.time)

    def add(self, kind: str, path: str | Path) -> Path:
        """Register an output file (a path inside the output directory) and return it."""
        try:
            rel = Path(path).resolve().relative_to(Path(self.output_dir).resolve()).as_posix()
        except ValueError:
            raise ContractError(f"{path} is outside the output directory {self.output_dir}") from None
        bucket = self.files.setdefault(kind, [])
        if rel not in bucket:
            bucket.append(rel)
        return Path(self.output_dir) / rel

    def exercise(self, *keys: str) -> None:
        for k in keys:
            self.deviations[k] = DEVIATIONS[k]

    def all_files(self) -> list[str]:
        return sorted({f for paths in self.files.values() for f in paths} | {MANIFEST_NAME})

    def finish(self) -> Path:
        self.wall_clock_s = round(time.time() - self.started, 3)
        root = Path(self.output_dir)
        missing = [f for f in self.all_files() if f != MANIFEST_NAME and not (root / f).is_file()]
        if missing:
            raise ContractError(f"manifest lists files that were not written: {missing}")
        path = root / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=str) + "\n")
        return path


def load_manifest(output_dir: str | Path) -> dict:
    return json.loads((Path(output_dir) / MANIFEST_NAME).read_text())
