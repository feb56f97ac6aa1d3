"""Labeled image collections: built-in synthetic fixtures or manifest directories.

A dataset directory holds ``manifest.csv`` with columns ``id,label,caption_seed``
and an optional ``file`` column naming the image file relative to the
directory. Records are always returned sorted by id.
"""

from __future__ import annotations

import csv
from pathlib import Path

from ..errors import DatasetLoadError
from .phrases import PHRASES
from .records import ImageRecord, fixture_payload

MANIFEST = "manifest.csv"
FIXTURE_SIZES = {"toy-cifar": 50, "toy-birds": 50, "toy-catsdogs": 75, "toy-scenes": 3}


def fixture_names() -> list[str]:
    return sorted(FIXTURE_SIZES)


def fixture_dataset(name: str) -> list[ImageRecord]:
    try:
        per_label = FIXTURE_SIZES[name]
    except KeyError:
        raise DatasetLoadError(f"unknown fixture dataset {name!r}; available: {fixture_names()}") from None
    records = []
    for li, label in enumerate(PHRASES[name]):
        for k in range(per_label):
            rid = f"{name}-{label}-{k:03d}"
            seed = li * 1000 + k
            records.append(ImageRecord(rid, label, fixture_payload(name, rid, label, seed), "fixture", seed))
    return sorted(records, key=lambda r: r.id)


def write_manifest(records: list[ImageRecord], directory: str | Path) -> Path:
    path = Path(directory) / MANIFEST
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "caption_seed"])
        for r in records:
            w.writerow([r.id, r.label, r.caption_seed])
    return path


def _load_directory(root: Path) -> list[ImageRecord]:
    manifest = root / MANIFEST
    if not manifest.is_file():
        raise DatasetLoadError(f"no {MANIFEST} in dataset directory {root.resolve()}")
    records = []
    seen = set()
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            rid = row["id"]
            if rid in seen:
                raise DatasetLoadError(f"duplicate id {rid!r} in {manifest.resolve()}")
            seen.add(rid)
            seed = int(row.get("caption_seed") or 0)
            if row.get("file"):
                payload = (root / row["file"]).read_bytes()
                records.append(ImageRecord(rid, row["label"], payload, "file", seed))
            else:
                payload = fixture_payload(root.name, rid, row["label"], seed)
                records.append(ImageRecord(rid, row["label"], payload, "fixture", seed))
    if not records:
        raise DatasetLoadError(f"dataset manifest {manifest.resolve()} lists no records")
    return sorted(records, key=lambda r: r.id)


def load_dataset(spec: str) -> list[ImageRecord]:
    """``spec`` is a fixture name (optionally ``fixture:`` prefixed) or a directory."""
    name = spec.removeprefix("fixture:")
    if name in FIXTURE_SIZES:
        return fixture_dataset(name)
    root = Path(spec)
    if not root.exists():
        raise DatasetLoadError(f"dataset path does not exist: {root.resolve()}")
    if not root.is_dir():
        raise DatasetLoadError(f"dataset path is not a directory: {root.resolve()}")
    if not any(root.iterdir()):
        raise DatasetLoadError(f"dataset directory is empty: {root.resolve()}")
    return _load_directory(root)


def label_set(records: list[ImageRecord]) -> list[str]:
    return sorted({r.label for r in records})
