from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

Provenance = Literal["fixture", "file", "remote"]


@dataclass(frozen=True)
class ImageRecord:
    id: str
    label: str
    payload: bytes = b""
    provenance: Provenance = "fixture"
    caption_seed: int = 0


@dataclass(frozen=True)
class CaptionRecord:
    image_id: str
    text: str
    source: Literal["mock", "remote"] = "mock"

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"empty caption for image {self.image_id!r}")


def fixture_payload(dataset: str, image_id: str, label: str, caption_seed: int) -> bytes:
    """Synthetic image bytes: a JSON tag a mock backend can read back."""
    doc = {"kind": "mock-image", "dataset": dataset, "id": image_id, "label": label, "caption_seed": caption_seed}
    return json.dumps(doc, sort_keys=True).encode()


def mock_payload_fields(payload: bytes) -> dict | None:
    try:
        doc = json.loads(payload.decode())
    except (UnicodeDecodeError, ValueError):
        return None
    if isinstance(doc, dict) and doc.get("kind") == "mock-image":
        return doc
    return None
