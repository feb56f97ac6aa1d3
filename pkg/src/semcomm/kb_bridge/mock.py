"""Deterministic offline stand-ins for the captioner and the image generator."""

from __future__ import annotations

from ..numerics import rng as rngs
from .phrases import LABEL_PHRASES, fallback_caption, label_for_caption
from .records import CaptionRecord, ImageRecord, fixture_payload


class MockCaptioner:
    """Picks a caption from the label's phrase table, seeded per image."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def caption(self, img: ImageRecord) -> CaptionRecord:
        phrases = LABEL_PHRASES.get(img.label)
        if not phrases:
            return CaptionRecord(img.id, fallback_caption(img.label), "mock")
        pick = int(rngs.stream(self.seed, rngs.MOCK_KB, img.caption_seed).integers(len(phrases)))
        return CaptionRecord(img.id, phrases[pick], "mock")


class MockReconstructor:
    """Recovers the label by keyword lookup; the payload is a synthetic tag."""

    def reconstruct(self, cap: CaptionRecord) -> ImageRecord:
        label = label_for_caption(cap.text)
        rid = f"{cap.image_id}:rec"
        return ImageRecord(rid, label, fixture_payload("reconstructed", rid, label, 0), "fixture")
