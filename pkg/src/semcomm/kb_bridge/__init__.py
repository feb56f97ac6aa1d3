"""Captioner / reconstructor boundary with mock and remote backends."""

from .datasets import fixture_dataset, fixture_names, label_set, load_dataset, write_manifest
from .mock import MockCaptioner, MockReconstructor
from .records import CaptionRecord, ImageRecord
from .remote import RemoteCaptioner, RemoteReconstructor


def caption(img: ImageRecord, backend) -> CaptionRecord:
    return backend.caption(img)


def reconstruct(cap: CaptionRecord, backend) -> ImageRecord:
    return backend.reconstruct(cap)


__all__ = [
    "CaptionRecord",
    "ImageRecord",
    "MockCaptioner",
    "MockReconstructor",
    "RemoteCaptioner",
    "RemoteReconstructor",
    "caption",
    "fixture_dataset",
    "fixture_names",
    "label_set",
    "load_dataset",
    "reconstruct",
    "write_manifest",
]
