"""Caption phrase tables for the synthetic fixture datasets.

Each label owns a subject / action / place grid; a caption is one cell of
the grid. Tables for different datasets share only function words, so
moving from one dataset to the next is a genuine vocabulary shift.
"""

from __future__ import annotations

import itertools

from ..codecs.vocab import split_words

_GRIDS: dict[str, dict[str, tuple[list[str], list[str], list[str]]]] = {
    "toy-cifar": {
        "airplane": (
            ["a white airplane", "a small airplane", "a large airplane", "an old airplane"],
            ["flying over", "parked near", "landing at", "taking off from"],
            ["the runway", "the airport", "the city", "the clouds"],
        ),
        "ship": (
            ["a cargo ship", "a red ship", "a fishing ship", "a big ship"],
            ["sailing across", "docked at", "floating in", "moving through"],
            ["the harbor", "the ocean", "the bay", "the sea"],
        ),
        "truck": (
            ["a blue truck", "a heavy truck", "a dump truck", "a delivery truck"],
            ["driving along", "parked beside", "stuck in", "crossing"],
            ["the highway", "the road", "the mud", "the bridge"],
        ),
    },
    "toy-birds": {
        "sparrow": (
            ["a brown sparrow", "a tiny sparrow", "a young sparrow", "a plump sparrow"],
            ["perched on", "hopping along", "resting in", "pecking at"],
            ["a branch", "the fence", "a hedge", "some seeds"],
        ),
        "eagle": (
            ["a bald eagle", "a golden eagle", "a fierce eagle", "a majestic eagle"],
            ["soaring above", "gliding over", "nesting on", "hunting near"],
            ["the mountains", "a cliff", "the valley", "a lake"],
        ),
        "parrot": (
            ["a green parrot", "a colorful parrot", "a talking parrot", "a noisy parrot"],
            ["perching in", "eating from", "climbing up", "squawking inside"],
            ["a cage", "a tree", "the jungle", "a bowl"],
        ),
    },
    "toy-catsdogs": {
        "cat": (
            ["a fluffy cat", "a black cat", "a sleepy cat", "a striped cat"],
            ["lying on", "curled up on", "playing with", "staring at"],
            ["a sofa", "the carpet", "a yarn ball", "the window"],
        ),
        "dog": (
            ["a dog", "a playful dog", "a spotted dog", "a happy dog"],
            ["sitting on", "running around", "chasing", "rolling in"],
            ["grass", "the park", "a frisbee", "the snow"],
        ),
    },
}

_SINGLE: dict[str, dict[str, list[str]]] = {
    "toy-scenes": {"fire-beach": ["a fire is burning on a beach near the water"]},
}

# one unique content word per label, used to invert captions back to labels
KEYWORDS: dict[str, str] = {
    "airplane": "airplane",
    "ship": "ship",
    "truck": "truck",
    "sparrow": "sparrow",
    "eagle": "eagle",
    "parrot": "parrot",
    "cat": "cat",
    "dog": "dog",
    "fire-beach": "fire",
}


def _expand(grid: tuple[list[str], list[str], list[str]]) -> list[str]:
    return [" ".join(p) for p in itertools.product(*grid)]


PHRASES: dict[str, dict[str, list[str]]] = {
    name: {label: _expand(grid) for label, grid in labels.items()} for name, labels in _GRIDS.items()
}
PHRASES.update(_SINGLE)

LABEL_PHRASES: dict[str, list[str]] = {
    label: phrases for table in PHRASES.values() for label, phrases in table.items()
}


def dataset_labels(name: str) -> list[str]:
    return list(PHRASES[name])


def fallback_caption(label: str) -> str:
    return f"a photo of a {label.replace('-', ' ')}"


_BY_KEYWORD = {kw: label for label, kw in KEYWORDS.items()}


def label_for_caption(text: str) -> str:
    """First label whose keyword occurs in the caption, else ``"unknown"``."""
    for w in split_words(text):
        if w in _BY_KEYWORD:
            return _BY_KEYWORD[w]
    return "unknown"
