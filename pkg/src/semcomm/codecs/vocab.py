"""Word-level vocabulary and tokenizer."""

from __future__ import annotations

import json
import re
from typing import Iterable, Sequence

from ..errors import ContractError

PAD, START, END, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<start>", "<end>", "<unk>")

_WORD = re.compile(r"[a-z0-9]+(?:['-][a-z0-9]+)*|[^\sa-z0-9]")


def split_words(text: str) -> list[str]:
    """Lowercase and split into word and punctuation tokens."""
    return _WORD.findall(text.lower())


def normalize(text: str) -> str:
    return " ".join(split_words(text))


class Vocab:
    def __init__(self, words: Iterable[str]):
        self.itos: list[str] = list(RESERVED)
        self.stoi: dict[str, int] = {w: i for i, w in enumerate(self.itos)}
        for w in words:
            if w not in self.stoi:
                self.stoi[w] = len(self.itos)
                self.itos.append(w)

    @classmethod
    def build(cls, corpus: Iterable[str]) -> "Vocab":
        """Vocabulary in first-occurrence order over the corpus."""
        return cls(w for text in corpus for w in split_words(text))

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, word: str) -> bool:
        return word in self.stoi

    def encode(self, text: str) -> list[int]:
        words = split_words(text)
        if not words:
            raise ContractError("cannot tokenize empty text")
        return [self.stoi.get(w, UNK) for w in words]

    def decode(self, ids: Sequence[int]) -> str:
        out = []
        for i in ids:
            if i == END:
                break
            if i in (PAD, START):
                continue
            out.append(self.itos[i] if 0 <= i < len(self.itos) else RESERVED[UNK])
        return " ".join(out)

    def to_json(self) -> str:
        return json.dumps({"version": 1, "words": self.itos[len(RESERVED):]}, indent=0)

    @classmethod
    def from_json(cls, text: str) -> "Vocab":
        return cls(json.loads(text)["words"])


def tokenize(text: str, vocab: Vocab) -> list[int]:
    return vocab.encode(text)


def detokenize(ids: Sequence[int], vocab: Vocab) -> str:
    return vocab.decode(ids)
