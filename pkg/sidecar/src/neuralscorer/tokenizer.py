"""Corpus-built vocabulary over a locked word tokenizer.

Split on any maximal run of non-alphanumeric characters, lowercase, drop
empties.  Ids 0..3 are reserved for pad/unk/cls/sep.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIALS = ("<pad>", "<unk>", "<cls>", "<sep>")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Vocab:
    token_to_id: dict[str, int]

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocab":
        mapping = {tok: i for i, tok in enumerate(SPECIALS)}
        for text in texts:
            for tok in tokenize(text):
                if tok not in mapping:
                    mapping[tok] = len(mapping)
        return cls(token_to_id=mapping)

    @property
    def size(self) -> int:
        return len(self.token_to_id)

    def encode(self, text: str) -> list[int]:
        return [self.token_to_id.get(tok, UNK) for tok in tokenize(text)]
