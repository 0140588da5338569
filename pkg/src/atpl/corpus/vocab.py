from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import ContractError, IngestionError

EOS = "</s>"
UNK = "<unk>"


@dataclass
class Vocabulary:
    """Token <-> id bijection. The last two ids are ``UNK`` then ``EOS``."""

    tokens: list[str]

    def __post_init__(self) -> None:
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ContractError("duplicate tokens in vocabulary")
        for r in (UNK, EOS):
            if r not in self.index:
                raise ContractError(f"vocabulary lacks reserved token {r!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def eos_id(self) -> int:
        return self.index[EOS]

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    def encode(self, sentence: Sequence[str], strict: bool = False, line: int | None = None) -> list[int]:
        ids = []
        for tok in sentence:
            i = self.index.get(tok)
            if i is None:
                if strict:
                    where = f" on line {line}" if line is not None else ""
                    raise IngestionError(f"out-of-vocabulary token {tok!r}{where}")
                i = self.unk_id
            ids.append(i)
        return ids

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


def build_vocab(corpus: Iterable[Sequence[str]]) -> Vocabulary:
    """Ids by descending frequency, ties broken lexicographically; the
    reserved tokens follow."""
    counts = Counter(tok for sent in corpus for tok in sent)
    if not counts:
        raise ContractError("cannot build a vocabulary from an empty corpus")
    ordered = sorted((t for t in counts if t not in (UNK, EOS)), key=lambda t: (-counts[t], t))
    return Vocabulary(ordered + [UNK, EOS])


@dataclass
class TagSet:
    names: list[str]

    def __post_init__(self) -> None:
        self.index = {t: i for i, t in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise ContractError("duplicate tag names")
        if len(self.names) < 2:
            raise ContractError("a tag set needs at least two tags")

    def __len__(self) -> int:
        return len(self.names)

    def encode(self, tags: Sequence[str]) -> list[int]:
        try:
            return [self.index[t] for t in tags]
        except KeyError as exc:
            raise IngestionError(f"unknown tag {exc.args[0]!r}") from None

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.names[i] for i in ids]


def build_tagset(tag_sequences: Iterable[Sequence[str]]) -> TagSet:
    return TagSet(sorted({t for seq in tag_sequences for t in seq}))
