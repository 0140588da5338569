"""Line-oriented corpus files.

Tagged corpus: one sentence per line, ``token_TAG`` pairs separated by
spaces (split on the last underscore).

Unbinding file: one sentence per line,
``id<TAB>T<TAB>v_1 ... v_{T·d}`` with the T vectors of length d flattened
row-major, written with ``repr`` so reloading is bit-exact. ``d`` is
recovered as ``len(values) / T``.

Caption file: ``id<TAB>f_1 ... f_n<TAB>ref_1|ref_2|...``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import IngestionError

log = logging.getLogger(__name__)


def read_tagged(path) -> tuple[list[list[str]], list[list[str]]]:
    sents, tags = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            words, ts = [], []
            for pair in line.split():
                word, sep, tag = pair.rpartition("_")
                if not sep or not word or not tag:
                    raise IngestionError(f"{path}: line {lineno}: malformed pair {pair!r}")
                words.append(word)
                ts.append(tag)
            sents.append(words)
            tags.append(ts)
    return sents, tags


def write_tagged(path, sentences, tags) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for words, ts in zip(sentences, tags):
            fh.write(" ".join(f"{w}_{t}" for w, t in zip(words, ts)) + "\n")


def read_sentences(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh if line.strip()]


def write_sentences(path, sentences) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(" ".join(s) + "\n")


@dataclass
class UnbindingSequence:
    sentence_id: str
    vectors: np.ndarray  # T × d

    @property
    def length(self) -> int:
        return self.vectors.shape[0]


def write_unbindings(path, seqs: list[UnbindingSequence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in seqs:
            flat = " ".join(repr(float(x)) for x in s.vectors.reshape(-1))
            fh.write(f"{s.sentence_id}\t{s.length}\t{flat}\n")


def read_unbindings(path) -> list[UnbindingSequence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise IngestionError(f"{path}: line {lineno}: expected 3 tab-separated fields")
            try:
                T = int(parts[1])
                values = np.array([float(x) for x in parts[2].split()])
            except ValueError:
                raise IngestionError(f"{path}: line {lineno}: bad number") from None
            if T < 1 or values.size % T:
                raise IngestionError(f"{path}: line {lineno}: {values.size} values for T={T}")
            out.append(UnbindingSequence(parts[0], values.reshape(T, -1)))
    return out


@dataclass
class CaptionRecord:
    record_id: str
    features: np.ndarray
    references: list[list[str]]


def load_caption_dataset(path) -> list[CaptionRecord]:
    text = Path(path).read_text(encoding="utf-8")
    records: list[CaptionRecord] = []
    dim = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise IngestionError(f"{path}: line {lineno}: expected id, features, references")
        rid = parts[0]
        try:
            feats = np.array([float(x) for x in parts[1].split()])
        except ValueError:
            raise IngestionError(f"{path}: record {rid!r}: malformed float") from None
        if dim is None:
            dim = feats.shape[0]
        elif feats.shape[0] != dim:
            raise IngestionError(
                f"{path}: record {rid!r} has {feats.shape[0]} features, earlier records {dim}")
        refs = [r.split() for r in parts[2].split("|") if r.strip()]
        if not refs:
            raise IngestionError(f"{path}: record {rid!r} has no reference sentence")
        records.append(CaptionRecord(rid, feats, refs))
    if not records:
        log.warning("caption file %s is empty", path)
    return records


def write_caption_dataset(path, records: list[CaptionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            feats = " ".join(repr(float(x)) for x in r.features)
            refs = "|".join(" ".join(ref) for ref in r.references)
            fh.write(f"{r.record_id}\t{feats}\t{refs}\n")
