"""Corpus-level BLEU-1..N with clipped counts and the brevity penalty.

An n-gram order with zero matches contributes ``log(1e-9)`` instead of
sending the whole geometric mean to zero.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from ..errors import ContractError

FLOOR = 1e-9


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_score(candidates: Sequence[Sequence[str]],
               references: Sequence[Sequence[Sequence[str]]],
               max_n: int = 4) -> list[float]:
    """Return ``[BLEU-1, ..., BLEU-max_n]``.

    ``references[i]`` is the list of reference token lists for
    ``candidates[i]``. The effective reference length of each pair is the
    reference length closest to the candidate (shorter wins ties).
    """
    if len(candidates) != len(references):
        raise ContractError(f"{len(candidates)} candidates but {len(references)} reference sets")
    matched = [0] * max_n
    total = [0] * max_n
    cand_len = ref_len = 0
    for cand, refs in zip(candidates, references):
        if not refs:
            raise ContractError("every candidate needs at least one reference")
        cand_len += len(cand)
        ref_len += min((len(r) for r in refs), key=lambda L: (abs(L - len(cand)), L))
        for n in range(1, max_n + 1):
            counts = _ngrams(cand, n)
            if not counts:
                continue
            best: Counter = Counter()
            for r in refs:
                best |= _ngrams(r, n)
            matched[n - 1] += sum(min(c, best[g]) for g, c in counts.items())
            total[n - 1] += sum(counts.values())
    if cand_len == 0:
        return [0.0] * max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    logs = []
    scores = []
    for n in range(max_n):
        p = matched[n] / total[n] if total[n] else 0.0
        logs.append(math.log(p) if p > 0 else math.log(FLOOR))
        scores.append(bp * math.exp(sum(logs) / len(logs)))
    return scores
