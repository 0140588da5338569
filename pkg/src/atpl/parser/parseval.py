"""Labeled-bracket precision / recall / F1.

A constituent is ``(label, start, end)`` for every node above the
preterminals (the root included). Counts are pooled over the corpus and
matched as multisets.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..corpus.trees import ParseTree, parse_bracketed
from ..errors import ContractError


@dataclass(frozen=True)
class ParsevalScore:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    gold: int


def constituents(tree: ParseTree) -> Counter:
    return Counter((node.label, i, j) for node, i, j in tree.spans() if not node.is_preterminal)


def _as_tree(t) -> ParseTree:
    return parse_bracketed(t) if isinstance(t, str) else t


def parseval_score(predicted: Sequence, gold: Sequence) -> ParsevalScore:
    if len(predicted) != len(gold):
        raise ContractError(f"{len(predicted)} predicted trees but {len(gold)} gold trees")
    matched = n_pred = n_gold = 0
    for p, g in zip(predicted, gold):
        cp, cg = constituents(_as_tree(p)), constituents(_as_tree(g))
        matched += sum((cp & cg).values())
        n_pred += sum(cp.values())
        n_gold += sum(cg.values())
    precision = matched / n_pred if n_pred else (1.0 if n_gold == 0 else 0.0)
    recall = matched / n_gold if n_gold else (1.0 if n_pred == 0 else 0.0)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return ParsevalScore(precision, recall, f1, matched, n_pred, n_gold)
