"""Weighted context-free grammar sampler used for desk-scale corpora.

The shipped grammar tags every word deterministically (each word appears
under exactly one POS tag) and has no unary rule whose parent and child share
a label, so every sampled tree is recoverable from its layer encoding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ContractError, GrammarError
from .trees import ParseTree

Rules = dict[str, list[tuple[tuple[str, ...], float]]]


@dataclass
class SynthGrammar:
    start: list[tuple[str, float]]
    productions: Rules
    lexicon: dict[str, list[str]]
    depth_cap: int = 40

    def __post_init__(self) -> None:
        symbols = set(self.productions) | set(self.lexicon)
        for lhs, alts in self.productions.items():
            if not alts:
                raise GrammarError(f"nonterminal {lhs!r} has no productions")
            for rhs, w in alts:
                if w <= 0:
                    raise GrammarError(f"non-positive weight in {lhs} -> {' '.join(rhs)}")
                for sym in rhs:
                    if sym not in symbols:
                        raise GrammarError(f"undefined symbol {sym!r} in {lhs} -> {' '.join(rhs)}")
        for cat, _ in self.start:
            if cat not in symbols:
                raise GrammarError(f"undefined start symbol {cat!r}")
        # fixed point: which nonterminals can reach a terminal string
        productive = set(self.lexicon)
        changed = True
        while changed:
            changed = False
            for lhs, alts in self.productions.items():
                if lhs not in productive and any(all(s in productive for s in rhs) for rhs, _ in alts):
                    productive.add(lhs)
                    changed = True
        dead = sorted(set(self.productions) - productive)
        if dead:
            raise GrammarError(f"nonterminals derive no terminal string: {dead}")

    @property
    def tags(self) -> list[str]:
        return sorted(self.lexicon)

    @property
    def words(self) -> list[str]:
        return sorted({w for ws in self.lexicon.values() for w in ws})

    @property
    def categories(self) -> list[str]:
        return sorted(self.productions)


def default_grammar() -> SynthGrammar:
    return SynthGrammar(
        start=[("S", 0.85), ("FRAG", 0.15)],
        productions={
            "S": [(("NP", "VP"), 0.6), (("NP", "VP", "PP"), 0.15),
                  (("ADVP", "NP", "VP"), 0.1), (("S", "CC", "S"), 0.15)],
            "FRAG": [(("NP", "PP"), 0.6), (("NP", "ADVP"), 0.4)],
            "NP": [(("DT", "NN"), 0.4), (("DT", "ADJP", "NN"), 0.2), (("PRP",), 0.2),
                   (("NP", "PP"), 0.1), (("DT", "NML"), 0.1)],
            "NML": [(("NN", "NN"), 1.0)],
            "ADJP": [(("JJ",), 0.7), (("RB", "JJ"), 0.3)],
            "VP": [(("VBD", "NP"), 0.4), (("VBD",), 0.15), (("VBD", "NP", "PP"), 0.15),
                   (("VBD", "SBAR"), 0.1), (("VBD", "ADVP"), 0.1), (("VBD", "UCP"), 0.1)],
            "UCP": [(("ADJP", "CC", "NP"), 1.0)],
            "PP": [(("IN", "NP"), 1.0)],
            "SBAR": [(("IN", "S"), 1.0)],
            "ADVP": [(("RB",), 1.0)],
        },
        lexicon={
            "DT": ["the", "a", "every", "this", "some"],
            "JJ": ["big", "small", "red", "old", "quiet", "happy", "dark"],
            "NN": ["dog", "cat", "ball", "park", "house", "river", "teacher",
                   "garden", "car", "book", "child", "tree"],
            "PRP": ["he", "she", "they", "it"],
            "VBD": ["saw", "hit", "liked", "found", "chased", "slept", "ran", "knew"],
            "IN": ["in", "on", "near", "with", "under", "because"],
            "RB": ["quickly", "often", "slowly", "very", "never"],
            "CC": ["and", "but", "or"],
        },
    )


class _TooDeep(Exception):
    pass


def _pick(rng: np.random.Generator, weights: list[float]) -> int:
    cum = np.cumsum(weights)
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))


def _derive(g: SynthGrammar, sym: str, rng: np.random.Generator, depth: int) -> ParseTree:
    if depth > g.depth_cap:
        raise _TooDeep
    if sym in g.lexicon:
        words = g.lexicon[sym]
        return ParseTree(sym, word=words[int(rng.integers(len(words)))])
    alts = g.productions[sym]
    rhs = alts[_pick(rng, [w for _, w in alts])][0]
    return ParseTree(sym, [_derive(g, s, rng, depth + 1) for s in rhs])


@dataclass
class SynthCorpus:
    trees: list[ParseTree]
    sentences: list[list[str]] = field(default_factory=list)
    tags: list[list[str]] = field(default_factory=list)


def synth_corpus(grammar: SynthGrammar, n: int, seed: int, min_len: int = 2,
                 max_len: int = 12, max_attempts: int = 1000) -> SynthCorpus:
    """Sample ``n`` trees whose yield length lies in ``[min_len, max_len]``.

    Derivations deeper than the grammar's depth cap, or outside the length
    window, are rejected and redrawn; ``max_attempts`` consecutive
    rejections raise :class:`GrammarError`.
    """
    if n < 1:
        raise GrammarError("corpus size must be at least 1")
    rng = np.random.default_rng(seed)
    trees: list[ParseTree] = []
    failures = 0
    while len(trees) < n:
        g_start = grammar.start[_pick(rng, [w for _, w in grammar.start])][0]
        try:
            tree = _derive(grammar, g_start, rng, 0)
        except _TooDeep:
            tree = None
        if tree is not None and min_len <= len(tree.leaves()) <= max_len:
            trees.append(tree)
            failures = 0
            continue
        failures += 1
        if failures >= max_attempts:
            raise GrammarError(
                f"{max_attempts} consecutive derivations from {g_start!r} exceeded the depth cap "
                f"or the length window [{min_len}, {max_len}]")
    return SynthCorpus(trees, [t.leaves() for t in trees], [t.pos_tags() for t in trees])


def caption_features(sentences: Sequence[Sequence[str]], lexicon: Sequence[str],
                     dim: int, seed: int) -> np.ndarray:
    """Stand-in image features: an order-aware, deterministic embedding of
    each sentence, ``tanh(sum_t P[w_t] * Q[t])`` over fixed random tables."""
    rng = np.random.default_rng([seed, dim])
    index = {w: i for i, w in enumerate(sorted(set(lexicon)))}
    longest = max((len(s) for s in sentences), default=1)
    P = rng.normal(size=(len(index), dim))
    Q = 1.0 + rng.normal(scale=0.5, size=(longest, dim))
    out = np.zeros((len(sentences), dim))
    for n, sent in enumerate(sentences):
        acc = np.zeros(dim)
        for t, w in enumerate(sent):
            if w not in index:
                raise ContractError(f"word {w!r} is not in the lexicon")
            acc += P[index[w]] * Q[t]
        out[n] = np.tanh(acc / np.sqrt(len(sent)))
    # six decimals keep the text files compact
    return np.round(out, 6)
