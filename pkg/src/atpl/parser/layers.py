"""Layer encodings of constituency trees and tree reconstruction.

A node's layer is its height: 1 for a preterminal, otherwise one more than
its tallest child. At layer ``k`` each token is covered by the tallest node
of height ``<= k`` on its path to the root. Runs of tokens covered by the same
node form the layer's substrings; the binary code ``z_k`` alternates between
0 and 1 from one substring to the next, starting at 0. The category column
``z^(k)`` gives each token the label of its covering node, so a node shorter
than ``k`` is replicated upward until an ancestor takes over.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..corpus.trees import ParseTree
from ..errors import ContractError, ReconstructionError, StructuralError


@dataclass
class LayerEncoding:
    """``codes[k-2]`` is the binary code of layer k (k = 2..height);
    ``categories[k-1]`` is the category column of layer k (k = 1..height)."""

    height: int
    codes: list[list[int]]
    categories: list[list[str]]

    def code(self, k: int) -> list[int]:
        if k < 2 or k > self.height:
            raise ContractError(f"no binary code for layer {k}")
        return self.codes[k - 2]

    def category(self, k: int) -> list[str]:
        return self.categories[k - 1]

    @property
    def pos(self) -> list[str]:
        return self.categories[0]


def segments_from_code(code: Sequence[int]) -> list[tuple[int, int]]:
    """Maximal runs of equal bits as ``[start, end)`` spans."""
    if not code:
        raise ContractError("empty code")
    for b in code:
        if b not in (0, 1):
            raise ContractError(f"code values must be 0 or 1, got {b!r}")
    spans = []
    start = 0
    for t in range(1, len(code)):
        if code[t] != code[t - 1]:
            spans.append((start, t))
            start = t
    spans.append((start, len(code)))
    return spans


def code_from_segments(spans: Sequence[tuple[int, int]]) -> list[int]:
    code = []
    for m, (i, j) in enumerate(spans):
        code.extend([m % 2] * (j - i))
    return code


def segment_index(spans: Sequence[tuple[int, int]], length: int) -> list[int]:
    """For each position, the index of the span containing it."""
    owner = [0] * length
    for m, (i, j) in enumerate(spans):
        for t in range(i, j):
            owner[t] = m
    return owner


def derive_gold_layers(tree: ParseTree) -> LayerEncoding:
    tree.validate()
    heights: dict[int, int] = {}

    def height(node: ParseTree) -> int:
        h = 1 if node.is_preterminal else 1 + max(height(c) for c in node.children)
        heights[id(node)] = h
        return h

    hp = height(tree)
    # root-to-preterminal path per token, with spans
    paths: list[list[tuple[ParseTree, int, int]]] = []

    def walk(node: ParseTree, start: int, path: list) -> int:
        if node.is_preterminal:
            paths.append(path + [(node, start, start + 1)])
            return start + 1
        end = start
        here = len(paths)
        for c in node.children:
            end = walk(c, end, path + [None])
        for p in paths[here:]:
            p[len(path)] = (node, start, end)
        return end

    walk(tree, 0, [])
    T = len(paths)
    codes, cats = [], []
    for k in range(1, hp + 1):
        covering = []
        for path in paths:
            node = next(entry for entry in path if heights[id(entry[0])] <= k)
            covering.append(node)
        cats.append([entry[0].label for entry in covering])
        if k >= 2:
            spans = []
            for t, (node, i, j) in enumerate(covering):
                if t == i:
                    spans.append((i, j))
            codes.append(code_from_segments(spans))
    if any(len(c) != T for c in cats):
        raise StructuralError("inconsistent tree spans")
    return LayerEncoding(hp, codes, cats)


def _layer_spans(codes: Sequence[Sequence[int]], k: int, T: int) -> list[tuple[int, int]]:
    if k == 1:
        return [(t, t + 1) for t in range(T)]
    return segments_from_code(codes[k - 2])


def build_tree(tokens: Sequence[str], categories: Sequence[Sequence[str]],
               codes: Sequence[Sequence[int]], height: int) -> str:
    """Assemble the bracketed string from category columns and codes.

    Works like the stack procedure it generalizes: walking layers top-down,
    a bracket opens where a token's layer-k node differs from its layer-(k+1)
    node (different label or different span) and the node starts at that
    token; the token is emitted and its preterminal closed when the walk
    reaches it; after each token every pending bracket whose span ends there
    is closed. Positions are processed left to right and layers top-down
    within a position, so the output is written in tree order.
    """
    T = len(tokens)
    if T == 0:
        raise ContractError("cannot build a tree over zero tokens")
    if height < 1 or len(categories) != height or len(codes) != height - 1:
        raise ContractError(
            f"height {height} needs {height} category columns and {height - 1} codes, "
            f"got {len(categories)} and {len(codes)}")
    for k, col in enumerate(categories, 1):
        if len(col) != T:
            raise ContractError(f"category column {k} has length {len(col)}, expected {T}")
    for k, code in enumerate(codes, 2):
        if len(code) != T:
            raise ContractError(f"code of layer {k} has length {len(code)}, expected {T}")

    spans = [_layer_spans(codes, k, T) for k in range(1, height + 1)]
    owner = [segment_index(s, T) for s in spans]
    if len(spans[-1]) != 1:
        raise ReconstructionError(f"top layer has {len(spans[-1])} segments, expected 1", 0)
    for k in range(1, height + 1):
        col = categories[k - 1]
        for i, j in spans[k - 1]:
            for t in range(i + 1, j):
                if col[t] != col[i]:
                    raise ReconstructionError(
                        f"category changes inside a layer-{k} segment", t)
        if k < height:
            above = owner[k]
            for i, j in spans[k - 1]:
                if above[i] != above[j - 1]:
                    raise ReconstructionError(
                        f"layer-{k} segment [{i},{j}) crosses a layer-{k + 1} boundary", i)

    def node_span(k: int, t: int) -> tuple[int, int]:
        return spans[k - 1][owner[k - 1][t]]

    def is_new(k: int, t: int) -> bool:
        if k == height:
            return True
        return (categories[k - 1][t] != categories[k][t]
                or node_span(k, t) != node_span(k + 1, t))

    out: list[str] = []
    stack: list[tuple[str, int]] = []  # (label, end)
    for t in range(T):
        for k in range(height, 0, -1):
            i, j = node_span(k, t)
            if i == t and is_new(k, t):
                out.append("(" + categories[k - 1][t])
                stack.append((categories[k - 1][t], j))
        # the innermost open bracket at this position is the preterminal
        if not stack or stack[-1][1] != t + 1 or stack[-1][0] != categories[0][t]:
            raise ReconstructionError("no preterminal opened for token", t)
        out.append(" " + tokens[t] + ")")
        stack.pop()
        while stack and stack[-1][1] == t + 1:
            stack.pop()
            out.append(")")
    if stack:
        raise ReconstructionError("unclosed brackets at end of sentence", T - 1)
    return "".join(out)


def build_tree_from_encoding(tokens: Sequence[str], enc: LayerEncoding) -> str:
    return build_tree(tokens, enc.categories, enc.codes, enc.height)
