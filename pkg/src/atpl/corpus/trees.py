"""Bracketed constituency trees.

Preterminals hold exactly one token: ``(NN dog)``. Serialization uses the
compact form ``(S(NNP John)(VP(VBD hit)))``: no space between brackets, a
single space between a preterminal label and its token.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from ..errors import ParseError, StructuralError


@dataclass
class ParseTree:
    label: str
    children: list["ParseTree"] = field(default_factory=list)
    word: str | None = None

    @property
    def is_preterminal(self) -> bool:
        return self.word is not None

    def leaves(self) -> list[str]:
        if self.word is not None:
            return [self.word]
        out: list[str] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def preterminals(self) -> list["ParseTree"]:
        if self.word is not None:
            return [self]
        out: list[ParseTree] = []
        for c in self.children:
            out.extend(c.preterminals())
        return out

    def pos_tags(self) -> list[str]:
        return [p.label for p in self.preterminals()]

    def height(self) -> int:
        """1 for a preterminal, else 1 + tallest child."""
        if self.word is not None:
            return 1
        return 1 + max(c.height() for c in self.children)

    def spans(self, start: int = 0) -> Iterator[tuple["ParseTree", int, int]]:
        """Yield ``(node, i, j)`` in preorder, ``[i, j)`` token spans."""
        if self.word is not None:
            yield self, start, start + 1
            return
        end = start
        inner = []
        for c in self.children:
            sub = list(c.spans(end))
            end = sub[0][2]
            inner.extend(sub)
        yield self, start, end
        yield from inner

    def validate(self) -> None:
        if self.word is not None:
            if self.children:
                raise StructuralError(f"preterminal {self.label!r} has children")
            return
        if not self.children:
            raise StructuralError(f"internal node {self.label!r} has no children")
        for c in self.children:
            c.validate()

    def __str__(self) -> str:
        return serialize(self)


def serialize(tree: ParseTree) -> str:
    if tree.word is not None:
        return f"({tree.label} {tree.word})"
    return f"({tree.label}" + "".join(serialize(c) for c in tree.children) + ")"


def _tokenize(line: str) -> list[tuple[str, int]]:
    toks: list[tuple[str, int]] = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            toks.append((ch, i + 1))
            i += 1
        else:
            j = i
            while j < n and not line[j].isspace() and line[j] not in "()":
                j += 1
            toks.append((line[i:j], i + 1))
            i = j
    return toks


def parse_bracketed(line: str) -> ParseTree:
    """Parse one S-expression tree; spacing between brackets is free."""
    toks = _tokenize(line)
    if not toks:
        raise ParseError("empty input", 1)
    pos = 0

    def node() -> ParseTree:
        nonlocal pos
        tok, col = toks[pos]
        if tok != "(":
            raise ParseError(f"expected '(' but found {tok!r}", col)
        pos += 1
        if pos >= len(toks):
            raise ParseError("unbalanced parentheses: missing label", col)
        label, lcol = toks[pos]
        if label in "()":
            raise ParseError("missing category label", lcol)
        pos += 1
        if pos >= len(toks):
            raise ParseError("unbalanced parentheses", lcol)
        tok, tcol = toks[pos]
        if tok not in "()":
            pos += 1
            if pos >= len(toks) or toks[pos][0] != ")":
                c = toks[pos][1] if pos < len(toks) else len(line) + 1
                raise ParseError("preterminal must hold exactly one token", c)
            pos += 1
            return ParseTree(label, word=tok)
        children = []
        while pos < len(toks) and toks[pos][0] == "(":
            children.append(node())
        if pos >= len(toks):
            raise ParseError("unbalanced parentheses: missing ')'", len(line) + 1)
        if toks[pos][0] != ")":
            raise ParseError(f"unexpected token {toks[pos][0]!r}", toks[pos][1])
        if not children:
            raise ParseError(f"empty constituent {label!r}", toks[pos][1])
        pos += 1
        return ParseTree(label, children)

    tree = node()
    if pos != len(toks):
        raise ParseError(f"trailing input {toks[pos][0]!r}", toks[pos][1])
    return tree


def read_treebank(path) -> list[ParseTree]:
    trees = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                trees.append(parse_bracketed(line.strip()))
            except ParseError as exc:
                raise ParseError(f"line {lineno}: {exc}", exc.column) from None
    return trees


def write_treebank(path, trees) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trees:
            fh.write(serialize(t) + "\n")
