"""Layer-by-layer segmenter and substring classifier.

Both read the unbinding sequence with a BLSTM and score every position
with POS-conditioned factored weights::

    s_{k,i} = W_fwd_k(z_1,i) h_fwd_k,i + W_bwd_k(z_1,i) h_bwd_k,i

The layer-2 segmenter uses ``s_{2,t}`` directly. For k >= 3 the scores are
averaged over the layer-(k-1) substring holding t, so the predicted bit is
constant on each of those substrings. The classifier averages over the
layer-k substring itself. Every layer owns its parameters; layers above
the deepest one seen in training reuse the top layer's parameters.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..autodiff import ParamStore, Tensor, load_checkpoint, save_checkpoint
from ..autodiff import tensor as T
from ..blocks import BLSTM, FactoredWeight
from ..corpus.trees import ParseTree
from ..corpus.vocab import TagSet
from ..errors import ContractError, IngestionError
from ..training import TrainConfig, fit
from .layers import (LayerEncoding, build_tree, code_from_segments, derive_gold_layers,
                     segment_index, segments_from_code)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParserConfig:
    d: int = 16
    hidden: int = 32
    inner: int = 32
    max_layers: int = 8  # highest layer with its own parameters
    max_height: int = 12  # inference cap
    seed: int = 0


class _LayerScorer:
    def __init__(self, store: ParamStore, name: str, cfg: ParserConfig, n_pos: int,
                 n_out: int, rng: np.random.Generator):
        self.blstm = BLSTM(store, f"{name}.blstm", cfg.d, cfg.hidden, rng)
        self.w_fwd = FactoredWeight(store, f"{name}.W_fwd", n_out, cfg.hidden, n_pos, rng, cfg.inner)
        self.w_bwd = FactoredWeight(store, f"{name}.W_bwd", n_out, cfg.hidden, n_pos, rng, cfg.inner)

    def scores(self, u: Sequence[Tensor], z1: Sequence[int]) -> list[Tensor]:
        hf, hb = self.blstm(u)
        return [T.add(self.w_fwd.apply(p, a), self.w_bwd.apply(p, b))
                for p, a, b in zip(z1, hf, hb)]


def _averaged(scores: list[Tensor], spans: list[tuple[int, int]]) -> list[Tensor]:
    """One averaged score per position, shared across its span."""
    out: list[Tensor] = [None] * len(scores)  # type: ignore[list-item]
    for i, j in spans:
        m = scores[i] if j - i == 1 else T.mean(scores[i:j])
        for t in range(i, j):
            out[t] = m
    return out


@dataclass
class ParseExample:
    tokens: list[str]
    u: np.ndarray
    pos: list[int]
    layers: LayerEncoding


class ConstituencyParser:
    def __init__(self, tagset: TagSet, categories: Sequence[str], cfg: ParserConfig):
        self.tagset = tagset
        self.categories = list(categories)
        self.cat_index = {c: i for i, c in enumerate(self.categories)}
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.store = ParamStore()
        P, C = len(tagset), len(self.categories)
        self.segmenters = {k: _LayerScorer(self.store, f"seg{k}", cfg, P, 2, rng)
                           for k in range(2, cfg.max_layers + 1)}
        self.classifiers = {k: _LayerScorer(self.store, f"cls{k}", cfg, P, C, rng)
                            for k in range(2, cfg.max_layers + 1)}

    def _seg(self, k: int) -> _LayerScorer:
        return self.segmenters[min(k, self.cfg.max_layers)]

    def _cls(self, k: int) -> _LayerScorer:
        return self.classifiers[min(k, self.cfg.max_layers)]

    @staticmethod
    def _inputs(u: np.ndarray) -> list[Tensor]:
        return [T.constant(row) for row in u]

    def _check(self, u, z1) -> None:
        if len(u) != len(z1):
            raise ContractError(f"{len(u)} unbinding vectors but {len(z1)} POS ids")
        if len(u) == 0:
            raise ContractError("empty sentence")

    # -- segmenter -----------------------------------------------------
    def segment_logits(self, k: int, u: np.ndarray, z1: Sequence[int],
                       prev_code: Sequence[int] | None = None) -> list[Tensor]:
        """``J_{k,t}`` for every position (layer 2: per-position scores)."""
        self._check(u, z1)
        scores = self._seg(k).scores(self._inputs(u), z1)
        if k == 2:
            return scores
        if k < 2:
            raise ContractError("segmenter layers start at 2")
        if prev_code is None or len(prev_code) != len(u):
            raise ContractError(f"layer {k} needs the layer-{k - 1} code of length {len(u)}")
        return _averaged(scores, segments_from_code(prev_code))

    def segment_layer2(self, u: np.ndarray, z1: Sequence[int]) -> list[int]:
        return [int(np.argmax(j.data)) for j in self.segment_logits(2, u, z1)]

    def segment_layerk(self, k: int, u: np.ndarray, z1: Sequence[int],
                       prev_code: Sequence[int]) -> list[int]:
        return [int(np.argmax(j.data)) for j in self.segment_logits(k, u, z1, prev_code)]

    # -- classifier ----------------------------------------------------
    def classify_logits(self, k: int, u: np.ndarray, z1: Sequence[int],
                        code: Sequence[int]) -> list[Tensor]:
        """``E_{k,t}``: scores averaged over the layer-k substring."""
        self._check(u, z1)
        if len(code) != len(u):
            raise ContractError(f"layer {k} code has length {len(code)}, expected {len(u)}")
        scores = self._cls(k).scores(self._inputs(u), z1)
        return _averaged(scores, segments_from_code(code))

    def classify_layer(self, k: int, u: np.ndarray, z1: Sequence[int],
                       code: Sequence[int]) -> list[str]:
        return [self.categories[int(np.argmax(e.data))]
                for e in self.classify_logits(k, u, z1, code)]

    # -- training --------------------------------------------------------
    def loss(self, ex: ParseExample) -> Tensor:
        terms = []
        enc = ex.layers
        for k in range(2, enc.height + 1):
            prev = enc.code(k - 1) if k >= 3 else None
            for j, bit in zip(self.segment_logits(k, ex.u, ex.pos, prev), enc.code(k)):
                terms.append(T.cross_entropy(j, bit))
            for e, cat in zip(self.classify_logits(k, ex.u, ex.pos, enc.code(k)), enc.category(k)):
                terms.append(T.cross_entropy(e, self.cat_index[cat]))
        return T.sum_(T.concat(terms))

    # -- inference -------------------------------------------------------
    def predict_codes(self, u: np.ndarray, z1: Sequence[int]) -> list[list[int]]:
        """Bottom-up prediction until one segment spans the sentence."""
        codes = [self.segment_layer2(u, z1)]
        k = 2
        while len(segments_from_code(codes[-1])) > 1:
            if k >= self.cfg.max_height:
                codes[-1] = [0] * len(u)
                break
            k += 1
            codes.append(self.segment_layerk(k, u, z1, codes[-1]))
        return codes

    def parse(self, tokens: Sequence[str], u: np.ndarray, z1: Sequence[int],
              codes: Sequence[Sequence[int]] | None = None) -> str:
        """Bracketed parse. Pass gold ``codes`` (layers 2..h) to evaluate the
        classifier alone."""
        if codes is None:
            codes = self.predict_codes(u, z1)
        codes = [list(c) for c in codes]
        height = len(codes) + 1
        cats = [self.tagset.decode(z1)]
        for k in range(2, height + 1):
            cats.append(self.classify_layer(k, u, z1, codes[k - 2]))
        return build_tree(tokens, cats, codes, height)

    def save(self, path) -> None:
        save_checkpoint(path, self.store, meta={
            "kind": "parser", "config": asdict(self.cfg), "tags": self.tagset.names,
            "categories": self.categories})

    @classmethod
    def load(cls, path) -> "ConstituencyParser":
        values, meta = load_checkpoint(path)
        if meta.get("kind") != "parser":
            raise IngestionError(f"{path} is not a parser checkpoint")
        model = cls(TagSet(meta["tags"]), meta["categories"], ParserConfig(**meta["config"]))
        model.store.copy_from(values)
        return model


def make_examples(trees: Sequence[ParseTree], unbindings: Sequence[np.ndarray],
                  tagset: TagSet) -> list[ParseExample]:
    if len(trees) != len(unbindings):
        raise ContractError(f"{len(trees)} trees but {len(unbindings)} unbinding sequences")
    out = []
    for i, (tree, u) in enumerate(zip(trees, unbindings)):
        enc = derive_gold_layers(tree)
        if len(u) != len(tree.leaves()):
            raise IngestionError(f"tree {i}: {len(u)} unbinding vectors for {len(tree.leaves())} tokens")
        out.append(ParseExample(tree.leaves(), np.asarray(u), tagset.encode(enc.pos), enc))
    return out


def category_inventory(examples: Sequence[ParseExample]) -> list[str]:
    cats = set()
    for ex in examples:
        for k in range(2, ex.layers.height + 1):
            cats.update(ex.layers.category(k))
    return sorted(cats)


def train_parser(examples: Sequence[ParseExample], tagset: TagSet, cfg: ParserConfig,
                 train: TrainConfig) -> tuple[ConstituencyParser, list]:
    if not examples:
        raise ContractError("no training trees")
    deepest = max(ex.layers.height for ex in examples)
    if deepest > cfg.max_layers:
        log.info("training trees reach height %d; layers above %d share parameters",
                 deepest, cfg.max_layers)
    model = ConstituencyParser(tagset, category_inventory(examples), cfg)
    rng = np.random.default_rng(cfg.seed + 1)
    history = fit(model.store, list(examples), model.loss, train, rng, name="parser")
    return model, history


__all__ = [
    "ConstituencyParser", "ParserConfig", "ParseExample", "make_examples", "train_parser",
    "category_inventory", "code_from_segments", "segment_index",
]
