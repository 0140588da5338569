"""Finite-difference checks over every trainable block, on small seeded
instances."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .autodiff import GradCheckReport, ParamStore, Tensor, finite_diff_check
from .autodiff import tensor as T
from .blocks import FFNN, Attention, BLSTM, FactoredWeight, LSTMCell
from .corpus.vocab import TagSet, Vocabulary
from .decoder import DecoderConfig, DecoderParams, DecoderState, decoder_step, decode_sequence
from .parser.model import ConstituencyParser, ParserConfig
from .tagger import Tagger, TaggerConfig


def _jitter_biases(store: ParamStore, rng: np.random.Generator) -> None:
    # zero biases hide bugs in bias gradients; perturb them
    for p in store:
        if p.data.ndim == 1:
            p.data[:] = rng.normal(scale=0.1, size=p.data.shape)


def _projection(rng, n) -> Tensor:
    return T.constant(rng.normal(size=n))


def _attention(rng):
    store = ParamStore()
    att = Attention(store, "attn", 7, 5, rng)
    v, w = _projection(rng, 7), _projection(rng, 5)
    return store, lambda: T.dot(w, att(v))


def _ffnn(rng):
    store = ParamStore()
    f = FFNN(store, "ffnn", 8, 8, rng)
    v, w = _projection(rng, 8), _projection(rng, 8)
    return store, lambda: T.dot(w, f(v))


def _lstm(rng):
    store = ParamStore()
    cell = LSTMCell(store, "lstm", 4, 5, rng)
    xs = [_projection(rng, 4) for _ in range(3)]
    w = _projection(rng, 5)
    return store, lambda: T.dot(w, cell.run(xs)[-1])


def _blstm(rng):
    store = ParamStore()
    b = BLSTM(store, "blstm", 4, 5, rng)
    xs = [_projection(rng, 4) for _ in range(3)]
    w1, w2 = _projection(rng, 5), _projection(rng, 5)

    def loss():
        hf, hb = b(xs)
        return T.add(T.dot(w1, hf[-1]), T.dot(w2, hb[0]))

    return store, loss


def _factored(rng):
    store = ParamStore()
    fw = FactoredWeight(store, "fw", 3, 5, 6, rng, inner=4)
    h, w = _projection(rng, 5), _projection(rng, 3)
    return store, lambda: T.dot(w, fw.apply(2, h))


def _decoder_step(rng):
    store = ParamStore()
    p = DecoderParams(store, DecoderConfig(vocab_size=6, d=4, hidden=5, context_dim=6), rng)
    v = _projection(rng, 6)

    def loss():
        st = DecoderState.initial(p)
        out, st = decoder_step(p, st, v, token=2)
        out, st = decoder_step(p, st, v, token=4)
        return T.cross_entropy(out.logits, 1)

    return store, loss


def _decoder_sequence(rng):
    store = ParamStore()
    p = DecoderParams(store, DecoderConfig(vocab_size=6, d=4, hidden=5, context_dim=6), rng)
    v = _projection(rng, 6)
    return store, lambda: decode_sequence(p, v, "teacher", [1, 3, 2]).loss


def _vocab(n: int) -> Vocabulary:
    return Vocabulary([f"w{i}" for i in range(n)] + ["<unk>", "</s>"])


def _tagger(rng):
    model = Tagger(_vocab(4), TagSet(["A", "B", "C"]),
                   TaggerConfig(d=4, hidden=5, inner=4, seed=int(rng.integers(1 << 30))))
    u = rng.normal(size=(3, 4))
    return model.store, lambda: T.sum_(T.concat(
        [T.cross_entropy(z, y) for z, y in zip(model.logits(u, [0, 2, 1]), [2, 0, 1])]))


def _parser(rng, part: str):
    model = ConstituencyParser(TagSet(["A", "B", "C"]), ["A", "B", "C", "X", "Y"],
                               ParserConfig(d=4, hidden=5, inner=4, max_layers=3,
                                            seed=int(rng.integers(1 << 30))))
    u = rng.normal(size=(4, 4))
    z1 = [0, 2, 1, 1]
    if part == "segmenter2":
        logits = lambda: model.segment_logits(2, u, z1)
        gold = [0, 1, 0, 0]
    elif part == "segmenter3":
        logits = lambda: model.segment_logits(3, u, z1, [0, 1, 0, 0])
        gold = [0, 1, 1, 1]
    else:
        logits = lambda: model.classify_logits(3, u, z1, [0, 1, 1, 1])
        gold = [3, 4, 4, 4]
    store = ParamStore()
    prefix = {"segmenter2": "seg2", "segmenter3": "seg3", "classifier": "cls3"}[part]
    for name, p in model.store.items():
        if name.startswith(prefix + "."):
            store._params[name] = p  # check only the layer under test
    return store, lambda: T.sum_(T.concat([T.cross_entropy(j, y) for j, y in zip(logits(), gold)]))


BLOCKS: dict[str, Callable] = {
    "attention": _attention,
    "ffnn": _ffnn,
    "lstm": _lstm,
    "blstm": _blstm,
    "factored_weight": _factored,
    "decoder_step": _decoder_step,
    "decoder_sequence": _decoder_sequence,
    "tagger": _tagger,
    "segmenter_layer2": lambda rng: _parser(rng, "segmenter2"),
    "segmenter_layerk": lambda rng: _parser(rng, "segmenter3"),
    "classifier": lambda rng: _parser(rng, "classifier"),
}


def run_gradient_suite(seed: int, tolerance: float = 1e-4,
                       samples: int = 64) -> list[tuple[str, GradCheckReport]]:
    results = []
    for i, (name, build) in enumerate(BLOCKS.items()):
        rng = np.random.default_rng([seed, i])
        store, loss = build(rng)
        _jitter_biases(store, rng)
        results.append((name, finite_diff_check(loss, store, tolerance, samples=samples,
                                                seed=seed + i)))
    return results
