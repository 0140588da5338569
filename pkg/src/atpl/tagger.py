"""POS tagger over unbinding vectors.

A BLSTM reads ``u_1..u_T``; token identity enters only through the
token-conditioned output matrices::

    z_t = softmax(W_fwd(x_t) h_fwd_t + W_bwd(x_t) h_bwd_t)
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .autodiff import ParamStore, Tensor, load_checkpoint, save_checkpoint
from .autodiff import tensor as T
from .blocks import BLSTM, FactoredWeight
from .corpus.vocab import TagSet, Vocabulary
from .errors import ContractError, IngestionError
from .training import TrainConfig, fit


@dataclass(frozen=True)
class TaggerConfig:
    d: int = 16
    hidden: int = 32
    inner: int = 64
    seed: int = 0


@dataclass
class TaggedExample:
    tokens: list[int]
    u: np.ndarray  # T × d
    tags: list[int]


class Tagger:
    def __init__(self, vocab: Vocabulary, tagset: TagSet, cfg: TaggerConfig):
        self.vocab, self.tagset, self.cfg = vocab, tagset, cfg
        rng = np.random.default_rng(cfg.seed)
        self.store = ParamStore()
        P, V = len(tagset), len(vocab)
        self.blstm = BLSTM(self.store, "tag.blstm", cfg.d, cfg.hidden, rng)
        self.w_fwd = FactoredWeight(self.store, "tag.W_fwd", P, cfg.hidden, V, rng, cfg.inner)
        self.w_bwd = FactoredWeight(self.store, "tag.W_bwd", P, cfg.hidden, V, rng, cfg.inner)

    def logits(self, u: np.ndarray, tokens: Sequence[int]) -> list[Tensor]:
        if len(u) != len(tokens):
            raise ContractError(f"{len(u)} unbinding vectors but {len(tokens)} tokens")
        hf, hb = self.blstm([T.constant(row) for row in u])
        return [T.add(self.w_fwd.apply(x, a), self.w_bwd.apply(x, b))
                for x, a, b in zip(tokens, hf, hb)]

    def forward(self, u: np.ndarray, tokens: Sequence[int]) -> list[np.ndarray]:
        """Tag distributions, one P-simplex point per position."""
        return [T.softmax(z).data for z in self.logits(u, tokens)]

    def predict(self, u: np.ndarray, tokens: Sequence[int]) -> list[int]:
        # np.argmax returns the first maximum: ties go to the lowest tag id
        return [int(np.argmax(z.data)) for z in self.logits(u, tokens)]

    def loss(self, ex: TaggedExample) -> Tensor:
        terms = [T.cross_entropy(z, y) for z, y in zip(self.logits(ex.u, ex.tokens), ex.tags)]
        return terms[0] if len(terms) == 1 else T.sum_(T.concat(terms))

    def save(self, path) -> None:
        save_checkpoint(path, self.store, meta={
            "kind": "tagger", "config": asdict(self.cfg),
            "vocab": self.vocab.tokens, "tags": self.tagset.names})

    @classmethod
    def load(cls, path) -> "Tagger":
        values, meta = load_checkpoint(path)
        if meta.get("kind") != "tagger":
            raise IngestionError(f"{path} is not a tagger checkpoint")
        model = cls(Vocabulary(meta["vocab"]), TagSet(meta["tags"]), TaggerConfig(**meta["config"]))
        model.store.copy_from(values)
        return model


def tag_forward(model: Tagger, u: np.ndarray, tokens: Sequence[int]) -> list[np.ndarray]:
    return model.forward(u, tokens)


def check_examples(examples: Sequence[TaggedExample], n_tags: int) -> None:
    for i, ex in enumerate(examples):
        if len(ex.tokens) != len(ex.tags) or len(ex.u) != len(ex.tokens):
            raise IngestionError(f"example {i}: token, tag and unbinding lengths differ")
        for y in ex.tags:
            if not 0 <= y < n_tags:
                raise IngestionError(f"example {i}: unknown tag id {y}")


def train_tagger(model: Tagger, examples: Sequence[TaggedExample], train: TrainConfig,
                 target_accuracy: float | None = None) -> list:
    check_examples(examples, len(model.tagset))
    rng = np.random.default_rng(model.cfg.seed + 1)

    def check(epoch: int, loss: float) -> bool:
        return target_accuracy is not None and eval_accuracy(model, examples) >= target_accuracy

    return fit(model.store, list(examples), model.loss, train, rng, on_epoch=check, name="tagger")


def eval_accuracy(model: Tagger, examples: Sequence[TaggedExample]) -> float:
    if not examples:
        raise ContractError("cannot score an empty dataset")
    hit = total = 0
    for ex in examples:
        pred = model.predict(ex.u, ex.tokens)
        hit += sum(int(a == b) for a, b in zip(pred, ex.tags))
        total += len(ex.tags)
    return hit / total


def confusion_counts(model: Tagger, examples: Sequence[TaggedExample]) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for ex in examples:
        for gold, pred in zip(ex.tags, model.predict(ex.u, ex.tokens)):
            counts[(gold, pred)] = counts.get((gold, pred), 0) + 1
    return counts
