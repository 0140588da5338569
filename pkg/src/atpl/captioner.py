"""Caption generation from precomputed feature vectors with the ATPL decoder."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .autodiff import ParamStore, load_checkpoint, save_checkpoint
from .autodiff import tensor as T
from .corpus.formats import CaptionRecord
from .corpus.vocab import Vocabulary, build_vocab
from .decoder import DecoderConfig, DecoderParams, decode_sequence
from .errors import ContractError, IngestionError
from .training import TrainConfig, fit


@dataclass(frozen=True)
class CaptionerConfig:
    context_dim: int
    d: int = 16
    hidden: int = 64
    max_len: int = 20
    seed: int = 0


class Captioner:
    def __init__(self, vocab: Vocabulary, cfg: CaptionerConfig):
        self.vocab, self.cfg = vocab, cfg
        self.store = ParamStore()
        dcfg = DecoderConfig(vocab_size=len(vocab), d=cfg.d, hidden=cfg.hidden,
                             context_dim=cfg.context_dim, max_len=cfg.max_len,
                             eos_id=vocab.eos_id)
        self.decoder = DecoderParams(self.store, dcfg, np.random.default_rng(cfg.seed), "cap")

    def loss(self, pair):
        features, ids = pair
        return decode_sequence(self.decoder, T.constant(features), "teacher", ids).loss

    def caption(self, features: np.ndarray) -> list[str]:
        out = decode_sequence(self.decoder, T.constant(features), "greedy").tokens
        return self.vocab.decode(out)

    def save(self, path) -> None:
        save_checkpoint(path, self.store, meta={
            "kind": "captioner", "config": asdict(self.cfg), "vocab": self.vocab.tokens})

    @classmethod
    def load(cls, path) -> "Captioner":
        values, meta = load_checkpoint(path)
        if meta.get("kind") != "captioner":
            raise IngestionError(f"{path} is not a captioner checkpoint")
        model = cls(Vocabulary(meta["vocab"]), CaptionerConfig(**meta["config"]))
        model.store.copy_from(values)
        return model


def train_captioner(records: Sequence[CaptionRecord], cfg: CaptionerConfig,
                    train: TrainConfig) -> tuple[Captioner, list]:
    """Every (features, reference) pair is one teacher-forced example."""
    if not records:
        raise ContractError("no caption records to train on")
    vocab = build_vocab([ref for r in records for ref in r.references])
    model = Captioner(vocab, cfg)
    pairs = [(r.features, vocab.encode(ref, strict=True)) for r in records for ref in r.references]
    history = fit(model.store, pairs, model.loss, train,
                  np.random.default_rng(cfg.seed + 1), name="captioner")
    return model, history
