"""Sentence autoencoder whose decoder is the ATPL decoder.

An LSTM encodes the sentence into its final hidden state; that vector is
the decoder's context. Trained to reproduce its input, the decoder's role
trace ``u_1..u_T`` on a sentence is that sentence's unbinding sequence.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .autodiff import ParamStore, Tensor, load_checkpoint, save_checkpoint
from .autodiff import tensor as T
from .blocks import LSTMCell
from .corpus.formats import UnbindingSequence
from .corpus.vocab import Vocabulary
from .decoder import DecoderConfig, DecoderParams, decode_sequence
from .errors import ContractError, IngestionError
from .training import TrainConfig, fit

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AutoencoderConfig:
    d: int = 16
    hidden: int = 64
    context_dim: int = 128
    max_len: int = 20
    seed: int = 0


class Autoencoder:
    def __init__(self, vocab: Vocabulary, cfg: AutoencoderConfig):
        self.vocab = vocab
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.store = ParamStore()
        dcfg = DecoderConfig(vocab_size=len(vocab), d=cfg.d, hidden=cfg.hidden,
                             context_dim=cfg.context_dim, max_len=cfg.max_len,
                             eos_id=vocab.eos_id)
        self.decoder = DecoderParams(self.store, dcfg, rng, prefix="dec")
        # final encoder state is the decoder context, so its width is context_dim
        self.encoder = LSTMCell(self.store, "enc", cfg.d, cfg.context_dim, rng)

    def _ids(self, sentence: Sequence, strict: bool = True) -> list[int]:
        if not sentence:
            raise ContractError("sentence must be non-empty")
        if isinstance(sentence[0], str):
            return self.vocab.encode(sentence, strict=strict)
        return [int(i) for i in sentence]

    def encode(self, ids: Sequence[int]) -> Tensor:
        xs = [T.column(self.decoder.W_e, i) for i in ids]
        return self.encoder.run(xs)[-1]

    def loss(self, ids: Sequence[int]) -> Tensor:
        return decode_sequence(self.decoder, self.encode(ids), "teacher", list(ids)).loss

    def reconstruct(self, sentence: Sequence) -> list[int]:
        ids = self._ids(sentence)
        return decode_sequence(self.decoder, self.encode(ids), "greedy",
                               max_len=max(self.cfg.max_len, len(ids) + 1)).tokens

    def save(self, path) -> None:
        save_checkpoint(path, self.store, meta={
            "kind": "autoencoder", "config": asdict(self.cfg), "vocab": self.vocab.tokens})

    @classmethod
    def load(cls, path) -> "Autoencoder":
        values, meta = load_checkpoint(path)
        if meta.get("kind") != "autoencoder":
            raise IngestionError(f"{path} is not an autoencoder checkpoint")
        model = cls(Vocabulary(meta["vocab"]), AutoencoderConfig(**meta["config"]))
        model.store.copy_from(values)
        return model


def encode_corpus(vocab: Vocabulary, corpus: Sequence[Sequence[str]]) -> list[list[int]]:
    out = []
    for lineno, sent in enumerate(corpus, 1):
        if not sent:
            raise IngestionError(f"empty sentence on line {lineno}")
        out.append(vocab.encode(sent, strict=True, line=lineno))
    return out


def train_autoencoder(corpus: Sequence[Sequence[str]], vocab: Vocabulary,
                      cfg: AutoencoderConfig, train: TrainConfig,
                      target_accuracy: float | None = None) -> tuple[Autoencoder, list]:
    """Fit by teacher-forced reconstruction cross-entropy.

    With ``target_accuracy`` set, training stops at the end of the first
    epoch whose greedy reconstruction accuracy reaches it (checked every
    fifth epoch to keep the loop cheap).
    """
    if not corpus:
        raise ContractError("training corpus is empty")
    ids = encode_corpus(vocab, corpus)
    longest = max(len(s) for s in ids)
    if longest > cfg.d:
        log.warning("sentences up to %d tokens exceed d=%d; unbinding is inexact beyond d",
                    longest, cfg.d)
    model = Autoencoder(vocab, cfg)
    rng = np.random.default_rng(cfg.seed + 1)

    def check(epoch: int, loss: float) -> bool:
        if target_accuracy is None or epoch % 5:
            return False
        acc = reconstruction_accuracy(model, ids)
        log.info("autoencoder epoch %d reconstruction accuracy %.4f", epoch, acc)
        return acc >= target_accuracy

    history = fit(model.store, ids, model.loss, train, rng, on_epoch=check, name="autoencoder")
    return model, history


def reconstruction_accuracy(model: Autoencoder, corpus: Sequence[Sequence]) -> float:
    """Fraction of gold positions reproduced by greedy decoding."""
    hit = total = 0
    for sent in corpus:
        ids = model._ids(sent)
        out = model.reconstruct(ids)
        hit += sum(1 for a, b in zip(out, ids) if a == b)
        total += len(ids)
    return hit / total


def extract_unbindings(model: Autoencoder, sentence: Sequence, sentence_id: str = "0",
                       strict: bool = True) -> UnbindingSequence:
    """Teacher-force the decoder over the sentence itself and keep u_1..u_T.
    With ``strict=False`` unknown words go through the ``<unk>`` column."""
    ids = model._ids(sentence, strict)
    res = decode_sequence(model.decoder, model.encode(ids), "teacher", ids)
    return UnbindingSequence(sentence_id, np.stack([u.data for u in res.u]))
