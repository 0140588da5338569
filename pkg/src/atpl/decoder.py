"""The attentive TPR decoder.

At step t, with the running TPR ``S̃`` of the tokens emitted so far and the
LSTM state ``h``::

    ctrl = h ⊕ vec(S̃)
    q    = v ⊙ Attn_S(ctrl)
    S_t  = reshape(FFNN(q), d×d)
    u_t  = U · Attn_u(ctrl)              U: normalized Hadamard, constant
    f_t  = S_t u_t
    logits = W_eᵀ f_t

then the emitted token ``x_t`` is bound with role ``u_t`` into ``S̃`` and
the LSTM is advanced on ``[W_e x_t ; u_t]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import ParamStore, Tensor
from .autodiff import tensor as T
from .blocks import FFNN, Attention, LSTMCell
from .errors import ContractError, DimensionError, GenerationLengthError
from .tpr import hadamard_basis


@dataclass(frozen=True)
class DecoderConfig:
    vocab_size: int
    d: int = 16
    hidden: int = 64
    context_dim: int = 128
    max_len: int = 20
    eos_id: int | None = None


class DecoderParams:
    def __init__(self, store: ParamStore, cfg: DecoderConfig, rng: np.random.Generator,
                 prefix: str = "dec"):
        self.cfg = cfg
        d, H = cfg.d, cfg.hidden
        self.U = T.constant(hadamard_basis(d))
        ctrl = H + d * d
        self.attn_s = Attention(store, f"{prefix}.attn_s", ctrl, cfg.context_dim, rng)
        self.ffnn = FFNN(store, f"{prefix}.ffnn", cfg.context_dim, d * d, rng)
        self.attn_u = Attention(store, f"{prefix}.attn_u", ctrl, d, rng)
        a = np.sqrt(6.0 / (d + cfg.vocab_size))
        emb = rng.uniform(-a, a, size=(d, cfg.vocab_size))
        # zero-mean embedding columns
        emb -= emb.mean(axis=1, keepdims=True)
        self.W_e = store.add(f"{prefix}.W_e", emb)
        self.lstm = LSTMCell(store, f"{prefix}.lstm", 2 * d, H, rng)

    @property
    def eos_id(self) -> int:
        return self.cfg.vocab_size - 1 if self.cfg.eos_id is None else self.cfg.eos_id


@dataclass
class DecoderState:
    S_tilde: Tensor
    h: Tensor
    c: Tensor
    t: int = 0
    tokens: list[int] = field(default_factory=list)

    @classmethod
    def initial(cls, p: DecoderParams) -> "DecoderState":
        d = p.cfg.d
        h, c = p.lstm.zero_state()
        return cls(T.constant(np.zeros((d, d))), h, c)


@dataclass
class StepOutput:
    u: Tensor
    S: Tensor
    f: Tensor
    logits: Tensor
    token: int


def token_logits(W_e: Tensor, f: Tensor) -> Tensor:
    """Similarity of the filler with every embedding column."""
    return T.matvec_t(W_e, f)


def decoder_step(p: DecoderParams, st: DecoderState, v: Tensor,
                 token: int | None = None, advance: bool = True,
                 max_len: int | None = None) -> tuple[StepOutput, DecoderState]:
    """One recursion step. ``token`` forces the emitted token (teacher
    forcing); otherwise the argmax of the logits is emitted (ties go to the
    lowest id). ``advance=False`` skips the LSTM update, for a final step."""
    cfg = p.cfg
    limit = cfg.max_len if max_len is None else max_len
    if st.t >= limit:
        raise GenerationLengthError(f"step {st.t + 1} exceeds max length {limit}")
    if v.data.shape != (cfg.context_dim,):
        raise DimensionError(f"context vector has shape {v.shape}, expected ({cfg.context_dim},)")
    d = cfg.d
    ctrl = T.concat([st.h, T.vec(st.S_tilde)])
    q = T.mul(v, p.attn_s(ctrl))
    S = T.reshape(p.ffnn(q), (d, d))
    u = T.matvec(p.U, p.attn_u(ctrl))
    f = T.matvec(S, u)
    logits = token_logits(p.W_e, f)
    if token is None:
        token = int(np.argmax(logits.data))
    elif not 0 <= token < cfg.vocab_size:
        raise ContractError(f"token id {token} outside vocabulary of size {cfg.vocab_size}")
    emb = T.column(p.W_e, token)
    S_tilde = T.add(st.S_tilde, T.outer(emb, u))
    h, c = st.h, st.c
    if advance:
        h, c = p.lstm.step(T.concat([emb, u]), h, c)
    new_state = DecoderState(S_tilde, h, c, st.t + 1, st.tokens + [token])
    return StepOutput(u, S, f, logits, token), new_state


@dataclass
class DecodeResult:
    tokens: list[int]
    u: list[Tensor]
    loss: Tensor | None
    states: list[DecoderState]


def decode_sequence(p: DecoderParams, v: Tensor, mode: str = "greedy",
                    tokens: list[int] | None = None, max_len: int | None = None) -> DecodeResult:
    """Greedy generation or teacher-forced scoring.

    Teacher forcing scores ``tokens + [EOS]`` and returns the summed
    cross-entropy; the u trace covers the gold tokens only. Greedy decoding
    stops after emitting EOS (which is not returned) or at ``max_len``.
    """
    eos = p.eos_id
    st = DecoderState.initial(p)
    states = [st]
    us: list[Tensor] = []
    if mode == "teacher":
        if not tokens:
            raise ContractError("teacher forcing needs a non-empty gold sequence")
        targets = list(tokens) + [eos]
        losses = []
        for i, tok in enumerate(targets):
            last = i == len(targets) - 1
            out, st = decoder_step(p, st, v, token=tok, advance=not last,
                                   max_len=len(targets))
            losses.append(T.cross_entropy(out.logits, tok))
            if not last:
                us.append(out.u)
                states.append(st)
        loss = losses[0] if len(losses) == 1 else T.sum_(T.concat(losses))
        return DecodeResult(list(tokens), us, loss, states)
    if mode != "greedy":
        raise ContractError(f"unknown decode mode {mode!r}")
    limit = p.cfg.max_len if max_len is None else max_len
    if limit < 1:
        raise ContractError("max_len must be at least 1")
    emitted: list[int] = []
    while st.t < limit:
        out, st = decoder_step(p, st, v, max_len=limit)
        if out.token == eos:
            break
        emitted.append(out.token)
        us.append(out.u)
        states.append(st)
    return DecodeResult(emitted, us, None, states)
