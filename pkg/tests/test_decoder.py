import numpy as np
import pytest

from atpl.autodiff import ParamStore, finite_diff_check
from atpl.autodiff import tensor as T
from atpl.decoder import (DecoderConfig, DecoderParams, DecoderState, decode_sequence,
                          decoder_step, token_logits)
from atpl.errors import ContractError, DimensionError, GenerationLengthError
from atpl.tpr import bind_sequence, hadamard_basis


def make(seed=0, V=7, d=4, H=5, ctx=6, max_len=8):
    store = ParamStore()
    cfg = DecoderConfig(vocab_size=V, d=d, hidden=H, context_dim=ctx, max_len=max_len)
    return store, DecoderParams(store, cfg, np.random.default_rng(seed))


def test_first_step_is_deterministic():
    outs = []
    for _ in range(2):
        _, p = make(3)
        v = T.constant(np.random.default_rng(9).normal(size=6))
        out, st = decoder_step(p, DecoderState.initial(p), v)
        outs.append((out.u.data.tobytes(), out.S.data.tobytes(), out.logits.data.tobytes(),
                     st.S_tilde.data.tobytes(), st.h.data.tobytes()))
    assert outs[0] == outs[1]


def test_one_hot_attention_selects_hadamard_column():
    _, p = make()
    U = hadamard_basis(4)
    for j in range(4):
        p.attn_u = lambda ctrl, j=j: T.constant(np.eye(4)[j])
        out, _ = decoder_step(p, DecoderState.initial(p), T.constant(np.ones(6)))
        np.testing.assert_array_equal(out.u.data, U[:, j])


def test_teacher_forced_s_tilde_equals_binding(rng):
    _, p = make(1)
    v = T.constant(rng.normal(size=6))
    res = decode_sequence(p, v, "teacher", [2, 5, 1])
    emb = [p.W_e.data[:, x] for x in (2, 5, 1)]
    expected = bind_sequence(emb, [u.data for u in res.u])
    assert np.abs(res.states[-1].S_tilde.data - expected).max() <= 1e-12
    # and at every intermediate step
    for t, st in enumerate(res.states):
        partial = bind_sequence(emb[:t], [u.data for u in res.u[:t]], d=4)
        assert np.abs(st.S_tilde.data - partial).max() <= 1e-12


def test_greedy_forced_argmax_repeats_token():
    store = ParamStore()
    cfg = DecoderConfig(vocab_size=2, d=2, hidden=3, context_dim=4, max_len=5, eos_id=0)
    p = DecoderParams(store, cfg, np.random.default_rng(0))
    p.ffnn.W.data[:] = 0
    p.ffnn.b.data[:] = [0.5, -0.2, 0.3, 0.9]
    p.attn_u.W.data[:] = 0
    p.attn_s.W.data[:] = 0
    S = np.tanh(p.ffnn.b.data).reshape(2, 2)
    f = S @ (hadamard_basis(2) @ np.full(2, 0.5))
    p.W_e.data[:] = np.stack([-f, f], axis=1)
    res = decode_sequence(p, T.constant(np.ones(4)), "greedy")
    assert res.tokens == [1] * 5
    assert len(res.u) == 5


def test_teacher_loss_is_sum_of_step_cross_entropies(rng):
    _, p = make(2)
    v = T.constant(rng.normal(size=6))
    gold = [3, 1, 4]
    res = decode_sequence(p, v, "teacher", gold)
    st = DecoderState.initial(p)
    total = 0.0
    for tok in gold + [p.eos_id]:
        out, st = decoder_step(p, st, v, token=tok)
        z = out.logits.data
        total += np.log(np.sum(np.exp(z - z.max()))) + z.max() - z[tok]
    assert abs(res.loss.item() - total) <= 1e-10


def test_trace_lengths(rng):
    _, p = make(4)
    v = T.constant(rng.normal(size=6))
    greedy = decode_sequence(p, v, "greedy")
    assert len(greedy.u) == len(greedy.tokens) <= p.cfg.max_len
    forced = decode_sequence(p, v, "teacher", [1, 2, 3, 4])
    assert len(forced.u) == 4


def test_teacher_needs_tokens(rng):
    _, p = make()
    with pytest.raises(ContractError):
        decode_sequence(p, T.constant(np.zeros(6)), "teacher", [])


def test_context_dimension_checked():
    _, p = make()
    with pytest.raises(DimensionError):
        decoder_step(p, DecoderState.initial(p), T.constant(np.zeros(5)))


def test_step_past_max_length():
    _, p = make(max_len=1)
    v = T.constant(np.zeros(6))
    _, st = decoder_step(p, DecoderState.initial(p), v)
    with pytest.raises(GenerationLengthError):
        decoder_step(p, st, v)


@pytest.mark.parametrize("max_len", [1, 2, 3, 10])
def test_greedy_halts(max_len, rng):
    _, p = make(5, max_len=max_len)
    assert len(decode_sequence(p, T.constant(rng.normal(size=6)), "greedy").tokens) <= max_len


def test_u_coordinates_lie_in_unit_interval(rng):
    _, p = make(6)
    res = decode_sequence(p, T.constant(rng.normal(size=6)), "teacher", [1, 2, 3, 4, 5])
    U = hadamard_basis(4)
    for u in res.u:
        coef = U.T @ u.data
        assert np.abs(coef).max() < 1 and np.all(coef > 0)


def test_embeddings_zero_mean_at_init():
    _, p = make()
    assert np.abs(p.W_e.data.mean(axis=1)).max() < 1e-12


def test_hadamard_not_a_parameter():
    store, p = make()
    assert all(t is not p.U for t in store)
    assert not p.U.requires_grad


def test_token_logits_orthogonal_embeddings():
    W = hadamard_basis(8)[:, :5] * 3.0
    for j in range(5):
        assert int(np.argmax(token_logits(T.constant(W), T.constant(W[:, j])).data)) == j


def test_token_logits_zero_filler():
    z = token_logits(T.constant(np.ones((3, 4))), T.constant(np.zeros(3)))
    np.testing.assert_array_equal(z.data, np.zeros(4))
    np.testing.assert_array_equal(T.softmax(z).data, np.full(4, 0.25))


def test_token_logits_loop(rng):
    W, f = rng.normal(size=(4, 6)), rng.normal(size=4)
    z = token_logits(T.constant(W), T.constant(f)).data
    for j in range(6):
        assert abs(z[j] - sum(W[i, j] * f[i] for i in range(4))) <= 1e-12


def test_decoder_gradcheck(rng):
    store, p = make(7, V=5)
    for prm in store:
        if prm.name.endswith(".b") or ".b_" in prm.name:
            prm.data[:] = rng.normal(size=prm.data.shape) * 0.1
    v = T.constant(rng.normal(size=6))
    rep = finite_diff_check(lambda: decode_sequence(p, v, "teacher", [1, 3, 2]).loss,
                            store, 1e-4, samples=200, seed=1)
    assert rep.passed, rep
