import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atpl.autodiff import finite_diff_check
from atpl.autodiff import tensor as T
from atpl.corpus import ParseTree, TagSet, default_grammar, parse_bracketed, serialize, synth_corpus
from atpl.errors import ContractError, ReconstructionError
from atpl.parser import (ConstituencyParser, ParserConfig, build_tree, build_tree_from_encoding,
                         code_from_segments, constituents, derive_gold_layers, make_examples,
                         parseval_score, segments_from_code, train_parser)
from atpl.training import TrainConfig

JOHN = "(S(NNP John)(VP(VBD hit)(NP(DT the)(NN ball))))"


# -- layer encodings -----------------------------------------------------------

def test_worked_example_codes():
    enc = derive_gold_layers(parse_bracketed(JOHN))
    assert enc.height == 4
    assert enc.code(2) == [0, 1, 0, 0]
    assert enc.code(3) == [0, 1, 1, 1]
    assert enc.code(4) == [0, 0, 0, 0]
    assert enc.category(1) == ["NNP", "VBD", "DT", "NN"]
    assert enc.category(2) == ["NNP", "VBD", "NP", "NP"]
    assert enc.category(3) == ["NNP", "VP", "VP", "VP"]
    assert enc.category(4) == ["S"] * 4


def test_worked_example_reconstruction():
    tree = parse_bracketed(JOHN)
    assert build_tree_from_encoding(tree.leaves(), derive_gold_layers(tree)) == JOHN


def test_single_token_sentence():
    tree = parse_bracketed("(S(NN dog))")
    enc = derive_gold_layers(tree)
    assert enc.height == 2 and enc.code(2) == [0]
    assert build_tree_from_encoding(["dog"], enc) == "(S(NN dog))"


def test_bare_preterminal():
    enc = derive_gold_layers(parse_bracketed("(NN dog)"))
    assert enc.height == 1 and enc.codes == []
    assert build_tree(["dog"], enc.categories, [], 1) == "(NN dog)"


def test_left_branching_tree():
    s = "(S(NP(NP(DT the)(NN dog))(PP(IN near)(NN it)))(VBD ran))"
    tree = parse_bracketed(s)
    assert build_tree_from_encoding(tree.leaves(), derive_gold_layers(tree)) == s


def test_segments_and_codes_are_inverse():
    spans = [(0, 2), (2, 3), (3, 6)]
    code = code_from_segments(spans)
    assert code == [0, 0, 1, 0, 0, 0]
    assert segments_from_code(code) == spans


def test_round_trip_500_synthetic_trees():
    c = synth_corpus(default_grammar(), 500, seed=11)
    for tree in c.trees:
        s = serialize(tree)
        assert build_tree_from_encoding(tree.leaves(), derive_gold_layers(tree)) == s


def _trees():
    leaf = st.builds(lambda tag, w: ParseTree(tag, word=w),
                     st.sampled_from(["A", "B", "C"]), st.sampled_from(["x", "y", "z"]))

    def internal(children):
        return st.builds(lambda label, kids: ParseTree(label, kids),
                         st.sampled_from(["P", "Q", "R"]),
                         st.lists(children, min_size=1, max_size=3))

    def no_repeat_unary(t: ParseTree) -> bool:
        if t.is_preterminal:
            return True
        if len(t.children) == 1 and t.children[0].label == t.label:
            return False
        return all(no_repeat_unary(c) for c in t.children)

    return st.recursive(leaf, internal, max_leaves=12).filter(no_repeat_unary)


@settings(max_examples=200, deadline=None)
@given(_trees())
def test_round_trip_property(tree):
    enc = derive_gold_layers(tree)
    assert build_tree_from_encoding(tree.leaves(), enc) == serialize(tree)


@settings(max_examples=100, deadline=None)
@given(_trees())
def test_codes_nest_and_alternate(tree):
    enc = derive_gold_layers(tree)
    T_ = len(tree.leaves())
    prev = [(t, t + 1) for t in range(T_)]
    for k in range(2, enc.height + 1):
        code = enc.code(k)
        assert code[0] == 0
        spans = segments_from_code(code)
        # every lower segment lies inside one upper segment
        for i, j in prev:
            assert any(a <= i and j <= b for a, b in spans)
        prev = spans
    assert len(prev) == 1


def test_build_tree_rejects_split_top_layer():
    with pytest.raises(ReconstructionError):
        build_tree(["a", "b"], [["A", "B"], ["X", "Y"]], [[0, 1]], 2)


def test_build_tree_rejects_category_change_inside_segment():
    with pytest.raises(ReconstructionError) as info:
        build_tree(["a", "b"], [["A", "B"], ["X", "Y"]], [[0, 0]], 2)
    assert info.value.position == 1


def test_build_tree_rejects_crossing_segments():
    cats = [["A", "B", "C"], ["X", "X", "Y"], ["Z", "Z", "Z"]]
    with pytest.raises(ReconstructionError):
        # layer-2 segment [0,2) straddles the layer-3 boundary at 1
        build_tree(["a", "b", "c"], cats, [[0, 0, 1], [0, 1, 1]], 3)


def test_build_tree_length_checks():
    with pytest.raises(ContractError):
        build_tree([], [], [], 1)
    with pytest.raises(ContractError):
        build_tree(["a", "b"], [["A"], ["S", "S"]], [[0, 0]], 2)
    with pytest.raises(ContractError):
        build_tree(["a"], [["A"], ["S"]], [], 2)


# -- segmenter and classifier ----------------------------------------------------

def small_parser(seed=0, max_layers=4):
    return ConstituencyParser(TagSet(["A", "B", "C"]), ["P", "Q", "R", "S"],
                              ParserConfig(d=4, hidden=5, inner=4, max_layers=max_layers,
                                           seed=seed))


def test_layerk_scores_are_substring_means(rng):
    p = small_parser()
    u = rng.normal(size=(6, 4))
    z1 = [0, 1, 2, 0, 1, 2]
    prev = [0, 0, 1, 0, 0, 0]
    raw = [s.data for s in p._seg(3).scores(p._inputs(u), z1)]
    got = [j.data for j in p.segment_logits(3, u, z1, prev)]
    for i, j in segments_from_code(prev):
        expect = np.mean(raw[i:j], axis=0)
        for t in range(i, j):
            np.testing.assert_allclose(got[t], expect, atol=1e-12)


def test_layerk_bits_constant_on_lower_substrings(rng):
    p = small_parser(3)
    for _ in range(10):
        u = rng.normal(size=(7, 4))
        prev = list(rng.integers(0, 2, 7))
        bits = p.segment_layerk(3, u, [0] * 7, prev)
        for i, j in segments_from_code(prev):
            assert len(set(bits[i:j])) == 1


def test_classifier_constant_on_substrings(rng):
    p = small_parser(4)
    u = rng.normal(size=(5, 4))
    code = [0, 0, 1, 1, 0]
    cats = p.classify_layer(2, u, [1, 1, 0, 2, 2], code)
    for i, j in segments_from_code(code):
        assert len(set(cats[i:j])) == 1


def test_zero_parameters_tie_to_first_class(rng):
    p = small_parser()
    for prm in p.store:
        prm.data[...] = 0.0
    u = rng.normal(size=(3, 4))
    assert p.segment_layer2(u, [0, 1, 2]) == [0, 0, 0]
    assert p.classify_layer(2, u, [0, 1, 2], [0, 1, 0]) == ["P", "P", "P"]


def test_layer2_depends_on_pos_through_factored_weights(rng):
    p = small_parser(5)
    u = rng.normal(size=(3, 4))
    a = [j.data for j in p.segment_logits(2, u, [0, 0, 0])]
    b = [j.data for j in p.segment_logits(2, u, [0, 0, 2])]
    np.testing.assert_array_equal(a[0], b[0])
    assert not np.allclose(a[2], b[2])


def test_segmenter_argument_errors(rng):
    p = small_parser()
    u = rng.normal(size=(3, 4))
    with pytest.raises(ContractError):
        p.segment_logits(3, u, [0, 0, 0])
    with pytest.raises(ContractError):
        p.segment_logits(2, u, [0, 0])
    with pytest.raises(ContractError):
        p.classify_logits(2, u, [0, 0, 0], [0, 1])


def test_segmenter_gradcheck(rng):
    p = small_parser(6)
    u = rng.normal(size=(4, 4))
    z1 = [0, 2, 1, 1]

    def loss():
        terms = [T.cross_entropy(j, y) for j, y in
                 zip(p.segment_logits(3, u, z1, [0, 1, 0, 0]), [0, 1, 1, 1])]
        return T.sum_(T.concat(terms))

    rep = finite_diff_check(loss, p.store, tolerance=1e-4, samples=80, seed=2)
    assert rep.passed, rep


def test_predicted_codes_are_well_formed(rng):
    p = small_parser(7)
    for n in (1, 2, 5, 9):
        u = rng.normal(size=(n, 4))
        codes = p.predict_codes(u, [0] * n)
        assert len(segments_from_code(codes[-1])) == 1
        assert len(codes) + 1 <= p.cfg.max_height
        tree = parse_bracketed(p.parse([f"w{i}" for i in range(n)], u, [0] * n))
        assert tree.leaves() == [f"w{i}" for i in range(n)]


def test_layers_above_cap_share_parameters():
    p = small_parser(max_layers=3)
    assert p._seg(7) is p._seg(3)
    assert p._cls(9) is p._cls(3)


def test_parser_save_load(tmp_path, rng):
    p = small_parser(8)
    p.save(tmp_path / "p.ckpt")
    q = ConstituencyParser.load(tmp_path / "p.ckpt")
    u = rng.normal(size=(4, 4))
    assert p.parse(list("abcd"), u, [0, 1, 2, 0]) == q.parse(list("abcd"), u, [0, 1, 2, 0])
    assert q.categories == p.categories and q.tagset.names == p.tagset.names


def test_parser_fits_tiny_treebank(rng):
    trees = [parse_bracketed(JOHN), parse_bracketed("(S(NP(DT a)(NN dog))(VBD ran))")]
    us = [rng.normal(size=(len(t.leaves()), 4)) for t in trees]
    tagset = TagSet(sorted({tag for t in trees for tag in t.pos_tags()}))
    examples = make_examples(trees, us, tagset)
    model, history = train_parser(examples, tagset,
                                  ParserConfig(d=4, hidden=8, inner=8, max_layers=4, seed=1),
                                  TrainConfig(epochs=60, lr=0.02, batch_size=1))
    assert history[-1][1] < 0.1 * history[0][1]
    for ex, tree in zip(examples, trees):
        assert model.parse(ex.tokens, ex.u, ex.pos) == serialize(tree)


# -- PARSEVAL ------------------------------------------------------------------

def test_constituents_skip_preterminals():
    got = constituents(parse_bracketed(JOHN))
    assert set(got) == {("S", 0, 4), ("VP", 1, 4), ("NP", 2, 4)}


def test_parseval_identity_and_hand_case():
    assert parseval_score([JOHN], [JOHN]).f1 == 1.0
    flat = "(S(NNP John)(VBD hit)(DT the)(NN ball))"
    s = parseval_score([flat], [JOHN])
    assert (s.matched, s.predicted, s.gold) == (1, 1, 3)
    assert s.precision == 1.0 and s.recall == pytest.approx(1 / 3)
    assert s.f1 == pytest.approx(0.5)


def test_parseval_counts_duplicates_as_multisets():
    unary = "(S(S(NN dog)(NN cat)))"
    s = parseval_score([unary], ["(S(NN dog)(NN cat))"])
    assert (s.matched, s.predicted, s.gold) == (1, 2, 1)


def test_parseval_no_constituents():
    s = parseval_score(["(NN dog)"], ["(NN dog)"])
    assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)


def test_parseval_length_mismatch():
    with pytest.raises(ContractError):
        parseval_score([JOHN], [])
