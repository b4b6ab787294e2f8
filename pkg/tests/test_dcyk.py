import numpy as np
import pytest

from dcyk.algebra import DenseBackend, make_backend, phi
from dcyk.calibration import tolerance
from dcyk.cyk import cyk_parse
from dcyk.dcyk import (
    RuleOperators,
    dcyk_binary,
    dcyk_parse,
    dcyk_recognize,
    dcyk_unary,
    decode_chart,
    decode_scores,
    encode_binary_rules,
    encode_unary_rules,
    init_pleft,
)
from dcyk.grammar import builtin_grammar, parse_grammar
from dcyk.hrr import HrrSpace, decode_op, encode, identity_score, sigmoid_mat

TOL = 1e-9


def literal_dcyk(space, g, w):
    """The recognizer written out with dense matrices and no shortcuts."""
    d = space.dim
    E, D = (lambda s: encode(space, str(s))), (lambda s: decode_op(space, str(s)))
    n = len(w)
    unary, binary = encode_unary_rules(space, g), encode_binary_rules(space, g)
    p_left = sum(D(i - 1) @ D(i) @ D(w[i - 1]) for i in range(1, n + 1))
    p_right = np.zeros((d, d))
    for i in range(1, n + 1):
        for a in g.nonterminals:
            if a not in unary:
                continue
            p_a = sigmoid_mat(space, unary[a] @ E(i) @ E(i - 1) @ p_left)
            p_left = p_left + D(i - 1) @ D(i) @ D(a) @ p_a
            p_right = p_right + E(a) @ E(i - 1) @ E(i) @ p_a
    for j in range(2, n + 1):
        for i in range(j - 2, -1, -1):
            for a in g.nonterminals:
                if a not in binary:
                    continue
                z = D(j) @ E(i) @ p_left @ binary[a] @ p_right
                p_a = sigmoid_mat(space, z) * np.eye(d)
                p_left = p_left + D(i) @ D(j) @ D(a) @ p_a
                p_right = p_right + E(a) @ E(i) @ E(j) @ p_a
    return p_left, p_right


@pytest.mark.parametrize("kind, mode", [
    ("stride", "dense"), ("stride", "fft"), ("stride", "circulant"),
    ("random", "dense"), ("random", "fft"),
])
def test_backends_match_literal_pipeline(kind, mode):
    g = builtin_grammar("g0")
    space = HrrSpace(48, seed=5, permutation=kind)
    w = ("a", "c", "b", "c")
    want_l, want_r = literal_dcyk(space, g, w)
    chart = dcyk_parse(space, g, w, backend=make_backend(space, mode))
    assert np.linalg.norm(chart.left_array() - want_l) < TOL
    assert np.linalg.norm(chart.right_array() - want_r) < TOL


def test_rule_operators_match_dense_sums():
    g = builtin_grammar("g1")
    space = HrrSpace(40, seed=2)
    ops = RuleOperators.build(space, g)
    for a, m in encode_unary_rules(space, g).items():
        assert np.allclose(ops.unary[a].toarray(space), m, atol=TOL)
    for a, m in encode_binary_rules(space, g).items():
        assert np.allclose(ops.binary[a].toarray(space), m, atol=TOL)
    assert set(ops.unary) == {a for a, _ in g.unary_rules}
    assert set(ops.binary) == {a for a, _, _ in g.binary_rules}


def test_initial_chart_holds_the_input():
    space = HrrSpace(2000, seed=1)
    w = ("a", "a", "b")
    p_left = DenseBackend(space).from_array(
        make_backend(space).asarray(init_pleft(space, w)))
    for i, tok in enumerate(w, 1):
        q = encode(space, tok) @ encode(space, str(i)) @ encode(space, str(i - 1)) @ p_left
        assert identity_score(q) > 0.7
    q = encode(space, "b") @ encode(space, "1") @ encode(space, "0") @ p_left
    assert abs(identity_score(q)) < 0.3


@pytest.mark.parametrize("n", range(1, 8))
def test_chart_size_is_independent_of_length(n):
    g = builtin_grammar("g0")
    space = HrrSpace(64, seed=0)
    w = ("a",) * (n - 1) + ("b",) if n > 1 else ("b",)
    for mode in ("dense", "circulant"):
        chart = dcyk_parse(space, g, w, backend=make_backend(space, mode))
        assert chart.shape == (64, 64)
        assert chart.left_array().shape == (64, 64)
        assert chart.right_array().shape == (64, 64)
        assert chart.n == n


def test_binary_detections_are_diagonal_and_bounded():
    g = builtin_grammar("fig1")
    space = HrrSpace(32, seed=3)
    ops = RuleOperators.build(space, g)
    backend = make_backend(space, "dense")
    chart = dcyk_unary(space, "aab", ops, backend)
    seen = []

    class Spy(DenseBackend):
        def masked_detection(self, x, y):
            p, diag = super().masked_detection(x, y)
            seen.append(p)
            return p, diag

    chart.backend = Spy(space)
    dcyk_binary(space, chart, ops)
    assert len(seen) == 3
    for p in seen:
        assert np.count_nonzero(p - np.diag(np.diagonal(p))) == 0
        assert 0.0 <= identity_score(p) <= 1.0


def test_unary_detections_stay_in_unit_band():
    g = builtin_grammar("g0")
    space = HrrSpace(1000, seed=4)
    delta = tolerance(1000).delta
    ops = RuleOperators.build(space, g)
    backend = make_backend(space)
    p_left = init_pleft(space, "acb", backend)
    for i in range(1, 4):
        for a, u in ops.unary.items():
            p_a = backend.sigmoid(backend.apply([u, phi(space, str(i)), phi(space, str(i - 1))],
                                                p_left))
            score = identity_score(backend.asarray(p_a))
            assert 0.0 <= score <= 1.0 + delta


def test_trace_records_every_detection():
    g = builtin_grammar("fig1")
    space = HrrSpace(2000, seed=0)
    ops = RuleOperators.build(space, g)
    chart = dcyk_unary(space, "aab", ops, make_backend(space))
    trace = []
    dcyk_binary(space, chart, ops, trace=trace)
    assert [(i, j, a) for i, j, a, *_ in trace] == [(0, 2, "S"), (1, 3, "S"), (0, 3, "S")]
    # (1, 3) is derivable from D E and gets a strong raw detection
    assert trace[1][3] > 0.5


def test_decoder_covers_all_spans_and_nonterminals():
    g = builtin_grammar("g0")
    space = HrrSpace(128, seed=1)
    chart = dcyk_parse(space, g, "acb")
    scores = decode_scores(space, chart, g)
    assert len(scores) == 6 * len(g.nonterminals)
    assert {a for *_, a, _, _ in scores} == set(g.nonterminals)
    assert {(i, j) for i, j, *_ in scores} == {(i, j) for i in range(3) for j in range(i + 1, 4)}


def test_decoder_entry_matches_dense_query():
    g = builtin_grammar("fig1")
    space = HrrSpace(64, seed=6)
    chart = dcyk_parse(space, g, "ab")
    dense = chart.left_array()
    for i, j, a, raw, _ in decode_scores(space, chart, g):
        q = encode(space, a) @ encode(space, str(j)) @ encode(space, str(i)) @ dense
        assert raw == pytest.approx(q[0, 0], abs=TOL)


def test_lower_threshold_gives_superset():
    g = builtin_grammar("g0")
    space = HrrSpace(500, seed=2)
    chart = dcyk_parse(space, g, "acabc")
    scores = decode_scores(space, chart, g)
    loose = decode_chart(space, chart, g, 0.5, scores)
    strict = decode_chart(space, chart, g, 0.99, scores)
    assert strict.triples() <= loose.triples()


def test_to_backend_round_trip():
    g = builtin_grammar("fig1")
    space = HrrSpace(32, seed=1)
    chart = dcyk_parse(space, g, "ab")
    dense = chart.to_backend(DenseBackend(space))
    assert np.allclose(dense.left_array(), chart.left_array())
    assert np.allclose(dense.right_array(), chart.right_array())


def test_recognize_on_easy_sentence():
    g = builtin_grammar("fig1")
    space = HrrSpace(2000, seed=0)
    ok, chart = dcyk_recognize(space, g, None, "ab")
    assert ok
    assert chart == cyk_parse(g, "ab")


def test_input_validation():
    g = builtin_grammar("fig1")
    space = HrrSpace(16)
    with pytest.raises(ValueError):
        dcyk_parse(space, g, "")
    with pytest.raises(ValueError):
        dcyk_parse(space, g, "abz")


def test_fig1_rule_matrices():
    g = builtin_grammar("fig1")
    space = HrrSpace(50, seed=8, permutation="random")
    E, D = (lambda s: encode(space, s)), (lambda s: decode_op(space, s))
    unary, binary = encode_unary_rules(space, g), encode_binary_rules(space, g)
    assert set(unary) == {"D", "E"} and set(binary) == {"S"}
    assert np.allclose(unary["D"], E("a")) and np.allclose(unary["E"], E("b"))
    assert np.allclose(binary["S"], E("D") @ D("E") + E("D") @ D("S"), atol=TOL)


def test_initial_pleft_formula():
    space = HrrSpace(50, seed=8, permutation="random")
    D = lambda s: decode_op(space, s)
    want = D("0") @ D("1") @ D("a") + D("1") @ D("2") @ D("a") + D("2") @ D("3") @ D("b")
    got = init_pleft(space, "aab", make_backend(space, "dense"))
    assert np.allclose(got, want, atol=TOL)


def test_single_token_skips_binary_pass():
    g = builtin_grammar("fig1")
    space = HrrSpace(64, seed=1)
    ops = RuleOperators.build(space, g)
    chart = dcyk_unary(space, "a", ops, make_backend(space))
    trace = []
    after = dcyk_binary(space, chart, ops, trace=trace)
    assert trace == []
    assert np.array_equal(after.p_left.vec, chart.p_left.vec)


def test_unmatched_terminals_decode_to_nothing():
    g = parse_grammar("start: S\nterminals: a x\nS -> S S\nS -> a\n")
    space = HrrSpace(2000, seed=0)
    ok, chart = dcyk_recognize(space, g, None, ("x", "x", "x"))
    assert not ok and chart.triples() == set()
