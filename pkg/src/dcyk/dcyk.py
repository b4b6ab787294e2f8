"""CYK recognition carried out on two d x d matrices.

The chart is the pair ``(p_left, p_right)``.  A triple ``(i, j, X)``
contributes ``phi_inv(i) phi_inv(j) phi_inv(X)`` to ``p_left`` and
``phi(X) phi(i) phi(j)`` to ``p_right``; the input token ``a_i`` is stored
as the triple ``(i-1, i, a_i)`` in ``p_left`` only.

Rule firing:

* unary, at position ``i``:
  ``P_A = sigmoid(U_A phi(i) phi(i-1) p_left)`` with ``U_A = sum phi(a)``;
* binary, at span ``(i, j)``:
  ``P_A = sigmoid(phi_inv(j) phi(i) p_left B_A p_right) * I`` with
  ``B_A = sum phi(B) phi_inv(C)``.  Left-cancelling ``phi_inv(B)`` against
  ``phi(B)`` and ``phi_inv(C)`` against ``phi(C)`` merges ``(i, k)`` and
  ``(k, j)`` into ``phi_inv(i) phi(j)``, which the span prefix turns into I.

Each detection gates the insertion of ``(i, j, A)`` into both matrices,
immediately, so later detections in the same pass see it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .algebra import CIRC, PHI, Factor, cross_correlate, make_backend, phi, phi_inv
from .cyk import Chart
from .grammar import Grammar
from .hrr import HrrSpace, decode_op, encode, sigmoid

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.99


@dataclass
class DistChart:
    p_left: object
    p_right: object
    n: int
    backend: object

    @property
    def shape(self):
        return self.p_left.shape

    def left_array(self) -> np.ndarray:
        return self.backend.asarray(self.p_left)

    def right_array(self) -> np.ndarray:
        return self.backend.asarray(self.p_right)

    def to_backend(self, backend) -> "DistChart":
        """Re-express the chart for another backend (dense targets only)."""
        return DistChart(backend.from_array(self.left_array()),
                         backend.from_array(self.right_array()), self.n, backend)


@dataclass
class RuleOperators:
    unary: dict[str, Factor]
    binary: dict[str, Factor]
    nonterminal_order: tuple[str, ...]

    @classmethod
    def build(cls, space: HrrSpace, g: Grammar) -> "RuleOperators":
        unary, binary = {}, {}
        by_lhs_u, by_lhs_b = g.unary_by_lhs(), g.binary_by_lhs()
        for a in g.nonterminals:
            if a in by_lhs_u:
                # sum of C_t @ Pi == C_(sum t) @ Pi
                vec = np.sum([space.vector(t) for t in by_lhs_u[a]], axis=0)
                unary[a] = Factor(PHI, vec, f"U:{a}")
            if a in by_lhs_b:
                # phi(B) phi_inv(C) == C_B C_C.T, a plain circulant
                vec = np.sum([cross_correlate(space.vector(b), space.vector(c))
                              for b, c in by_lhs_b[a]], axis=0)
                binary[a] = Factor(CIRC, vec, f"B:{a}")
        return cls(unary, binary, tuple(g.nonterminals))


def encode_unary_rules(space: HrrSpace, g: Grammar) -> dict[str, np.ndarray]:
    """Dense ``U_A = sum over A -> a of phi(a)``, one per unary left-hand side."""
    out: dict[str, np.ndarray] = {}
    for a, t in g.unary_rules:
        m = encode(space, t)
        out[a] = out[a] + m if a in out else m
    return {a: out[a] for a in g.nonterminals if a in out}


def encode_binary_rules(space: HrrSpace, g: Grammar) -> dict[str, np.ndarray]:
    """Dense ``B_A = sum over A -> B C of phi(B) @ phi_inv(C)``."""
    out: dict[str, np.ndarray] = {}
    for a, b, c in g.binary_rules:
        m = encode(space, b) @ decode_op(space, c)
        out[a] = out[a] + m if a in out else m
    return {a: out[a] for a in g.nonterminals if a in out}


def _idx(k: int) -> str:
    return str(k)


def init_pleft(space: HrrSpace, w, backend=None):
    """Sum of ``phi_inv(i-1) phi_inv(i) phi_inv(a_i)`` over the input."""
    backend = backend or make_backend(space)
    w = tuple(w)
    p_left = backend.zeros(power=-3)
    for i in range(1, len(w) + 1):
        term = backend.chain([phi_inv(space, _idx(i - 1)), phi_inv(space, _idx(i)),
                              phi_inv(space, w[i - 1])])
        p_left = p_left + term
    return p_left


def dcyk_unary(space: HrrSpace, w, ops: RuleOperators, backend=None) -> DistChart:
    backend = backend or make_backend(space)
    w = tuple(w)
    n = len(w)
    p_left = init_pleft(space, w, backend)
    p_right = backend.zeros(power=3)
    for i in range(1, n + 1):
        lo, hi = _idx(i - 1), _idx(i)
        for a in ops.nonterminal_order:
            u = ops.unary.get(a)
            if u is None:
                continue
            detect = backend.apply([u, phi(space, hi), phi(space, lo)], p_left)
            p_a = backend.sigmoid(detect)
            p_left = p_left + backend.apply(
                [phi_inv(space, lo), phi_inv(space, hi), phi_inv(space, a)], p_a)
            p_right = p_right + backend.apply(
                [phi(space, a), phi(space, lo), phi(space, hi)], p_a)
    return DistChart(p_left, p_right, n, backend)


def dcyk_binary(space: HrrSpace, chart: DistChart, ops: RuleOperators,
                trace: list | None = None) -> DistChart:
    """Fire binary rules span by span, widest-last, right-to-left within a width.

    ``trace``, when given, collects ``(i, j, A, diag00, identity_score)`` of
    every raw detection before the sigmoid.
    """
    backend = chart.backend
    p_left, p_right = chart.p_left, chart.p_right
    for j in range(2, chart.n + 1):
        for i in range(j - 2, -1, -1):
            si, sj = _idx(i), _idx(j)
            for a in ops.nonterminal_order:
                b_a = ops.binary.get(a)
                if b_a is None:
                    continue
                x = backend.apply([phi_inv(space, sj), phi(space, si)], p_left)
                y = backend.apply([b_a], p_right)
                p_a, diag = backend.masked_detection(x, y)
                if trace is not None:
                    trace.append((i, j, a, float(diag[0]), float(np.mean(diag))))
                log.debug("binary (%d,%d,%s): raw00=%.4f identity_score=%.4f",
                          i, j, a, diag[0], np.mean(diag))
                p_left = p_left + backend.apply(
                    [phi_inv(space, si), phi_inv(space, sj), phi_inv(space, a)], p_a)
                p_right = p_right + backend.apply(
                    [phi(space, a), phi(space, si), phi(space, sj)], p_a)
    return DistChart(p_left, p_right, chart.n, backend)


def decode_scores(space: HrrSpace, chart: DistChart, g: Grammar):
    """Raw entry (0, 0) of ``phi(A) phi(j) phi(i) p_left`` for every nonterminal and span."""
    backend = chart.backend
    rows = []
    for i in range(chart.n):
        for j in range(i + 1, chart.n + 1):
            for a in g.nonterminals:
                raw = backend.entry00([phi(space, a), phi(space, _idx(j)), phi(space, _idx(i))],
                                      chart.p_left)
                rows.append((i, j, a, raw, float(sigmoid(space, raw))))
    return rows


def decode_chart(space: HrrSpace, chart: DistChart, g: Grammar,
                 threshold: float = DEFAULT_THRESHOLD, scores=None) -> Chart:
    if scores is None:
        scores = decode_scores(space, chart, g)
    out = Chart(chart.n)
    for i, j, a, _, s in scores:
        if s > threshold:
            out.add(i, j, a)
    return out


def dcyk_parse(space: HrrSpace, g: Grammar, w, ops: RuleOperators | None = None,
               backend=None) -> DistChart:
    """Unary then binary pass; returns the filled distributed chart."""
    w = tuple(w)
    if not w:
        raise ValueError("cannot parse the empty sentence")
    unknown = set(w) - set(g.terminals)
    if unknown:
        raise ValueError(f"unknown terminal(s) {sorted(unknown)}")
    ops = ops or RuleOperators.build(space, g)
    backend = backend or make_backend(space)
    chart = dcyk_unary(space, w, ops, backend)
    return dcyk_binary(space, chart, ops)


def dcyk_recognize(space: HrrSpace, g: Grammar, ops: RuleOperators | None, w,
                   threshold: float = DEFAULT_THRESHOLD, backend=None):
    """Full pipeline: returns ``(start in decoded (0, n), decoded chart)``."""
    dist = dcyk_parse(space, g, w, ops, backend)
    decoded = decode_chart(space, dist, g, threshold)
    return g.start in decoded[(0, dist.n)], decoded

