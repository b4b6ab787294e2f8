"""Matrix backends for products of encoding operators.

Every operator the parser multiplies by is a product of three kinds of
factor: ``phi`` (``C_v @ Pi``), ``inv`` (``Pi.T @ C_v.T``) and ``circ``
(``C_v``).  A backend knows how to apply factor chains to chart matrices:

``dense``
    materializes every factor and uses plain matmul, O(d^3) per product.
``fft``
    keeps chart matrices dense but applies factors column-wise by FFT
    convolution plus a row gather, O(d^2 log d).  Works for any ``Pi``.
``circulant``
    needs a stride permutation.  Then ``Pi @ C_v @ Pi.T`` is again
    circulant, so every matrix the parser ever builds has the form
    ``C_v @ Pi**k`` and is stored as ``(v, k)``: O(d log d) per product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .hrr import HrrSpace, circulant, sigmoid

PHI, INV, CIRC = "phi", "inv", "circ"

BACKENDS = ("dense", "fft", "circulant")


@dataclass(frozen=True, eq=False)
class Factor:
    kind: str
    vec: np.ndarray
    label: str = ""

    def __repr__(self):
        return f"Factor({self.kind}, {self.label or '?'})"

    def toarray(self, space: HrrSpace) -> np.ndarray:
        c = circulant(self.vec)
        if self.kind == PHI:
            return c[:, space.permutation_inv]
        if self.kind == INV:
            return np.ascontiguousarray(c[:, space.permutation_inv].T)
        return c


def phi(space: HrrSpace, name: str) -> Factor:
    return Factor(PHI, space.vector(name), name)


def phi_inv(space: HrrSpace, name: str) -> Factor:
    return Factor(INV, space.vector(name), "~" + name)


def cross_correlate(b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vector of the circulant ``C_b @ C_c.T``."""
    d = len(b)
    return sfft.irfft(sfft.rfft(b) * np.conj(sfft.rfft(c)), n=d)


class DenseBackend:
    name = "dense"

    def __init__(self, space: HrrSpace):
        self.space = space
        self.dim = space.dim

    def zeros(self, power: int = 0):
        return np.zeros((self.dim, self.dim))

    def identity(self):
        return np.eye(self.dim)

    def asarray(self, m) -> np.ndarray:
        return np.asarray(m)

    def from_array(self, a: np.ndarray):
        return np.array(a, dtype=float)

    def chain(self, factors) -> np.ndarray:
        out = factors[0].toarray(self.space)
        for f in factors[1:]:
            out = out @ f.toarray(self.space)
        return out

    def apply(self, factors, m):
        for f in reversed(factors):
            m = f.toarray(self.space) @ m
        return m

    def apply_right(self, m, factors):
        for f in factors:
            m = m @ f.toarray(self.space)
        return m

    def sigmoid(self, m):
        return sigmoid(self.space, m)

    def masked_detection(self, x, y):
        """``sigmoid(x @ y) * I`` computed literally, plus the raw diagonal."""
        z = x @ y
        return self.sigmoid(z) * np.eye(self.dim), np.diagonal(z).copy()

    def entry00(self, factors, m) -> float:
        row = np.zeros(self.dim)
        row[0] = 1.0
        for f in factors:
            row = row @ f.toarray(self.space)
        return float(row @ np.asarray(m)[:, 0])


class FFTBackend(DenseBackend):
    name = "fft"

    def _left(self, f: Factor, m: np.ndarray) -> np.ndarray:
        sp = self.space
        if f.kind == PHI:
            m = m[sp.permutation]
        spec = sfft.rfft(f.vec)
        if f.kind == INV:
            spec = np.conj(spec)
        out = sfft.irfft(spec[:, None] * sfft.rfft(m, axis=0), n=self.dim, axis=0)
        if f.kind == INV:
            out = out[sp.permutation_inv]
        return out

    def _right(self, m: np.ndarray, f: Factor) -> np.ndarray:
        sp = self.space
        spec = sfft.rfft(f.vec)
        if f.kind == CIRC:
            # m @ C_v: row-wise correlation
            return sfft.irfft(np.conj(spec)[None, :] * sfft.rfft(m, axis=1), n=self.dim, axis=1)
        if f.kind == PHI:
            # m @ C_v @ Pi == (Pi.T @ C_v.T @ m.T).T
            out = sfft.irfft(np.conj(spec)[None, :] * sfft.rfft(m, axis=1), n=self.dim, axis=1)
            return out[:, sp.permutation_inv]
        # m @ Pi.T @ C_v.T == (C_v @ Pi @ m.T).T
        out = m[:, sp.permutation]
        return sfft.irfft(spec[None, :] * sfft.rfft(out, axis=1), n=self.dim, axis=1)

    def chain(self, factors):
        return self.apply(factors, self.identity())

    def apply(self, factors, m):
        for f in reversed(factors):
            m = self._left(f, m)
        return m

    def apply_right(self, m, factors):
        for f in factors:
            m = self._right(m, f)
        return m

    def masked_detection(self, x, y):
        diag = np.einsum("ij,ji->i", x, y)
        return np.diag(self.sigmoid(diag)), diag

    def entry00(self, factors, m) -> float:
        # row 0 of the chain, built right-to-left on a 1 x d row vector
        row = np.zeros((1, self.dim))
        row[0, 0] = 1.0
        for f in factors:
            row = self._right(row, f)
        return float(row[0] @ np.asarray(m)[:, 0])


class CircPerm:
    """The d x d matrix ``C_vec @ Pi**power`` for a stride permutation."""

    __slots__ = ("vec", "power")

    def __init__(self, vec: np.ndarray, power: int):
        self.vec = vec
        self.power = int(power)

    @property
    def shape(self):
        return (len(self.vec), len(self.vec))

    def __add__(self, other: "CircPerm") -> "CircPerm":
        if self.power != other.power:
            raise ValueError(f"cannot add Pi**{self.power} and Pi**{other.power} terms")
        return CircPerm(self.vec + other.vec, self.power)

    def __repr__(self):
        return f"CircPerm(d={len(self.vec)}, power={self.power})"


class CirculantBackend:
    name = "circulant"

    def __init__(self, space: HrrSpace):
        if space.stride is None:
            raise ValueError("the circulant backend needs permutation='stride'")
        self.space = space
        self.dim = space.dim
        self._powers: dict[int, np.ndarray] = {}

    def _perm(self, k: int) -> np.ndarray:
        idx = self._powers.get(k)
        if idx is None:
            idx = self._powers[k] = self.space.stride_power(k)
        return idx

    def factor(self, f: Factor) -> CircPerm:
        if f.kind == PHI:
            return CircPerm(np.asarray(f.vec, dtype=float), 1)
        if f.kind == INV:
            # Pi.T @ C_v.T == C_{rev(v) o Pi**-1} @ Pi**-1
            rev = np.roll(f.vec[::-1], 1)
            return CircPerm(rev[self._perm(-1)], -1)
        return CircPerm(np.asarray(f.vec, dtype=float), 0)

    def mul(self, a: CircPerm, b: CircPerm) -> CircPerm:
        # C_u Pi^k C_v Pi^l == C_u C_{v o Pi^k} Pi^(k+l)
        v = b.vec if a.power == 0 else b.vec[self._perm(a.power)]
        prod = sfft.irfft(sfft.rfft(a.vec) * sfft.rfft(v), n=self.dim)
        return CircPerm(prod, a.power + b.power)

    def zeros(self, power: int = 0):
        return CircPerm(np.zeros(self.dim), power)

    def identity(self):
        e = np.zeros(self.dim)
        e[0] = 1.0
        return CircPerm(e, 0)

    def asarray(self, m: CircPerm) -> np.ndarray:
        cols = self._perm(-m.power)
        return circulant(m.vec)[:, cols]

    def from_array(self, a: np.ndarray) -> CircPerm:
        raise TypeError("dense matrices cannot be converted to the circulant form")

    def chain(self, factors) -> CircPerm:
        out = self.factor(factors[0])
        for f in factors[1:]:
            out = self.mul(out, self.factor(f))
        return out

    def apply(self, factors, m: CircPerm) -> CircPerm:
        for f in reversed(factors):
            m = self.mul(self.factor(f), m)
        return m

    def apply_right(self, m: CircPerm, factors) -> CircPerm:
        for f in factors:
            m = self.mul(m, self.factor(f))
        return m

    def sigmoid(self, m: CircPerm) -> CircPerm:
        # every entry of C_v Pi^k is some v[t]
        return CircPerm(sigmoid(self.space, m.vec), m.power)

    def diagonal(self, m: CircPerm) -> np.ndarray:
        r = np.arange(self.dim)
        return m.vec[(r - self._perm(-m.power)) % self.dim]

    def masked_detection(self, x: CircPerm, y: CircPerm):
        z = self.mul(x, y)
        diag = self.diagonal(z)
        if z.power != 0 and not np.allclose(diag, diag[0], rtol=0, atol=1e-12):
            raise ValueError("masked product is not a scaled identity")
        e = np.zeros(self.dim)
        e[0] = sigmoid(self.space, diag[0])
        return CircPerm(e, 0), diag

    def entry00(self, factors, m: CircPerm) -> float:
        z = self.mul(self.chain(factors), m)
        return float(z.vec[(0 - self._perm(-z.power)[0]) % self.dim])


def make_backend(space: HrrSpace, mode: str = "structured"):
    """``structured`` picks the fastest exact backend for ``space``."""
    if mode == "structured":
        mode = "circulant" if space.stride is not None else "fft"
    if mode == "dense":
        return DenseBackend(space)
    if mode == "fft":
        return FFTBackend(space)
    if mode == "circulant":
        return CirculantBackend(space)
    raise ValueError(f"unknown matmul mode {mode!r}")
