"""Holographic reduced representations over d x d real matrices.

A symbol ``s`` owns a random vector drawn from N(0, 1/d) per entry.  Its
encoding is ``phi(s) = C_s @ Pi`` where ``C_s`` is the circulant matrix of
the vector and ``Pi`` a permutation matrix shared by every symbol; the
approximate inverse is ``phi_inv(s) = Pi.T @ C_s.T``.  Products of
encodings bind symbols into ordered strings, sums collect strings into
(multi)sets, and left-multiplication by inverses unbinds them.
"""
from __future__ import annotations

import hashlib
import math
import threading

import numpy as np
from scipy.special import expit

PERMUTATION_KINDS = ("stride", "random")

_SEED_MASK = (1 << 64) - 1
# Stride multipliers of small multiplicative order make Pi**k collapse to the
# identity inside the longest operator chains the parser builds.
_MIN_STRIDE_ORDER = 8


def _name_words(name: str) -> list[int]:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=16).digest()
    return [int.from_bytes(digest[k:k + 4], "little") for k in range(0, 16, 4)]


def _multiplicative_order(m: int, d: int, limit: int) -> int:
    x = m % d
    for k in range(1, limit + 1):
        if x == 1:
            return k
        x = (x * m) % d
    return limit + 1


def _choose_stride(d: int, rng: np.random.Generator) -> int:
    units = [m for m in range(2, d) if math.gcd(m, d) == 1]
    if not units:
        return 1
    orders = {m: _multiplicative_order(m, d, _MIN_STRIDE_ORDER) for m in units}
    good = [m for m in units if orders[m] > _MIN_STRIDE_ORDER]
    if not good:
        best = max(orders.values())
        good = [m for m in units if orders[m] == best]
    return int(good[rng.integers(len(good))])


class HrrSpace:
    """The distributed universe shared by a grammar, a sentence and a chart.

    All randomness derives from ``seed``: symbol vectors are keyed by
    ``(seed, name)`` and the permutation by ``seed`` alone, so two spaces with
    the same ``(dim, seed, permutation)`` are bitwise interchangeable.

    ``permutation="stride"`` draws ``Pi`` from the stride maps
    ``k -> m*k mod d``; these conjugate circulants into circulants, which is
    what lets the structured backend run on d-vectors.  ``"random"`` draws a
    uniform permutation.
    """

    def __init__(self, dim: int, seed: int = 0, beta: float = 40.0,
                 permutation: str = "stride"):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        if beta <= 0:
            raise ValueError(f"beta must be positive, got {beta}")
        if permutation not in PERMUTATION_KINDS:
            raise ValueError(f"unknown permutation kind {permutation!r}")
        self.dim = int(dim)
        self.seed = int(seed) & _SEED_MASK
        self.beta = float(beta)
        self.permutation_kind = permutation
        rng = np.random.default_rng([self.seed, 1])
        if permutation == "stride":
            self.stride = _choose_stride(self.dim, rng)
            self.permutation = (np.arange(self.dim) * self.stride) % self.dim
        else:
            self.stride = None
            self.permutation = rng.permutation(self.dim)
        self.permutation_inv = np.argsort(self.permutation)
        self._vectors: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return (f"HrrSpace(dim={self.dim}, seed={self.seed}, beta={self.beta}, "
                f"permutation={self.permutation_kind!r})")

    def vector(self, name: str) -> np.ndarray:
        vec = self._vectors.get(name)
        if vec is None:
            rng = np.random.default_rng([self.seed, 0, *_name_words(name)])
            vec = rng.normal(0.0, 1.0 / math.sqrt(self.dim), self.dim)
            vec.setflags(write=False)
            with self._lock:
                vec = self._vectors.setdefault(name, vec)
        return vec

    def warm(self, names) -> None:
        """Populate the cache eagerly so the space can be shared read-only."""
        for name in names:
            self.vector(name)

    def permutation_matrix(self) -> np.ndarray:
        """Dense ``Pi`` with ``(Pi @ M)[r] == M[permutation[r]]``."""
        pi = np.zeros((self.dim, self.dim))
        pi[np.arange(self.dim), self.permutation] = 1.0
        return pi

    def stride_power(self, k: int) -> np.ndarray:
        """Index map of ``Pi**k`` for a stride permutation: ``r -> m**k * r``."""
        if self.stride is None:
            raise ValueError("stride_power needs a stride permutation")
        mult = pow(self.stride, k, self.dim) if self.dim > 1 else 0
        return (np.arange(self.dim) * mult) % self.dim


def circulant(vec: np.ndarray) -> np.ndarray:
    """Dense circulant with ``C[r, c] == vec[(r - c) mod d]``."""
    d = len(vec)
    idx = (np.arange(d)[:, None] - np.arange(d)[None, :]) % d
    return np.asarray(vec)[idx]


def vector_of(space: HrrSpace, name: str) -> np.ndarray:
    return space.vector(str(name))


def encode(space: HrrSpace, name: str) -> np.ndarray:
    """phi(name) = C @ Pi as a dense matrix."""
    return circulant(space.vector(str(name)))[:, space.permutation_inv]


def decode_op(space: HrrSpace, name: str) -> np.ndarray:
    """phi_inv(name) = Pi.T @ C.T, i.e. the transpose of :func:`encode`."""
    return np.ascontiguousarray(encode(space, name).T)


def sigmoid(space_or_beta, x):
    beta = space_or_beta.beta if isinstance(space_or_beta, HrrSpace) else float(space_or_beta)
    return expit((np.asarray(x, dtype=float) - 0.5) * beta)


def sigmoid_mat(space: HrrSpace, m: np.ndarray) -> np.ndarray:
    """Elementwise 1 / (1 + exp(-(x - 0.5) * beta))."""
    return sigmoid(space, m)


def identity_score(m: np.ndarray) -> float:
    """Mean of the diagonal: ~1 for a match, ~0 for a mismatch, ~k for k copies."""
    return float(np.mean(np.diagonal(m)))
