"""Sampling oracle for the algebra tolerances epsilon1 and delta.

For a symbol vector ``a`` the products involved are all circulant up to a
permutation that cancels, so their Frobenius norms follow from the DFT
``A`` of ``a`` without building any d x d matrix:

* ``||phi(a) phi_inv(a) - I||_F / sqrt(d) == sqrt(mean((|A|^2 - 1)^2))``,
  and the same for ``phi_inv(a) phi(a)``;
* ``||phi(a) phi_inv(b)||_F / sqrt(d) == sqrt(mean(|A|^2 |B|^2))``;
* ``identity_score(phi_inv(a) (k phi(a))) == k * a.a``.

The tolerances guard property tests that sweep a batch of seeds, so one
trial is one batch: the statistic is the maximum over ``batch`` fresh
draws, and the tolerance is its 99th percentile over ``trials`` batches.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

import numpy as np

CALIBRATION_DIMS = (100, 256, 500, 1000, 2000, 3000, 4000, 5000, 6000)
TRIALS = 1000
BATCH = 50
QUANTILE = 0.99
MULTISET_KS = (1, 2, 3)
CALIBRATION_SEED = 20240


@dataclass(frozen=True)
class Tolerance:
    dim: int
    epsilon1: float
    delta: float
    trials: int
    seed: int


def algebra_errors(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """(self error, cross norm), both normalized by sqrt(d)."""
    fa, fb = np.fft.fft(a), np.fft.fft(b)
    pa, pb = np.abs(fa) ** 2, np.abs(fb) ** 2
    return float(np.sqrt(np.mean((pa - 1.0) ** 2))), float(np.sqrt(np.mean(pa * pb)))


def calibrate_dim(dim: int, trials: int = TRIALS, batch: int = BATCH,
                  seed: int = CALIBRATION_SEED) -> Tolerance:
    rng = np.random.default_rng([seed, dim])
    eps = np.empty(trials)
    dev = np.empty(trials)
    kmax = max(MULTISET_KS)
    for t in range(trials):
        a = rng.normal(0.0, 1.0 / np.sqrt(dim), (batch, dim))
        b = rng.normal(0.0, 1.0 / np.sqrt(dim), (batch, dim))
        pa = np.abs(np.fft.fft(a, axis=1)) ** 2
        pb = np.abs(np.fft.fft(b, axis=1)) ** 2
        self_err = np.sqrt(np.mean((pa - 1.0) ** 2, axis=1))
        cross = np.sqrt(np.mean(pa * pb, axis=1))
        eps[t] = max(self_err.max(), cross.max())
        dev[t] = kmax * np.abs(np.einsum("ij,ij->i", a, a) - 1.0).max()
    return Tolerance(dim, float(np.quantile(eps, QUANTILE)), float(np.quantile(dev, QUANTILE)),
                     trials, seed)


def calibrate(dims=CALIBRATION_DIMS, trials: int = TRIALS, seed: int = CALIBRATION_SEED):
    return [calibrate_dim(d, trials, seed=seed) for d in dims]


COLUMNS = ("dim", "epsilon1", "delta", "trials", "seed")


def to_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for tol in table:
        w.writerow([tol.dim, f"{tol.epsilon1:.6f}", f"{tol.delta:.6f}", tol.trials, tol.seed])
    return buf.getvalue()


def from_csv(text: str) -> dict[int, Tolerance]:
    out = {}
    for rec in csv.DictReader(io.StringIO(text)):
        tol = Tolerance(int(rec["dim"]), float(rec["epsilon1"]), float(rec["delta"]),
                        int(rec["trials"]), int(rec["seed"]))
        out[tol.dim] = tol
    return out


def load_calibration() -> dict[int, Tolerance]:
    text = resources.files("dcyk").joinpath("data", "calibration.csv").read_text(encoding="utf-8")
    return from_csv(text)


def tolerance(dim: int) -> Tolerance:
    table = load_calibration()
    if dim not in table:
        raise KeyError(f"dimension {dim} is not calibrated; have {sorted(table)}")
    return table[dim]
