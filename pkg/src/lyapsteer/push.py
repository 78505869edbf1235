"""Pushing exponents of a periodic matrix sequence by small diagonal rescalings.

At each position in ``X`` the matrix ``B_j`` is replaced by
``exp(diag(s_1 t eta, ..., s_m t eta)) B_j`` with ``s_i = +1`` for ``i`` in
``I`` and ``-1`` otherwise.  For diagonal sequences the exponents move by
exactly ``+-(|X| / period) eta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cocycle import SpectrumVector, spectrum


class PushError(ValueError):
    pass


@dataclass
class PushResult:
    before: SpectrumVector
    after: SpectrumVector
    shifts: tuple
    matrices: list | None
    homotopy: list


def _signs(m, I):
    I = set(I)
    if not I <= set(range(1, m + 1)):
        raise PushError("I must be a subset of {1..m}")
    return [1 if i + 1 in I else -1 for i in range(m)]


def _check_X(X, period):
    X = sorted(set(X))
    if any(not 0 <= x < period for x in X):
        raise PushError("positions outside the period")
    if Fraction(len(X), period) < Fraction(1, 2):
        raise PushError("push needs |X|/period >= 1/2")
    return X


def _hyperbolic(vals):
    return all(v != 0 for v in vals)


def push_spectrum_exact(log_diagonals, X, I, eta, grid=11):
    """Diagonal sequence given by rational log-moduli; everything exact."""
    period = len(log_diagonals)
    X = _check_X(X, period)
    m = len(log_diagonals[0])
    signs = _signs(m, I)
    eta = Fraction(str(eta)) if isinstance(eta, float) else Fraction(eta)
    base = [sum(Fraction(row[i]) for row in log_diagonals) / period for i in range(m)]
    frac = Fraction(len(X), period)
    homotopy = []
    for g in range(grid):
        t = Fraction(g, grid - 1)
        vals = [b + s * t * eta * frac for b, s in zip(base, signs)]
        homotopy.append((t, _hyperbolic(vals)))
        if not _hyperbolic(vals):
            raise PushError(f"an exponent vanishes at t = {t}: hyperbolicity lost")
    after = [b + s * eta * frac for b, s in zip(base, signs)]
    new = [tuple(Fraction(v) + (s * eta if j in X else 0) for v, s in zip(row, signs))
           for j, row in enumerate(log_diagonals)]
    return PushResult(spectrum(base), spectrum(after),
                      tuple(a - b for a, b in zip(after, base)), new, homotopy)


def _periodic_exponents(mats):
    M = np.eye(mats[0].shape[0])
    scale = 0.0
    for A in mats:
        M = A @ M
        n = np.linalg.norm(M)
        M /= n
        scale += np.log(n)
    ev = np.abs(np.linalg.eigvals(M))
    return sorted(((np.log(ev) + scale) / len(mats)).tolist(), reverse=True)


def push_spectrum(matrices, X, I, eta, grid=11, tol=1e-6):
    """Numeric version for diagonal or near-diagonal sequences; returns before/after spectra."""
    mats = [np.asarray(M, dtype=float) for M in matrices]
    period = len(mats)
    X = _check_X(X, period)
    m = mats[0].shape[0]
    signs = np.array(_signs(m, I), dtype=float)
    Xs = set(X)

    def perturbed(t):
        D = np.diag(np.exp(signs * t * float(eta)))
        return [D @ B if j in Xs else B for j, B in enumerate(mats)]

    before = _periodic_exponents(mats)
    homotopy = []
    for g in range(grid):
        t = g / (grid - 1)
        vals = _periodic_exponents(perturbed(t))
        ok = all(abs(v) > tol for v in vals)
        homotopy.append((t, ok))
        if not ok:
            raise PushError(f"an exponent vanishes at t = {t}: hyperbolicity lost")
    new = perturbed(1.0)
    after = _periodic_exponents(new)
    frac = len(X) / period
    shifts = tuple(a - b for a, b in zip(after, before))
    order = np.argsort(-np.array(before))
    for i, s in enumerate(signs):
        k = int(np.where(order == i)[0][0])
        want = 0.5 * float(eta) * frac
        if s > 0 and shifts[k] < want - tol or s < 0 and shifts[k] > -want + tol:
            raise PushError(f"coordinate {i + 1} moved by {shifts[k]}, short of {want}")
    return PushResult(SpectrumVector(tuple(before)), SpectrumVector(tuple(after)), shifts, new,
                      homotopy)
