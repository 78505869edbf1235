"""Linear cocycles over a shift: products along words, exterior rates, spectra.

Triangular cocycles (all generators upper, or all lower, triangular) have
periodic spectra that depend only on letter counts, so they are evaluated in
closed form -- exactly in :class:`~fractions.Fraction` when the generators are
given by exact log-moduli (``"exact": true`` in JSON).  Diagonal cocycles also
get closed-form exterior rates.  Everything else goes through floating point
with QR re-orthogonalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import itertools
import math

import numpy as np

from . import words as W
from .symbolic import OrbitPoint, PeriodicWord, SymbolicError

_tokens = itertools.count()

NORM_GUARD = 1e300
QR_BLOCK = 32


class CocycleError(ValueError):
    pass


class DegenerateOrbit(CocycleError):
    pass


@dataclass(frozen=True)
class SpectrumVector:
    """Nonincreasing vector of exponents; compared in the box (max) metric."""

    values: tuple

    def __post_init__(self):
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        for a, b in zip(vals, vals[1:]):
            if a < b and not (_is_float(a) or _is_float(b)) or a < b - 1e-9 * max(1.0, abs(float(a))):
                raise CocycleError(f"spectrum not nonincreasing: {vals}")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def box_distance(self, other):
        return max(abs(a - b) for a, b in zip(self.values, other))

    def as_floats(self):
        return tuple(float(v) for v in self.values)

    @property
    def exact(self):
        return all(isinstance(v, (Fraction, int)) for v in self.values)

    def __repr__(self):
        return "SpectrumVector(" + ", ".join(str(v) for v in self.values) + ")"


def _is_float(v):
    return isinstance(v, float) or isinstance(v, np.floating)


def spectrum(values):
    return SpectrumVector(tuple(sorted(values, reverse=True)))


class Cocycle:
    """Map symbol -> invertible m x m matrix.

    ``log_diagonals`` (optional, exact mode) gives each generator as
    ``diag(sign_j * exp(l_j))`` with rational ``l_j``.
    """

    def __init__(self, matrices, log_diagonals=None, signs=None):
        mats = [np.array(M, dtype=float) for M in matrices]
        if not mats:
            raise CocycleError("no generators")
        m = mats[0].shape[0]
        for M in mats:
            if M.shape != (m, m):
                raise CocycleError("generators must be square and of equal size")
            if abs(np.linalg.det(M)) < 1e-12:
                raise CocycleError("generator not invertible (|det| < 1e-12)")
        self.dim = m
        self.matrices = mats
        self.token = next(_tokens)
        self.exact = log_diagonals is not None
        self.signs = [tuple(int(v) for v in row) for row in signs] if signs else None
        if self.exact:
            self.log_diag = [tuple(Fraction(v) for v in row) for row in log_diagonals]
            self.kind = "diagonal"
        else:
            if all(np.allclose(M, np.diag(np.diag(M)), atol=0, rtol=0) for M in mats):
                self.kind = "diagonal"
            elif all(np.allclose(M, np.triu(M), atol=0, rtol=0) for M in mats):
                self.kind = "upper"
            elif all(np.allclose(M, np.tril(M), atol=0, rtol=0) for M in mats):
                self.kind = "lower"
            else:
                self.kind = "general"
            self.log_diag = ([tuple(float(np.log(abs(d))) for d in np.diag(M)) for M in mats]
                             if self.kind != "general" else None)
        if self.kind == "diagonal" and self.exact:
            self.log_norm_bound = max(max(row) for row in self.log_diag)
            self.log_conorm_bound = min(min(row) for row in self.log_diag)
        else:
            sv = [np.linalg.svd(M, compute_uv=False) for M in mats]
            self.log_norm_bound = max(float(np.log(s[0])) for s in sv)
            self.log_conorm_bound = min(float(np.log(s[-1])) for s in sv)

    @classmethod
    def diagonal_exact(cls, log_diagonals, signs=None):
        signs = signs or [[1] * len(row) for row in log_diagonals]
        mats = [np.diag([sg * math.exp(float(v)) for v, sg in zip(row, srow)])
                for row, srow in zip(log_diagonals, signs)]
        return cls(mats, log_diagonals=log_diagonals, signs=signs)

    @classmethod
    def from_json(cls, data, system):
        dim = int(data["dim"])
        if data.get("exact") and "log_diagonals" in data:
            rows = [[Fraction(str(v)) for v in data["log_diagonals"][a]] for a in system.alphabet]
            signs = data.get("signs")
            srows = [[int(v) for v in signs[a]] for a in system.alphabet] if signs else None
            if any(len(r) != dim for r in rows):
                raise CocycleError("log_diagonals rows must have length dim")
            return cls.diagonal_exact(rows, srows)
        try:
            mats = [data["matrices"][a] for a in system.alphabet]
        except KeyError as exc:
            raise CocycleError(f"missing matrix for symbol {exc.args[0]!r}") from None
        out = cls(mats)
        if out.dim != dim:
            raise CocycleError("dim does not match matrices")
        return out

    def to_json(self, system):
        if self.exact:
            out = {"dim": self.dim, "exact": True,
                   "log_diagonals": {a: [str(v) for v in row]
                                     for a, row in zip(system.alphabet, self.log_diag)}}
            if self.signs and any(v < 0 for row in self.signs for v in row):
                out["signs"] = {a: list(row) for a, row in zip(system.alphabet, self.signs)}
            return out
        return {"dim": self.dim,
                "matrices": {a: M.tolist() for a, M in zip(system.alphabet, self.matrices)}}

    @property
    def triangular(self):
        return self.kind in ("diagonal", "upper", "lower")

    def log_vector(self, counts):
        """Sum of log|diagonal| over letter counts (triangular kinds only)."""
        zero = Fraction(0) if self.exact else 0.0
        out = [zero] * self.dim
        for s, c in counts.items():
            row = self.log_diag[s]
            for i in range(self.dim):
                out[i] += c * row[i]
        return out

    def spread(self):
        """Per-coordinate max - min of the generators' log-diagonals."""
        cols = list(zip(*self.log_diag))
        return [max(c) - min(c) for c in cols]


@dataclass(frozen=True)
class Product:
    """``exp(log_scale) * matrix``; log_scaled marks that rescaling happened."""

    matrix: np.ndarray
    log_scale: float = 0.0

    @property
    def log_scaled(self):
        return self.log_scale != 0.0

    def full(self):
        return self.matrix * math.exp(self.log_scale)


def _renorm(M, s):
    n = np.linalg.norm(M)
    if n > 1e100 or n < 1e-100:
        return M / n, s + math.log(n)
    return M, s


def product_along(cocycle, word):
    """``A(w_{p-1}) ... A(w_0)``, log-scaled if the plain product would overflow."""
    mats = cocycle.matrices

    def leaf_fn(sym):
        M = np.eye(cocycle.dim)
        s = 0.0
        for a in sym:
            M = mats[a] @ M
            if not np.isfinite(M).all() or np.abs(M).max() > 1e100:
                M, s = _renorm(M, s)
        return _renorm(M, s)

    def mul(x, y):
        return _renorm(y[0] @ x[0], x[1] + y[1])

    M, s = W.fold(word.node, ("prod", cocycle.token), leaf_fn, mul, (np.eye(cocycle.dim), 0.0))
    if s and s + math.log(max(np.linalg.norm(M), 1e-300)) < math.log(NORM_GUARD):
        return Product(M * math.exp(s), 0.0)
    return Product(M, s)


def periodic_spectrum(cocycle, word):
    """Exponents ``(1/period) log|eigenvalues|`` of the product along the word."""
    if cocycle.triangular:
        v = cocycle.log_vector(word.counts())
        return spectrum([x / word.period for x in v])
    prod = product_along(cocycle, word)
    M = prod.matrix
    ev = np.abs(np.linalg.eigvals(M))
    if not word.explicit and (ev.min() < 1e-300 or ev.min() / ev.max() < 1e-13):
        raise DegenerateOrbit("eigenvalue modulus underflow; orbit numerically degenerate")
    # tiny moduli are placeholders here; the cycle refinement below replaces them
    logs = np.sort(np.log(np.maximum(ev, 1e-300)) + prod.log_scale)[::-1]
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] / sv[0] < 1e-3 and word.explicit:
        logs = _refine_cycle_logs(cocycle, word.symbols, logs)
    return spectrum((logs / word.period).tolist())


def _refine_cycle_logs(cocycle, symbols, logs, max_cycles=400, gap=1.0):
    """Correct eigenvalue log-moduli of an ill-conditioned cycle product.

    Small eigenvalues of a product lose relative accuracy.  QR iteration along the
    cycle recovers the sum of log-moduli of every cluster (members closer than
    ``gap``) to full accuracy; members are shifted to match those sums.
    """
    mats = [cocycle.matrices[a] for a in symbols]
    m = cocycle.dim
    cuts = [0] + [i + 1 for i in range(m - 1) if logs[i] - logs[i + 1] > gap] + [m]
    blocks = list(zip(cuts, cuts[1:]))
    Q = np.eye(m)
    prev = None
    for _ in range(max_cycles):
        acc = np.zeros(m)
        for A in mats:
            Q, R = np.linalg.qr(A @ Q)
            acc += np.log(np.abs(np.diag(R)))
        sums = np.array([acc[a:b].sum() for a, b in blocks])
        if prev is not None and np.max(np.abs(sums - prev)) < 1e-12 * max(1.0, len(mats)):
            break
        prev = sums
    out = np.array(logs, dtype=float)
    for (a, b), total in zip(blocks, sums):
        out[a:b] += (total - out[a:b].sum()) / (b - a)
    return out


def _window_symbols(point, k):
    return point.coords(0, k)


def log_singular_values(mats, sweeps=8, tol=1e-12):
    """Log singular values (descending) of ``mats[-1] @ ... @ mats[0]``.

    Uses the plain SVD when the product is well conditioned and otherwise
    alternating forward/backward QR sweeps (power iteration on P^T P kept in
    factored form), re-orthogonalizing every ``QR_BLOCK`` steps.
    """
    m = mats[0].shape[0] if mats else 0
    M = np.eye(m)
    scale = 0.0
    for A in mats:
        M = A @ M
        if np.abs(M).max() > 1e100 or np.abs(M).max() < 1e-100:
            M, scale = _renorm(M, scale)
    s = np.linalg.svd(M, compute_uv=False)
    # plain SVD loses ~eps/ratio relative accuracy on the small values
    if s[-1] > 0 and s[-1] / s[0] > 1e-4:
        return (np.log(s) + scale).tolist()

    conds = {}

    def cond(A):
        key = id(A)
        if key not in conds:
            conds[key] = float(np.linalg.cond(A))
        return conds[key]

    def sweep(Q, seq):
        logs = np.zeros(m)
        block = np.eye(m)
        count = 0
        acc = 1.0
        for A in seq:
            block = A @ block
            count += 1
            acc *= cond(A)
            # re-orthogonalize before the block's own conditioning eats the small directions
            if count == QR_BLOCK or acc > 1e6:
                acc = 1.0
                Q, R = np.linalg.qr(block @ Q)
                logs += np.log(np.abs(np.diag(R)))
                block = np.eye(m)
                count = 0
        if count:
            Q, R = np.linalg.qr(block @ Q)
            logs += np.log(np.abs(np.diag(R)))
        return Q, logs

    Q = np.eye(m)
    prev = None
    back = [A.T for A in reversed(mats)]
    for _ in range(sweeps):
        Qf, logs = sweep(Q, mats)
        if prev is not None and np.max(np.abs(logs - prev)) <= tol * max(1.0, np.max(np.abs(logs))):
            break
        prev = logs
        Q, _ = sweep(Qf, back)
    return sorted(logs.tolist(), reverse=True)


def _window_log_sv(cocycle, point, k):
    if cocycle.kind == "diagonal":
        counts = W.cyclic_window_counts(point.word.node, point.phase, k)
        return sorted(cocycle.log_vector(counts), reverse=True)
    if k > W.MATERIALIZE_LIMIT:
        raise CocycleError("window too long for a non-diagonal cocycle")
    syms = _window_symbols(point, k)
    return log_singular_values([cocycle.matrices[a] for a in syms])


def exterior_rate(cocycle, point, i, k):
    """``(1/k) log ||wedge^i Df^k(x)||`` = (1/k) * sum of the i largest log singular values."""
    if k < 1:
        raise CocycleError("k must be >= 1")
    if not 0 <= i <= cocycle.dim:
        raise CocycleError("exterior degree out of range")
    if i == 0:
        return Fraction(0) if cocycle.exact else 0.0
    logs = _window_log_sv(cocycle, point, k)
    return sum(logs[:i]) / k


def exterior_profile(cocycle, point, k):
    """All rates ``L_0^{(k)}, ..., L_m^{(k)}`` from one product."""
    logs = _window_log_sv(cocycle, point, k)
    out = [Fraction(0) if cocycle.exact else 0.0]
    for v in logs:
        out.append(out[-1] + v / k)
    return out


def exponents_from_exterior(cocycle, point, k):
    """Consecutive differences of exterior rates at step ``k``."""
    if k < 1:
        raise CocycleError("k must be >= 1")
    logs = _window_log_sv(cocycle, point, k)
    return SpectrumVector(tuple(v / k for v in logs))


def measure_spectrum(cocycle, weights):
    """Spectrum of a finite convex combination of periodic measures."""
    weights = list(weights)
    total = sum(w for _, w in weights)
    if any(w < 0 for _, w in weights):
        raise CocycleError("negative weight")
    exact = all(isinstance(w, (Fraction, int)) for _, w in weights)
    if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
        raise CocycleError(f"weights sum to {total}, not 1")
    specs = [(periodic_spectrum(cocycle, w), c) for w, c in weights]
    m = cocycle.dim
    vals = [sum(s[i] * c for s, c in specs) for i in range(m)]
    return SpectrumVector(tuple(vals))


def has_simple_spectrum(spec, tol=1e-9):
    return all(a - b > tol for a, b in zip(spec.values, spec.values[1:]))


def log_abs_det(cocycle, word):
    if cocycle.triangular:
        return sum(cocycle.log_vector(word.counts()))
    total = 0.0
    for s, c in word.counts().items():
        total += c * float(np.log(abs(np.linalg.det(cocycle.matrices[s]))))
    return total
