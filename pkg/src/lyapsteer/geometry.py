"""Spectrum sets: periodic spectra, their convex hull, interior margins, splittings.

Hull facets are found with ``scipy.spatial.ConvexHull`` on floats and then
recomputed exactly over the rationals from the vertex sets it reports, so
margins such as ``1/12`` come out exact.  Every facet is re-checked against
all points before it is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import words as W
from .cocycle import SpectrumVector, log_singular_values, periodic_spectrum
from .exactlp import linprog_max, nullspace_vector, rank
from .symbolic import PeriodicWord

NECKLACE_CAP = 10 ** 7


class GeometryError(ValueError):
    pass


def _rat(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def necklaces(system, max_len):
    """Primitive cyclically admissible words up to rotation, lexicographically least representatives."""
    total = sum(system.count_admissible(n) for n in range(1, max_len + 1))
    if total > NECKLACE_CAP:
        raise GeometryError(f"{total} candidate words exceed the enumeration cap {NECKLACE_CAP}")
    out = []
    for n in range(1, max_len + 1):
        for w in system.admissible_words(n):
            if not system.transitions[w[-1], w[0]]:
                continue
            if any(w[i:] + w[:i] <= w for i in range(1, n)):
                continue  # not the strict least rotation: rotation duplicate or non-primitive
            out.append(w)
    return out


def enumerate_periodic_spectra(system, cocycle, max_len):
    if max_len < 1:
        raise GeometryError("max_len must be >= 1")
    return [(PeriodicWord(system, W.leaf(w)), periodic_spectrum(cocycle, PeriodicWord(system, W.leaf(w))))
            for w in necklaces(system, max_len)]


@dataclass
class SpectrumHull:
    """Convex hull of finitely many spectra; ``facets`` are exact ``(a, b)`` with ``a.x <= b``."""

    points: list
    facets: list | None
    affine_dim: int

    @property
    def dim(self):
        return len(self.points[0])

    @property
    def full_dimensional(self):
        return self.affine_dim == self.dim

    def contains(self, x):
        x = [_rat(v) for v in x]
        if self.facets is not None:
            return all(sum(ai * xi for ai, xi in zip(a, x)) <= b for a, b in self.facets)
        return self.contains_lp(x)

    def contains_lp(self, x):
        return box_distance(self, x) == 0

    def to_json(self):
        return {"vertices": [[_s(v) for v in p] for p in self.points],
                "facets": None if self.facets is None else
                [{"normal": [_s(v) for v in a], "offset": _s(b)} for a, b in self.facets],
                "affine_dim": self.affine_dim}


def _s(v):
    v = _rat(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _normalize(a, b):
    scale = max(abs(v) for v in a)
    return tuple(v / scale for v in a), b / scale


def hull_and_margin(points):
    """Exact hull (facets when full-dimensional) of the given spectra."""
    pts = []
    seen = set()
    for p in points:
        t = tuple(_rat(v) for v in (p.values if isinstance(p, SpectrumVector) else p))
        if t not in seen:
            seen.add(t)
            pts.append(t)
    if not pts:
        raise GeometryError("no points")
    m = len(pts[0])
    diffs = [[a - b for a, b in zip(p, pts[0])] for p in pts[1:]]
    adim = rank(diffs) if diffs else 0
    if adim < m:
        return SpectrumHull(pts, None, adim)
    if m == 1:
        lo, hi = min(p[0] for p in pts), max(p[0] for p in pts)
        return SpectrumHull(pts, [((Fraction(1),), hi), ((Fraction(-1),), -lo)], 1)
    arr = np.array([[float(v) for v in p] for p in pts])
    try:
        simplices = ConvexHull(arr).simplices
    except QhullError as exc:  # numerically flat although exactly full-dimensional
        raise GeometryError(f"hull computation failed: {exc}") from None
    facets = {}
    for simplex in simplices:
        base = pts[simplex[0]]
        rows = [[a - b for a, b in zip(pts[j], base)] for j in simplex[1:]]
        a = nullspace_vector(rows, m)
        if a is None or rank(rows) != m - 1:
            continue
        b = sum(x * y for x, y in zip(a, base))
        vals = [sum(x * y for x, y in zip(a, p)) for p in pts]
        if all(v <= b for v in vals):
            pass
        elif all(v >= b for v in vals):
            a, b = [-x for x in a], -b
        else:
            continue  # float hull reported a non-supporting plane
        key = _normalize(a, b)
        facets[key] = key
    return SpectrumHull(pts, sorted(facets.values()), m)


def box_distance(hull, x):
    """Exact box-metric distance from ``x`` to the hull (0 inside), by a rational LP."""
    x = [_rat(v) for v in x]
    k = len(hull.points)
    m = len(x)
    # variables: w_1..w_k >= 0, t >= 0; maximize -t
    c = [0] * k + [-1]
    A_ub, b_ub = [], []
    for i in range(m):
        row = [p[i] for p in hull.points]
        A_ub.append(row + [-1])  # sum w p_i - x_i <= t
        b_ub.append(x[i])
        A_ub.append([-v for v in row] + [-1])
        b_ub.append(-x[i])
    res = linprog_max(c, A_ub, b_ub, A_eq=[[1] * k + [0]], b_eq=[1])
    return -res.value


def interior_margin(L, hull):
    """Largest ``delta`` with the open box ball ``B_{4 delta}(L)`` inside the hull.

    Inside: ``min_f (b_f - a_f.L) / |a_f|_1`` over four.  Outside: minus the box
    distance over four.  Degenerate hulls have no interior, so 0 (or negative).
    """
    L = [_rat(v) for v in L]
    if hull.facets is None:
        d = box_distance(hull, L)
        return -d / 4
    slack = min((b - sum(ai * li for ai, li in zip(a, L))) / sum(abs(ai) for ai in a)
                for a, b in hull.facets)
    if slack < 0:
        return -box_distance(hull, L) / 4
    return slack / 4


def binding_facets(L, hull):
    L = [_rat(v) for v in L]
    vals = [((b - sum(ai * li for ai, li in zip(a, L))) / sum(abs(ai) for ai in a), a, b)
            for a, b in hull.facets]
    best = min(v for v, _, _ in vals)
    return [(a, b) for v, a, b in vals if v == best]


def barycentric_weights(hull, x):
    """Convex weights on the hull points reproducing ``x``, maximizing the smallest weight
    among the points that can be used; None outside the hull."""
    x = [_rat(v) for v in x]
    k = len(hull.points)
    m = len(x)
    A_eq = [[p[i] for p in hull.points] + [0] for i in range(m)] + [[1] * k + [0]]
    b_eq = list(x) + [1]
    A_ub = [[-(1 if j == i else 0) for j in range(k)] + [1] for i in range(k)]
    res = linprog_max([0] * k + [1], A_ub, [0] * k, A_eq, b_eq, free=[k])
    if res.status != "optimal":
        return None
    if res.value > 0:
        return res.x[:k]
    res = linprog_max([0] * k + [0], [], [], A_eq, b_eq)
    return res.x[:k] if res.status == "optimal" else None


# --- dominated splittings ---------------------------------------------------

@dataclass(frozen=True)
class SplittingCert:
    dims: tuple
    N: int
    gap: float

    def to_json(self):
        return {"dims": list(self.dims), "N": self.N, "gap": self.gap}


def _interfaces(dims):
    out, acc = [], 0
    for d in dims[:-1]:
        acc += d
        out.append(acc)
    return out


def _step_log_sv(cocycle, word, phase, N):
    if cocycle.kind == "diagonal":
        counts = W.cyclic_window_counts(word.node, phase, N)
        return [float(v) for v in sorted(cocycle.log_vector(counts), reverse=True)]
    syms = W.materialize(W.periodic_cut(word.node, phase, phase + N))
    return log_singular_values([cocycle.matrices[a] for a in syms])


def dominated_splitting_detect(cocycle, words, dims, N_max):
    """Witness ``N`` with ``s_{d+1}/s_d < 1/2`` at every interface and base point, else None.

    None means undetermined, not refuted.
    """
    dims = tuple(int(d) for d in dims)
    if sum(dims) != cocycle.dim or any(d <= 0 for d in dims):
        raise GeometryError("dims must be positive and sum to the dimension")
    cuts = _interfaces(dims)
    if not cuts:
        return SplittingCert(dims, 1, 0.0)
    for N in range(1, N_max + 1):
        worst = -math.inf
        for word in words:
            for phase in range(word.period):
                logs = _step_log_sv(cocycle, word, phase, N)
                for d in cuts:
                    worst = max(worst, logs[d] - logs[d - 1])
                if worst >= -math.log(2):
                    break
            if worst >= -math.log(2):
                break
        if worst < -math.log(2):
            return SplittingCert(dims, N, math.exp(worst))
    return None


def finest_splitting(cocycle, words, N_max):
    m = cocycle.dim
    keep = [d for d in range(1, m)
            if dominated_splitting_detect(cocycle, words, (d, m - d), N_max) is not None]
    cuts = [0] + keep + [m]
    return tuple(b - a for a, b in zip(cuts, cuts[1:]))


def averaged_spectrum(spec, block_dims):
    """Block means of the exponents, each repeated over its block."""
    vals = list(spec.values if isinstance(spec, SpectrumVector) else spec)
    if sum(block_dims) != len(vals):
        raise GeometryError("block dims must sum to the dimension")
    out, i = [], 0
    for d in block_dims:
        block = vals[i:i + d]
        exact = all(isinstance(v, (int, Fraction)) for v in block)
        mean = Fraction(sum(block)) / d if exact else sum(block) / d
        out.extend([mean] * d)
        i += d
    return SpectrumVector(tuple(out))


def graph_segment_check(L_mu, L_hat, hull, t_grid):
    """Membership of ``t L(mu) + (1-t) L_hat(mu)`` in the hull for each grid value."""
    rows = []
    for t in t_grid:
        t = Fraction(str(t)) if isinstance(t, float) else _rat(t)
        x = [t * _rat(a) + (1 - t) * _rat(b) for a, b in zip(L_mu, L_hat)]
        d = box_distance(hull, x)
        rows.append({"t": t, "point": x, "member": d == 0, "distance": d})
    failing = [r["t"] for r in rows if not r["member"]]
    return {"rows": rows, "pass": not failing, "failing": failing,
            "note": "hull is an inner approximation; a failure here is not a counterexample"}
