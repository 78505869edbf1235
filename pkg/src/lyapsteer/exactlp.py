"""Small exact linear programs over the rationals (two-phase simplex, Bland's rule).

Sizes here are tiny (a handful of hull points, dimension <= 6), so a dense
tableau of :class:`fractions.Fraction` is fast enough and gives answers like
``1/12`` exactly instead of ``0.08333333333333334``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: list
    value: Fraction | None


def _F(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def linprog_max(c, A_ub=(), b_ub=(), A_eq=(), b_eq=(), free=()):
    """Maximize ``c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``.

    Variables listed in ``free`` are unrestricted in sign (split internally).
    """
    n = len(c)
    free = sorted(set(free))
    # column map: original var j -> (pos col, neg col or None)
    cols = []
    ncol = 0
    for j in range(n):
        if j in free:
            cols.append((ncol, ncol + 1))
            ncol += 2
        else:
            cols.append((ncol, None))
            ncol += 1

    def expand(row):
        out = [Fraction(0)] * ncol
        for j, v in enumerate(row):
            v = _F(v)
            p, q = cols[j]
            out[p] += v
            if q is not None:
                out[q] -= v
        return out

    rows, rhs = [], []
    n_ub = len(A_ub)
    for i, row in enumerate(A_ub):
        r = expand(row) + [Fraction(int(k == i)) for k in range(n_ub)]
        rows.append(r)
        rhs.append(_F(b_ub[i]))
    for i, row in enumerate(A_eq):
        rows.append(expand(row) + [Fraction(0)] * n_ub)
        rhs.append(_F(b_eq[i]))
    nvar = ncol + n_ub
    cost = expand(c) + [Fraction(0)] * n_ub
    m = len(rows)
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    # phase 1 with one artificial per row
    T = [rows[i] + [Fraction(int(k == i)) for k in range(m)] + [rhs[i]] for i in range(m)]
    basis = [nvar + i for i in range(m)]
    total = nvar + m
    phase1 = [Fraction(0)] * nvar + [Fraction(-1)] * m
    if m:
        _simplex(T, basis, phase1, total)
        if sum(T[i][-1] for i in range(m) if basis[i] >= nvar) != 0:
            return LPResult("infeasible", [], None)
        # drive artificials out of the basis
        for i in range(m):
            if basis[i] >= nvar:
                for j in range(nvar):
                    if T[i][j] != 0:
                        _pivot(T, basis, i, j)
                        break
    keep = [i for i in range(m) if basis[i] < nvar]
    T = [T[i][:nvar] + [T[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]
    status = _simplex(T, basis, cost, nvar)
    if status == "unbounded":
        return LPResult("unbounded", [], None)
    z = [Fraction(0)] * nvar
    for i, b in enumerate(basis):
        z[b] = T[i][-1]
    x = []
    for j in range(n):
        p, q = cols[j]
        x.append(z[p] - (z[q] if q is not None else 0))
    value = sum(_F(cj) * xj for cj, xj in zip(c, x))
    return LPResult("optimal", x, value)


def _pivot(T, basis, r, col):
    pv = T[r][col]
    T[r] = [v / pv for v in T[r]]
    for i in range(len(T)):
        if i != r and T[i][col] != 0:
            f = T[i][col]
            Ti, Tr = T[i], T[r]
            T[i] = [a - f * b for a, b in zip(Ti, Tr)]
    basis[r] = col


def _simplex(T, basis, cost, nvar):
    """Maximize ``cost`` over the tableau in place (Bland's rule; no cycling)."""
    while True:
        # reduced costs
        enter = None
        for j in range(nvar):
            if j in basis:
                continue
            red = cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(len(T)))
            if red > 0:
                enter = j
                break
        if enter is None:
            return "optimal"
        best = None
        for i in range(len(T)):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], enter)


def solve_exact(A, b):
    """One rational solution of ``A x = b`` (free variables set to 0), or None."""
    A = [[_F(v) for v in row] for row in A]
    b = [_F(v) for v in b]
    m = len(A)
    n = len(A[0]) if m else 0
    M = [A[i] + [b[i]] for i in range(m)]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, m) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        pv = M[r][col]
        M[r] = [v / pv for v in M[r]]
        for i in range(m):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * c for a, c in zip(M[i], M[r])]
        pivots.append(col)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if M[i][-1] != 0:
            return None
    x = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        x[col] = M[i][-1]
    return x


def rank(rows):
    rows = [[_F(v) for v in row] for row in rows]
    if not rows:
        return 0
    r = 0
    n = len(rows[0])
    for col in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, len(rows)):
            if rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * c for a, c in zip(rows[i], rows[r])]
        r += 1
    return r


def nullspace_vector(rows, n):
    """A nonzero rational vector orthogonal to all ``rows`` (assumes rank n-1)."""
    M = [[_F(v) for v in row] for row in rows]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        pv = M[r][col]
        M[r] = [v / pv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * c for a, c in zip(M[i], M[r])]
        pivots.append(col)
        r += 1
    free = [j for j in range(n) if j not in pivots]
    if not free:
        return None
    f = free[0]
    x = [Fraction(0)] * n
    x[f] = Fraction(1)
    for i, col in enumerate(pivots):
        x[col] = -M[i][f]
    return x
