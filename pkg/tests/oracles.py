"""Independent brute-force oracles shared by the test modules.

Nothing here calls into the package except to read plain symbol lists.
"""

from fractions import Fraction
import itertools


def seq_distance(u, a, v, b, horizon):
    """Symbolic distance between the bi-infinite periodic sequences u (shifted by a) and v (by b)."""
    for r in range(horizon + 1):
        if u[(a + r) % len(u)] != v[(b + r) % len(v)] or u[(a - r) % len(u)] != v[(b - r) % len(v)]:
            return Fraction(1, 2 ** r)
    return Fraction(0)


def shadows(q, x, p, y, gamma):
    """Distance condition of a good approximation, checked one shift at a time."""
    horizon = len(q) + len(p) + 2
    return all(seq_distance(q, x + i, p, y + i, horizon) < gamma for i in range(len(p)))


def best_subset_size(q, p, gamma):
    """Largest |X| over all phase subsets X of q and maps rho: X -> phases of p with the
    distance condition and equal fibre sizes; exhaustive over subsets, largest first."""
    Q, P = len(q), len(p)
    options = {x: [y for y in range(P) if shadows(q, x, p, y, gamma)] for x in range(Q)}
    cand = [x for x in range(Q) if options[x]]
    for size in range(len(cand) - len(cand) % P, 0, -P):
        for subset in itertools.combinations(cand, size):
            for rho in itertools.product(*(options[x] for x in subset)):
                counts = [0] * P
                for y in rho:
                    counts[y] += 1
                if len(set(counts)) == 1:
                    return size
    return 0


def good_approx_decision(q, p, gamma, kappa):
    size = best_subset_size(q, p, gamma)
    return size > 0 and Fraction(size, len(q)) > kappa


def binary_necklaces(max_len):
    """Least rotations of primitive binary words, as 0/1 tuples."""
    out = []
    for n in range(1, max_len + 1):
        for w in itertools.product((0, 1), repeat=n):
            rots = [w[i:] + w[:i] for i in range(n)]
            if w == min(rots) and rots.count(w) == 1:
                out.append(w)
    return out


def prod_one_minus_pow2(lo, hi):
    """prod_{n=lo}^{hi} (1 - 2^-n), exactly."""
    out = Fraction(1)
    for n in range(lo, hi + 1):
        out *= 1 - Fraction(1, 2 ** n)
    return out
