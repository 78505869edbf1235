"""Periodic-spectrum hulls, margins, dominated splittings and the segment check."""

from fractions import Fraction
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapsteer.cocycle import Cocycle, SpectrumVector, measure_spectrum
from lyapsteer.geometry import (averaged_spectrum, barycentric_weights, binding_facets, box_distance,
                                dominated_splitting_detect, enumerate_periodic_spectra,
                                finest_splitting, graph_segment_check, hull_and_margin,
                                interior_margin, necklaces)
from lyapsteer.symbolic import ShiftSystem

TRIANGLE = [(2, -1), (1, -2), (3, -3)]


def test_enumeration_examples(abc, diag3, golden):
    one = {s.values for _, s in enumerate_periodic_spectra(abc, diag3, 1)}
    assert one == {(2, -1), (1, -2), (3, -3)}
    three = {s.values for _, s in enumerate_periodic_spectra(abc, diag3, 3)}
    assert (2, -2) in three
    words = [w.text() for w, _ in enumerate_periodic_spectra(golden, Cocycle.diagonal_exact([[1, 0], [0, 1]]), 2)]
    assert sorted(words) == ["a", "ab"]


def _necklace_count(k, n):
    # primitive necklaces of length n over k letters (Moebius formula)
    def mu(d):
        out, x, p = 1, d, 2
        while p * p <= x:
            if x % p == 0:
                x //= p
                if x % p == 0:
                    return 0
                out = -out
            p += 1
        return -out if x > 1 else out
    return sum(mu(d) * k ** (n // d) for d in range(1, n + 1) if n % d == 0) // n


@pytest.mark.parametrize("k", [2, 3])
def test_necklace_counts(k):
    S = ShiftSystem.full_shift("abc"[:k])
    words = necklaces(S, 6)
    for n in range(1, 7):
        assert sum(len(w) == n for w in words) == _necklace_count(k, n)


def test_margin_examples():
    hull = hull_and_margin(TRIANGLE)
    assert interior_margin((2, -2), hull) == Fraction(1, 12)
    # 2 l1 + l2 <= 3 (normalized by its largest coefficient) binds; so does -l1 - 2 l2 <= 3
    binding = binding_facets((2, -2), hull)
    assert ((1, Fraction(1, 2)), Fraction(3, 2)) in binding
    assert ((Fraction(-1, 2), -1), Fraction(3, 2)) in binding and len(binding) == 2
    assert interior_margin((2, -1), hull) == 0
    assert interior_margin((5, -5), hull) == Fraction(-1, 2)
    seg = hull_and_margin([(1, -1), (2, -2)])
    assert seg.facets is None and interior_margin((Fraction(3, 2), Fraction(-3, 2)), seg) == 0


def _box_inside(hull, L, r):
    return all(box_distance(hull, [l + s * r for l, s in zip(L, signs)]) == 0
               for signs in itertools.product((-1, 1), repeat=len(L)))


def test_margin_box_oracle():
    hull = hull_and_margin(TRIANGLE)
    for L in [(2, -2), (Fraction(7, 4), Fraction(-9, 4)), (Fraction(5, 2), Fraction(-5, 2))]:
        d = interior_margin(L, hull)
        assert d > 0
        assert _box_inside(hull, L, 4 * d)
        assert not _box_inside(hull, L, 4 * d * Fraction(1001, 1000))


coords = st.fractions(min_value=-4, max_value=4, max_denominator=12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=7), st.tuples(coords, coords))
def test_facets_agree_with_lp(points, x):
    hull = hull_and_margin(points)
    if hull.facets is None:
        return
    assert hull.contains(x) == (box_distance(hull, x) == 0)
    w = barycentric_weights(hull, x)
    assert (w is not None) == hull.contains(x)
    if w is not None:
        assert sum(w) == 1 and all(v >= 0 for v in w)
        assert all(sum(wi * p[i] for wi, p in zip(w, hull.points)) == x[i] for i in range(2))


@settings(max_examples=60, deadline=None)
@given(st.tuples(coords, coords), st.tuples(coords, coords))
def test_margin_lipschitz_and_sign(x, y):
    hull = hull_and_margin(TRIANGLE)
    mx, my = interior_margin(x, hull), interior_margin(y, hull)
    dist = max(abs(a - b) for a, b in zip(x, y))
    assert abs(4 * mx - 4 * my) <= dist
    strictly_inside = all(sum(a * v for a, v in zip(f, x)) < b for f, b in hull.facets)
    assert (mx > 0) == strictly_inside


def test_splitting_examples(abc, diag3, ab, swap):
    words = [abc.word(t) for t in "abc"]
    cert = dominated_splitting_detect(diag3, words, (1, 1), 1)
    assert cert.N == 1 and math.isclose(cert.gap, math.exp(-3))
    assert dominated_splitting_detect(diag3, words, (2,), 1).N == 1
    swords = [ab.word("a"), ab.word("b"), ab.word("ab")]
    assert dominated_splitting_detect(swap, swords, (1, 1), 64) is None
    assert finest_splitting(diag3, words, 4) == (1, 1)
    assert finest_splitting(swap, swords, 8) == (2,)
    S1 = ShiftSystem.full_shift("a")
    co3 = Cocycle.diagonal_exact([[3, 2, -5]])
    assert finest_splitting(co3, [S1.word("a")], 2) == (1, 1, 1)


def test_averaged_examples():
    assert averaged_spectrum(SpectrumVector((3, 1, -1, -3)), (2, 2)).values == (2, 2, -2, -2)
    assert averaged_spectrum(SpectrumVector((2, -1)), (1, 1)).values == (2, -1)
    L = SpectrumVector((math.log(2), -math.log(2)))
    assert averaged_spectrum(L, (2,)).values == (0, 0)


@given(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=7), min_size=1, max_size=6),
       st.data())
def test_averaged_preserves_sum(vals, data):
    vals = sorted(vals, reverse=True)
    cuts = sorted(data.draw(st.sets(st.integers(1, len(vals) - 1), max_size=len(vals) - 1))) \
        if len(vals) > 1 else []
    dims = [b - a for a, b in zip([0] + cuts, cuts + [len(vals)])]
    out = averaged_spectrum(SpectrumVector(tuple(vals)), dims)
    assert sum(out.values) == sum(vals)
    assert all(isinstance(v, Fraction) for v in out.values)
    # block means of a nonincreasing vector stay nonincreasing
    assert list(out.values) == sorted(out.values, reverse=True)


def test_graph_segment_swap(ab, swap):
    spectra = enumerate_periodic_spectra(ab, swap, 2)
    hull = hull_and_margin([s for _, s in spectra])
    L = measure_spectrum(swap, [(ab.word("a"), 1)])
    Lhat = averaged_spectrum(L, (2,))
    rep = graph_segment_check(L.values, Lhat.values, hull, [0, 0.25, 0.5, 0.75, 1])
    assert rep["pass"] and len(rep["rows"]) == 5


def test_necklace_cap(abc):
    from lyapsteer.geometry import GeometryError
    with pytest.raises(GeometryError):
        enumerate_periodic_spectra(abc, Cocycle.diagonal_exact([[0], [1], [2]]), 16)
