"""Products, periodic spectra and exterior rates."""

from fractions import Fraction
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapsteer.cocycle import (Cocycle, CocycleError, SpectrumVector, exponents_from_exterior,
                               exterior_profile, exterior_rate, has_simple_spectrum,
                               log_abs_det, log_singular_values, measure_spectrum,
                               periodic_spectrum, product_along)
from lyapsteer.symbolic import OrbitPoint, ShiftSystem

E = math.e


def test_product_examples(abc, diag3, ab, swap):
    P = product_along(diag3, abc.word("abc")).full()
    assert np.allclose(P, np.diag([E ** 6, E ** -6]))
    P = product_along(swap, ab.word("ab")).full()
    assert np.allclose(P, [[0, 0.5], [2, 0]])


def test_periodic_spectrum_examples(abc, diag3, ab, swap):
    assert periodic_spectrum(diag3, abc.word("abc")).values == (2, -2)
    assert periodic_spectrum(diag3, abc.word("a")).values == (2, -1)
    assert np.allclose(periodic_spectrum(swap, ab.word("ab")).values, (0, 0), atol=1e-12)
    assert np.allclose(periodic_spectrum(swap, ab.word("a")).values, (math.log(2), -math.log(2)))


def test_exterior_examples(abc, diag3):
    pt = OrbitPoint(abc.word("a"), 0)
    assert exterior_rate(diag3, pt, 0, 5) == 0
    assert exterior_rate(diag3, pt, 1, 1) == 2
    assert exterior_rate(diag3, pt, 2, 1) == 1
    for k in (1, 7, 1000):
        assert exponents_from_exterior(diag3, pt, k).values == (2, -1)


def test_diagonal_exterior_exact_at_period_multiples(abc, diag3):
    pt = OrbitPoint(abc.word("abc"), 1)
    for k in (3, 30, 300):
        assert exponents_from_exterior(diag3, pt, k).values == (2, -2)
    # off a period multiple the window is a proper sub-word: exact but not the orbit average
    assert exponents_from_exterior(diag3, OrbitPoint(abc.word("abc"), 0), 10).values == \
        (2, Fraction(-19, 10))


def test_measure_spectrum_examples(abc, diag3):
    half = Fraction(1, 2)
    mu = [(abc.word("a"), half), (abc.word("b"), half)]
    assert measure_spectrum(diag3, mu).values == (Fraction(3, 2), Fraction(-3, 2))
    assert measure_spectrum(diag3, [(abc.word("abc"), 1)]).values == (2, -2)
    with pytest.raises(CocycleError):
        measure_spectrum(diag3, [(abc.word("a"), half)])


def test_simple_spectrum_examples():
    assert has_simple_spectrum(SpectrumVector((2, -2)))
    assert not has_simple_spectrum(SpectrumVector((0, 0)))
    assert not has_simple_spectrum(SpectrumVector((2.0, 2.0 - 1e-12)))


def test_nonincreasing_enforced():
    with pytest.raises(CocycleError):
        SpectrumVector((Fraction(1), Fraction(2)))


def test_singular_generator_rejected():
    with pytest.raises(CocycleError):
        Cocycle([np.array([[1.0, 2.0], [2.0, 4.0]])])


def test_norm_bounds(swap, diag3):
    assert diag3.log_norm_bound == 3 and diag3.log_conorm_bound == -3
    assert swap.log_conorm_bound <= swap.log_norm_bound
    assert math.isclose(swap.log_norm_bound, math.log(2))


def test_nonnormal_rate_matches_high_precision_oracle():
    # eigenvalues 3, 1/3 with skew eigenvectors; the finite-k bias is log(|v||w|)/k
    V = np.array([[1.0, 1.0], [0.0, 0.2]])
    M = V @ np.diag([3.0, 1 / 3]) @ np.linalg.inv(V)
    S = ShiftSystem.full_shift("a")
    co = Cocycle([M])
    pt = OrbitPoint(S.word("a"), 0)
    mpmath.mp.dps = 80
    Mk = mpmath.matrix(M.tolist()) ** 100
    sv = mpmath.svd_r(Mk, compute_uv=False)
    want = sorted((float(mpmath.log(s) / 100) for s in sv), reverse=True)
    got = exponents_from_exterior(co, pt, 100).values
    assert np.allclose(got, want, atol=1e-10)
    bias = got[0] - math.log(3)
    assert 1e-3 < bias < 2e-2  # O(1/k), not geometric


@st.composite
def general_cocycle(draw, m=None):
    m = m or draw(st.sampled_from([2, 3]))
    rng = np.random.default_rng(draw(st.integers(0, 10 ** 6)))
    mats = []
    for _ in range(2):
        A = rng.normal(size=(m, m))
        while abs(np.linalg.det(A)) < 0.1:
            A = rng.normal(size=(m, m))
        mats.append(A)
    return Cocycle(mats)


words = st.text("ab", min_size=1, max_size=12)


@settings(max_examples=40, deadline=None)
@given(general_cocycle(), words)
def test_spectrum_sum_is_log_det(co, text):
    S = ShiftSystem.full_shift("ab")
    w = S.word(text)
    total = sum(periodic_spectrum(co, w).values) * w.period
    assert math.isclose(total, log_abs_det(co, w), abs_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(general_cocycle(), words, st.integers(0, 11), st.integers(1, 3))
def test_spectrum_rotation_and_power_invariant(co, text, s, j):
    S = ShiftSystem.full_shift("ab")
    w = S.word(text)
    s %= len(text)
    rot = S.word(text[s:] + text[:s])
    powr = S.word(text * j)
    base = periodic_spectrum(co, w).values
    assert np.allclose(periodic_spectrum(co, rot).values, base, atol=1e-8)
    assert np.allclose(periodic_spectrum(co, powr).values, base, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(general_cocycle(), st.lists(st.integers(0, 1), min_size=1, max_size=40))
def test_log_singular_values_match_svd(co, seq):
    mats = [co.matrices[a] for a in seq]
    # float64 SVD of the product is itself wrong when ill conditioned; use extended precision
    mpmath.mp.dps = 120
    P = mpmath.eye(co.dim)
    for A in mats:
        P = mpmath.matrix(A.tolist()) * P
    want = sorted((float(mpmath.log(v)) for v in mpmath.svd_r(P, compute_uv=False)), reverse=True)
    assert np.allclose(log_singular_values(mats), want, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(general_cocycle(), words, st.integers(0, 30), st.integers(1, 60), st.integers(1, 60))
def test_subadditivity(co, text, phase, k1, k2):
    S = ShiftSystem.full_shift("ab")
    w = S.word(text)
    x = OrbitPoint(w, phase % w.period)
    y = x.shift(k1)
    for i in range(co.dim + 1):
        lhs = (k1 + k2) * exterior_rate(co, x, i, k1 + k2)
        rhs = k1 * exterior_rate(co, x, i, k1) + k2 * exterior_rate(co, y, i, k2)
        assert lhs <= rhs + 1e-9


@settings(max_examples=30, deadline=None)
@given(general_cocycle(), words, st.integers(1, 80))
def test_exterior_profile_telescopes(co, text, k):
    S = ShiftSystem.full_shift("ab")
    pt = OrbitPoint(S.word(text), 0)
    prof = exterior_profile(co, pt, k)
    est = exponents_from_exterior(co, pt, k).values
    assert prof[0] == 0
    assert np.allclose(np.diff(prof), est, atol=1e-12)
    seq = pt.coords(0, k)
    logdet = sum(math.log(abs(np.linalg.det(co.matrices[a]))) for a in seq) / k
    assert math.isclose(prof[-1], logdet, abs_tol=1e-9)


@settings(max_examples=20, deadline=None)
@given(general_cocycle(m=2), words, st.integers(1, 30))
def test_rate_continuous_in_cocycle(co, text, k):
    S = ShiftSystem.full_shift("ab")
    pt = OrbitPoint(S.word(text), 0)
    base = exponents_from_exterior(co, pt, k).values
    rng = np.random.default_rng(0)
    for eps in (1e-4, 1e-6):
        pert = Cocycle([A + eps * rng.normal(size=A.shape) for A in co.matrices])
        moved = exponents_from_exterior(pert, pt, k).values
        # each step moves a log singular value by O(eps * cond)
        conds = max(np.linalg.cond(A) for A in co.matrices)
        assert max(abs(a - b) for a, b in zip(base, moved)) < 50 * eps * conds


def test_long_product_qr_keeps_small_directions():
    A = np.array([[2.0, 1.0], [1.0, 1.0]])  # eigenvalues phi^2, phi^-2
    S = ShiftSystem.full_shift("a")
    co = Cocycle([A])
    est = exponents_from_exterior(co, OrbitPoint(S.word("a"), 0), 2000).values
    lam = math.log((3 + math.sqrt(5)) / 2)
    assert abs(est[0] - lam) < 1e-3 and abs(est[1] + lam) < 1e-3


def test_json_roundtrip(abc, diag3):
    back = Cocycle.from_json(diag3.to_json(abc), abc)
    assert back.log_diag == diag3.log_diag and back.exact
    neg = Cocycle.diagonal_exact([[1, 0], [0, 1], [2, -2]], signs=[[-1, 1], [1, 1], [1, -1]])
    again = Cocycle.from_json(neg.to_json(abc), abc)
    assert np.allclose(again.matrices[0], neg.matrices[0])
