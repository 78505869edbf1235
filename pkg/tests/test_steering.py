"""The inductive construction and its ingredients."""

from fractions import Fraction
import math

import pytest
from hypothesis import given, settings, strategies as st

from lyapsteer import words as W
from lyapsteer.approximation import canonical_matching, check_cert
from lyapsteer.cocycle import Cocycle, has_simple_spectrum, periodic_spectrum
from lyapsteer.steering import (SteeringConfig, SteeringError, StepData, antipodal_target,
                                choose_alpha_beta, choose_k_gamma, choose_n0,
                                concatenate_with_transitions, limit_spectrum_check, mixing_ratio,
                                rho_interval, steer, step_inequalities, synthesize_orbit,
                                transition_data, TransitionData)
from lyapsteer.symbolic import PeriodicWord, ShiftSystem, dense_at_radius

from oracles import prod_one_minus_pow2

D = Fraction(1, 16)


def _rho_oracle(n):
    a = Fraction(1, 2 ** (n + 1))
    e = Fraction(1, 1000) / 4 ** n
    return (a + e) / (2 + Fraction(1, 2 ** n) - Fraction(1, 4 ** (n + 1))), \
        (a - e) / (2 + Fraction(1, 4 ** (n + 1)))


def test_rho_examples():
    lo, hi = rho_interval(1)
    assert abs(float(lo) - 0.102667) < 1e-6 and abs(float(hi) - 0.121091) < 1e-6
    lo, hi = rho_interval(30)
    for v in (lo, hi):
        assert abs(v / Fraction(1, 2 ** 32) - 1) < Fraction(1, 10 ** 6) * 2 ** 10
        assert v < Fraction(1, 2 ** 30)


@pytest.mark.parametrize("n", range(0, 31))
def test_rho_chain(n):
    lo, hi = rho_interval(n)
    assert (lo, hi) == _rho_oracle(n)
    assert lo < hi
    if n >= 1:
        assert hi < Fraction(1, 2 ** n)


def test_choose_alpha_beta_example():
    a, b, base_a, base_b, j = choose_alpha_beta(1, 1, 1)
    assert (a, b, j) == (8, 1, 1)
    lo, hi = rho_interval(1)
    assert 1 - hi < mixing_ratio(a, b, 1, 1) < 1 - lo


def _alpha_beta_oracle(n, P, Q):
    lo, hi = rho_interval(n)
    for beta in range(1, 10 ** 5):
        for alpha in range(1, 10 ** 6):
            t = Fraction(alpha * P, alpha * P + beta * Q)
            if t >= 1 - lo:
                break
            if t > 1 - hi:
                return alpha, beta


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(1, 30), st.integers(1, 30))
def test_alpha_beta_minimal(n, P, Q):
    a, b, base_a, base_b, j = choose_alpha_beta(n, P, Q)
    assert (base_a, base_b) == _alpha_beta_oracle(n, P, Q)
    assert (a, b) == (j * base_a, j * base_b)


def test_scaling_absorbs_connectors():
    a, b, base_a, base_b, j = choose_alpha_beta(1, 1, 1, extra=50, margin_copies=4)
    assert j > 1 and (a, b) == (j * base_a, j * base_b)
    assert all(ok for _, ok in step_inequalities(1, a, b, 1, 1, 50, None, 4))


def test_empty_interval_refused():
    lo, hi = rho_interval(1)
    with pytest.raises(SteeringError):
        choose_alpha_beta(1, 1, 1, interval=(hi, lo))


@settings(max_examples=40)
@given(st.integers(1, 50), st.integers(1, 50), st.integers(1, 20), st.integers(1, 20))
def test_t_decreases_in_beta(alpha, beta, P, Q):
    assert mixing_ratio(alpha, beta + 1, P, Q) < mixing_ratio(alpha, beta, P, Q)


def test_antipodal_examples():
    L = (2, -2)
    w = antipodal_target(0, L, L, D)
    assert [c for c, _ in w] == [2 + 2 * D, -2 + 2 * D]
    assert all(h == D / 4 for _, h in w)
    Lp = (2 + D / 4, -2 - D / 4)
    assert [c for c, _ in antipodal_target(0, L, Lp, D)] == [2 - 2 * D, -2 + 2 * D]
    with pytest.raises(SteeringError):
        antipodal_target(3, L, Lp, D)


def test_synthesis_examples(abc, diag3):
    gens = [abc.word(t) for t in "abc"]
    window = [(2, Fraction(1, 100)), (-2, Fraction(1, 100))]
    syn = synthesize_orbit(abc, diag3, window, 0, gens)
    assert syn.spectrum.values == (2, -2)
    assert dense_at_radius(syn.word, 0)[0]
    tiny = Fraction(1, 10 ** 6)
    syn = synthesize_orbit(abc, diag3, [(2, tiny), (-1, tiny)], 0, gens)
    assert all(abs(v - c) < tiny for v, c in zip(syn.spectrum.values, (2, -1)))
    assert has_simple_spectrum(syn.spectrum) and dense_at_radius(syn.word, 0)[0]
    with pytest.raises(SteeringError):
        synthesize_orbit(abc, diag3, [(5, tiny), (-5, tiny)], 0, gens)


@settings(max_examples=15, deadline=None)
@given(st.fractions(min_value=Fraction(13, 10), max_value=Fraction(27, 10), max_denominator=50),
       st.integers(0, 2))
def test_synthesis_hits_window(l1, r):
    S = ShiftSystem.full_shift("abc")
    co = Cocycle.diagonal_exact([[2, -1], [1, -2], [3, -3]])
    gens = [S.word(t) for t in "abc"]
    # stay well inside the triangle: l2 between the two lower edges
    l2 = -l1 - Fraction(1, 2) if l1 < 2 else -Fraction(3, 2) - l1 / 4
    hull_ok = 2 * l1 + l2 < 3 and l1 + 2 * l2 > -3 and l1 - l2 > 3
    if not hull_ok:
        return
    h = Fraction(1, 200)
    syn = synthesize_orbit(S, co, [(l1, h), (l2, h)], r, gens)
    assert all(abs(v - c) < h for v, c in zip(syn.spectrum.values, (l1, l2)))
    assert dense_at_radius(syn.word, r)[0] and has_simple_spectrum(syn.spectrum)


def test_concatenation_examples(ab, golden):
    p, q = ab.word("a"), ab.word("b")
    word, layout = concatenate_with_transitions(p, q, 8, 1, transition_data(p, q))
    assert word.text() == "aaaaaaaab" and layout.length == 9
    p, q = golden.word("a"), golden.word("ab")
    trans = transition_data(p, q)
    assert trans.t0 == trans.t1 == 0
    word, _ = concatenate_with_transitions(p, q, 3, 2, trans)
    assert word.text() == "aaaabab"


def test_inadmissible_junction_suggests_connector(golden):
    p, q = golden.word("ab"), golden.word("ab")
    with pytest.raises(SteeringError, match="try connector"):
        # ...b b... is forbidden
        concatenate_with_transitions(golden.word("ab"), golden.word("ba"), 2, 1,
                                     TransitionData((), ()))


def test_layout_round_trip(ab):
    p, q = ab.word("a"), ab.word("b")
    gamma = Fraction(1, 4)
    R = 2
    for alpha in range(2 * (R + 1) + 1, 12):
        word, layout = concatenate_with_transitions(p, q, alpha, 1, transition_data(p, q))
        cert = canonical_matching(layout, gamma)
        assert cert and check_cert(cert, word, p)[0]


def test_k_gamma_single_letter_and_huge_delta(abc, diag3):
    a = abc.word("a")
    kg = choose_k_gamma(1, a, 5, 3, diag3, D)
    assert kg.k == 6 and kg.orbit_error == 0
    w = abc.word("abc")
    kg = choose_k_gamma(1, w, 3, 3, diag3, Fraction(1000))
    assert kg.k == 4 and kg.j == 5


def test_k_gamma_bounds(abc, diag3):
    w = abc.word("aabcabcbc")
    lam = periodic_spectrum(diag3, w).values
    prev = None
    for n in range(4):
        kg = choose_k_gamma(n, w, prev and prev.k, prev and prev.j, diag3, D, lam)
        assert kg.orbit_error < D / 2 ** (n + 1)
        assert kg.neighborhood_bound < D / 2 ** n
        if prev:
            assert kg.k > prev.k and kg.gamma < prev.gamma / 2
        prev = kg


def test_choose_n0():
    assert choose_n0(Fraction(4, 5)) == 6
    assert choose_n0(10 ** 6) == 2
    # minimality against the exact tail product
    tail = prod_one_minus_pow2(5, 300)
    assert not 2 * (1 - tail) < Fraction(1, 10)


@pytest.fixture(scope="module")
def trace3():
    S = ShiftSystem.full_shift("abc")
    co = Cocycle.diagonal_exact([[2, -1], [1, -2], [3, -3]])
    gens = [S.word(t) for t in "abc"]
    return steer(SteeringConfig((2, -2), D, 3), S, co, gens), co


def test_steer_depth3(trace3):
    trace, co = trace3
    assert trace.failure is None and len(trace.steps) == 4
    for rec in trace.steps:
        assert rec.box_error < D / 2 ** rec.n
        assert rec.dense and rec.simple
    for rec in trace.steps[:-1]:
        assert all(ok for _, ok in rec.inequalities)
        lo, hi = rec.rho
        assert 1 - hi < rec.t < 1 - lo


def test_limit_check_flags_broken_certificate(trace3):
    trace, co = trace3
    assert limit_spectrum_check(trace, co, samples=4)["pass"]
    import copy
    broken = copy.copy(trace)
    broken.steps = list(trace.steps)
    rec = copy.copy(broken.steps[1])
    rec.cert = None
    broken.steps[1] = rec
    rep = limit_spectrum_check(broken, co, samples=4)
    assert not rep["pass"] and any(r.get("reason") == "missing certificate" for r in rep["rows"])


def test_steer_depth0_and_boundary(abc, diag3):
    gens = [abc.word(t) for t in "abc"]
    tr = steer(SteeringConfig((2, -2), D, 0), abc, diag3, gens)
    assert tr.failure is None and len(tr.steps) == 1 and tr.steps[0].box_error < D
    tr = steer(SteeringConfig((2, -1), D, 2), abc, diag3, gens)
    assert tr.failure is not None and "hull" in tr.failure


def test_config_validation():
    with pytest.raises(SteeringError):
        SteeringConfig((0, 0), 1, 2)
    with pytest.raises(SteeringError):
        SteeringConfig((0, 0), Fraction(1, 2), -1)


def test_steer_deterministic(abc, diag3):
    gens = [abc.word(t) for t in "abc"]
    a = steer(SteeringConfig((2, -2), D, 2), abc, diag3, gens)
    b = steer(SteeringConfig((2, -2), D, 2), abc, diag3, gens)
    assert [W.word_hash(s.word.node) for s in a.steps] == [W.word_hash(s.word.node) for s in b.steps]
    assert [(s.alpha, s.beta) for s in a.steps] == [(s.alpha, s.beta) for s in b.steps]
