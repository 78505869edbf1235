"""Inductive construction of periodic orbits whose spectra converge to a target.

Each step takes the current orbit ``p_n``, builds an auxiliary orbit ``q_n``
whose exponents sit on the far side of the target in every coordinate, and
glues ``p_{n+1} = p_n^alpha c0 q_n^beta c1``.  With the mixing ratio
``t = alpha pi(p) / (alpha pi(p) + beta pi(q))`` kept in a narrow interval,
the error to the target halves at each step while ``p_{n+1}`` still shadows
``p_n`` on most of its orbit.

Everything is exact for diagonal cocycles given by rational log-moduli:
spectra are letter counts times log-diagonals, so no step rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math

from . import words as W
from .approximation import (BlockLayout, GIKNChain, GoodApproxCert, Refusal, canonical_matching,
                            check_cert, kappa_schedule, tail_product_lower)
from .cocycle import SpectrumVector, has_simple_spectrum, periodic_spectrum
from .exactlp import linprog_max
from .geometry import hull_and_margin, interior_margin
from .symbolic import Dyadic, PeriodicWord, agreement_radius, dense_at_radius, empirical_integral, tour_word

K_CANDIDATE_CAP = 10 ** 6


class SteeringError(RuntimeError):
    """A step refused; ``step`` names where."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step
        self.reason = message


def _F(v):
    return v if isinstance(v, Fraction) else Fraction(v)


# --- schedules ---------------------------------------------------------------

def rho_interval(n):
    """``(rho_minus, rho_plus)``; the mixing ratio must satisfy ``1 - rho_plus < t < 1 - rho_minus``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    a = Fraction(1, 2 ** (n + 1))
    e = Fraction(1, 1000 * 4 ** n)
    plus = (a - e) / (2 + Fraction(1, 4 ** (n + 1)))
    minus = (a + e) / (2 + Fraction(1, 2 ** n) - Fraction(1, 4 ** (n + 1)))
    assert minus < plus, (n, minus, plus)
    return minus, plus


def delta_n(delta, n):
    return _F(delta) / (1000 * 4 ** n)


@dataclass(frozen=True)
class StepData:
    """Exponent data entering the inequalities that pin down ``(alpha, beta)``."""

    lam_p: tuple
    lam_q: tuple
    target: tuple
    delta: Fraction
    K1: Fraction
    K2: Fraction


def mixing_ratio(alpha, beta, pi_p, pi_q):
    return Fraction(alpha * pi_p, alpha * pi_p + beta * pi_q)


def step_inequalities(n, alpha, beta, pi_p, pi_q, extra, data=None, margin_copies=0):
    """Evaluate every inequality for a candidate pair; returns a list of (name, ok)."""
    total = alpha * pi_p + beta * pi_q + extra
    kappa = kappa_schedule(n)
    rows = [("fraction", Fraction(alpha * pi_p, total) > kappa)]
    if margin_copies:
        rows.append(("fraction_after_margin",
                     alpha > margin_copies and Fraction((alpha - margin_copies) * pi_p, total) > kappa))
    if data is not None:
        dn = delta_n(data.delta, n)
        tol = data.delta / 2 ** (n + 1)
        for i, (lp, lq, lam) in enumerate(zip(data.lam_p, data.lam_q, data.target)):
            up = (alpha * pi_p * (lp + dn) + beta * pi_q * (lq + dn) + data.K1) / total
            lo = (alpha * pi_p * (lp - dn) + beta * pi_q * (lq - dn) + data.K2) / total
            rows.append((f"upper[{i}]", up < lam + tol))
            rows.append((f"lower[{i}]", lo > lam - tol))
    return rows


def choose_alpha_beta(n, pi_p, pi_q, extra=0, data=None, margin_copies=0,
                      interval=None, max_beta=10 ** 7, max_scale=2 ** 200):
    """Smallest beta, then smallest alpha, with ``t`` in the open interval; then scale by j.

    Returns ``(alpha, beta, base_alpha, base_beta, j)``.
    """
    minus, plus = interval if interval is not None else rho_interval(n)
    lo, hi = 1 - plus, 1 - minus
    if not lo < hi:
        raise SteeringError(f"empty mixing interval ({lo}, {hi})", n)
    r = Fraction(pi_q, pi_p)
    a_lo_unit, a_hi_unit = lo / (1 - lo) * r, hi / (1 - hi) * r
    base = None
    for beta in range(1, max_beta + 1):
        a_lo, a_hi = a_lo_unit * beta, a_hi_unit * beta
        alpha = math.floor(a_lo) + 1
        if alpha < a_hi:
            t = mixing_ratio(alpha, beta, pi_p, pi_q)
            assert lo < t < hi
            base = (alpha, beta)
            break
    if base is None:
        raise SteeringError("no (alpha, beta) within the beta cap", n)
    j = 1
    while j <= max_scale:
        rows = step_inequalities(n, j * base[0], j * base[1], pi_p, pi_q, extra, data, margin_copies)
        if all(ok for _, ok in rows):
            return j * base[0], j * base[1], base[0], base[1], j
        j *= 2
    bad = [name for name, ok in rows if not ok]
    raise SteeringError(f"inequalities {bad} fail at every scaling; exponent data violate the "
                        "antipodal preconditions", n)


def antipodal_target(n, L, Lp, delta):
    """Per-coordinate ``(center, half_width)`` for the auxiliary orbit."""
    delta = _F(delta)
    tol = delta / 2 ** n
    half = delta / 4 ** (n + 1)
    out = []
    for i, (lam, lp) in enumerate(zip(L, Lp)):
        lam, lp = _F(lam), _F(lp)
        if not abs(lp - lam) < tol:
            raise SteeringError(f"coordinate {i}: |lambda(p) - lambda| = {abs(lp - lam)} is not "
                                f"< {tol}", n)
        center = lam + 2 * delta if lp <= lam else lam - 2 * delta
        out.append((center, half))
    return out


# --- words -------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionData:
    c0: tuple
    c1: tuple

    @property
    def t0(self):
        return len(self.c0)

    @property
    def t1(self):
        return len(self.c1)

    def products(self, cocycle):
        import numpy as np
        out = []
        for c in (self.c0, self.c1):
            M = np.eye(cocycle.dim)
            for a in c:
                M = cocycle.matrices[a] @ M
            out.append(M)
        return tuple(out)


def _first(word):
    return W.symbol_at(word.node, 0)


def _last(word):
    return W.symbol_at(word.node, word.period - 1)


def transition_data(p, q):
    system = p.system
    c0 = system.shortest_connector(_last(p), _first(q))
    c1 = system.shortest_connector(_last(q), _first(p))
    if c0 is None or c1 is None:
        raise SteeringError("no connecting word between the two orbits")
    return TransitionData(c0, c1)


def concatenate_with_transitions(p, q, alpha, beta, trans):
    """``p^alpha c0 q^beta c1`` and its block layout."""
    system = p.system
    for a, b, c in ((p, q, trans.c0), (q, p, trans.c1)):
        seam = (_last(a),) + tuple(c) + (_first(b),)
        if not system.is_admissible(seam):
            hint = system.shortest_connector(_last(a), _first(b))
            raise SteeringError(f"inadmissible junction {system.decode(seam)!r}; "
                                f"try connector {system.decode(hint) if hint is not None else None!r}")
    node = W.cat(W.power(p.node, alpha), W.leaf(trans.c0), W.power(q.node, beta), W.leaf(trans.c1))
    layout = BlockLayout(p.period, alpha, q.period, beta, trans.t0, trans.t1)
    word = PeriodicWord(system, node)
    if word.period != layout.length:
        raise SteeringError("glued word is a proper power; its block layout would be ambiguous")
    return word, layout


_TOURS = {}


def cached_tour(system, r):
    key = (system, r)
    if key not in _TOURS:
        _TOURS[key] = tour_word(system, r)
    return _TOURS[key]


@dataclass
class Synthesis:
    word: PeriodicWord
    spectrum: SpectrumVector
    exponents: tuple
    budget: int
    radius: int


def _unsorted(cocycle, word):
    return [x / word.period for x in cocycle.log_vector(word.counts())]


def _mixture_weights(vectors, center, prefer=None):
    """Convex weights over ``vectors`` hitting ``center``; maximize the smallest weight,
    or the weight of ``prefer`` when given."""
    k = len(vectors)
    m = len(center)
    A_eq = [[v[i] for v in vectors] + [0] for i in range(m)] + [[1] * k + [0]]
    b_eq = list(center) + [1]
    if prefer is None:
        A_ub = [[-(1 if j == i else 0) for j in range(k)] + [1] for i in range(k)]
        res = linprog_max([0] * k + [1], A_ub, [0] * k, A_eq, b_eq, free=[k])
    else:
        res = linprog_max([1 if j == prefer else 0 for j in range(k)] + [0], [], [], A_eq, b_eq)
    if res.status != "optimal":
        return None
    return res.x[:k]


def synthesize_orbit(system, cocycle, window, density_radius, generators, prefer=None,
                     max_doublings=60):
    """Word ``e_1^{m_1} c e_2^{m_2} ... tour`` with spectrum strictly inside ``window``,
    simple spectrum, and every admissible ``(2r+1)``-word as a cyclic factor."""
    if not cocycle.triangular:
        raise SteeringError("orbit synthesis needs a triangular cocycle (additive exponents)")
    center = [_F(c) for c, _ in window]
    halves = [_F(h) for _, h in window]
    vecs = [_unsorted(cocycle, g) for g in generators]
    w = _mixture_weights(vecs, center, prefer)
    if w is None:
        lo = [min(v[i] for v in vecs) for i in range(len(center))]
        hi = [max(v[i] for v in vecs) for i in range(len(center))]
        bad = [i for i, c in enumerate(center) if not lo[i] <= c <= hi[i]]
        where = f"coordinate {bad[0]}" if bad else "the joint position"
        raise SteeringError(f"window center {[str(c) for c in center]} is outside the generators' "
                            f"hull ({where})")
    used = [j for j, x in enumerate(w) if x > 0]
    tour = cached_tour(system, density_radius) if density_radius >= 0 else None
    tour_node = None
    if tour is not None:
        pad = 2 * density_radius
        tour_node = W.periodic_cut(tour.node, 0, tour.period + pad)
    spread = max(cocycle.spread()) if cocycle.dim else 0
    fixed = sum(generators[j].period for j in used) + (tour_node.length if tour_node else 0) \
        + 2 * system.size * (len(used) + 2)
    h_min = min(halves)
    budget = max(1, math.ceil(4 * fixed * max(_F(spread), Fraction(1)) / h_min))
    for _ in range(max_doublings):
        exps = []
        parts = []
        for j in used:
            g = generators[j]
            mj = max(1, round(w[j] * budget / g.period))
            exps.append((j, mj))
            parts.append(W.power(g.node, mj))
        if tour_node is not None:
            parts.append(tour_node)
        node = _glue_cyclic(system, parts)
        word = PeriodicWord(system, node)
        spec = periodic_spectrum(cocycle, word)
        vals = _unsorted(cocycle, word)
        inside = all(abs(v - c) < h for v, c, h in zip(vals, center, halves))
        inside_sorted = all(abs(v - c) < h for v, c, h in zip(spec.values, center, halves))
        if inside and inside_sorted and has_simple_spectrum(spec):
            if density_radius >= 0:
                ok, missing = dense_at_radius(word, density_radius)
                if not ok:
                    raise SteeringError(f"synthesized word misses pattern {missing!r}")
            return Synthesis(word, spec, tuple(exps), budget, density_radius)
        budget *= 2
    raise SteeringError("could not bring the synthesized spectrum into the window")


def _glue_cyclic(system, parts):
    """Concatenate blocks, inserting shortest connectors at inadmissible seams (cyclically)."""
    out = []
    n = len(parts)
    for i, part in enumerate(parts):
        out.append(part)
        nxt = parts[(i + 1) % n]
        a = W.symbol_at(part, part.length - 1)
        b = W.symbol_at(nxt, 0)
        c = system.shortest_connector(a, b)
        if c is None:
            raise SteeringError("blocks cannot be connected")
        if c:
            out.append(W.leaf(c))
    return W.cat(*out)


# --- k and gamma ---------------------------------------------------------------

@dataclass(frozen=True)
class KGamma:
    k: int
    j: int  # gamma = 2^-j
    orbit_error: Fraction
    neighborhood_bound: Fraction
    free_max: int

    @property
    def gamma(self):
        return Dyadic(self.j)


def orbit_window_error(cocycle, word, k, lam):
    """``max_x max_i |L_i^(k) - L_{i-1}^(k) - lambda_i|`` over the orbit (diagonal cocycles)."""
    if k % word.period == 0:
        return Fraction(0)
    if not word.explicit:
        raise SteeringError("window errors at non-multiples of the period need an explicit word")
    sym = word.symbols
    P = word.period
    worst = Fraction(0)
    rows = cocycle.log_diag
    ext = sym + sym * (k // P + 1)
    acc = [Fraction(0)] * cocycle.dim
    for s in ext[:k]:
        for i in range(cocycle.dim):
            acc[i] += rows[s][i]
    for x in range(P):
        vals = sorted((a / k for a in acc), reverse=True)
        worst = max(worst, max(abs(v - l) for v, l in zip(vals, lam)))
        out_s, in_s = ext[x], ext[x + k]
        for i in range(cocycle.dim):
            acc[i] += rows[in_s][i] - rows[out_s][i]
    return worst


def _orbit_error_float(cocycle, word, k, lam):
    import numpy as np
    sym = np.array(word.symbols)
    P = len(sym)
    D = np.array([[float(v) for v in row] for row in cocycle.log_diag])
    ext = np.concatenate([sym] * (k // P + 2))
    cums = np.vstack([np.zeros(cocycle.dim), np.cumsum(D[ext], axis=0)])
    win = (cums[k:k + P] - cums[:P]) / k
    win = -np.sort(-win, axis=1)
    return float(np.max(np.abs(win - np.array([float(v) for v in lam]))))


def choose_k_gamma(n, word, prev_k, prev_j, cocycle, delta, lam=None):
    """``k_n`` with orbit window error ``< delta/2^{n+1}`` and dyadic ``gamma_n = 2^-j`` whose
    ``2 gamma_n``-neighborhood keeps the error ``< delta/2^n`` (worst case over free symbols)."""
    if cocycle.kind != "diagonal":
        raise SteeringError("k/gamma certification is implemented for diagonal cocycles", n)
    delta = _F(delta)
    lam = lam if lam is not None else periodic_spectrum(cocycle, word).values
    orbit_tol = delta / 2 ** (n + 1)
    nb_tol = delta / 2 ** n
    P = word.period
    start = (prev_k or 0) + 1
    first_multiple = -(-start // P) * P
    k = None
    if word.explicit and first_multiple - start < K_CANDIDATE_CAP:
        for cand in range(start, first_multiple + 1):
            if cand % P and _orbit_error_float(cocycle, word, cand, lam) >= float(orbit_tol) * (1 + 1e-9):
                continue
            if orbit_window_error(cocycle, word, cand, lam) < orbit_tol:
                k = cand
                break
    else:
        k = first_multiple
    if k is None:
        raise SteeringError("k search exhausted", n)
    err = orbit_window_error(cocycle, word, k, lam)
    spread = max(_F(s) for s in cocycle.spread())
    if spread == 0:
        free = k - 1
    else:
        free = max(0, min(k - 1, math.ceil((nb_tol - err) * k / spread) - 1))
    radius = max(0, k - 1 - free)
    j = max(radius + 1, 2 if prev_j is None else prev_j + 2, 2)
    bound = err + Fraction(max(0, k - j), k) * spread
    assert bound < nb_tol
    return KGamma(k, j, err, bound, free)


def neighborhood_bound(cocycle, word, k, j, lam):
    """Rigorous bound on the exponent error over the ``2^{1-j}``-neighborhood at step ``k``."""
    err = orbit_window_error(cocycle, word, k, lam)
    spread = max(_F(s) for s in cocycle.spread())
    return err, err + Fraction(max(0, k - j), k) * spread


# --- the construction ----------------------------------------------------------

@dataclass
class SteeringConfig:
    target: tuple
    delta: Fraction
    depth: int
    max_density_radius: int = 3
    start_step: int = 0

    def __post_init__(self):
        self.target = tuple(_F(v) for v in self.target)
        self.delta = _F(self.delta)
        if not 0 < self.delta < 1:
            raise SteeringError("delta must lie in (0, 1)")
        if self.depth < 0:
            raise SteeringError("depth must be >= 0")

    def to_json(self):
        return {"target": [_fs(v) for v in self.target], "delta": _fs(self.delta),
                "depth": self.depth, "max_density_radius": self.max_density_radius,
                "start_step": self.start_step}


def _fs(x):
    x = _F(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def check_config(config, cocycle, generators):
    spectra = [periodic_spectrum(cocycle, g) for g in generators]
    hull = hull_and_margin(spectra)
    margin = interior_margin(config.target, hull)
    if not margin >= config.delta or margin <= 0:
        raise SteeringError(f"B_(4 delta)(L) is not inside the generators' hull: largest admissible "
                            f"delta is {margin}, requested {config.delta}")
    return hull, margin


@dataclass
class StepRecord:
    n: int
    word: PeriodicWord
    spectrum: SpectrumVector
    box_error: Fraction
    simple: bool
    radius_required: int
    radius_effective: int
    dense: bool
    kg: KGamma | None = None
    q: PeriodicWord | None = None
    q_spectrum: SpectrumVector | None = None
    window: list | None = None
    alpha: int | None = None
    beta: int | None = None
    scale: int | None = None
    t: Fraction | None = None
    rho: tuple | None = None
    trans: TransitionData | None = None
    layout: BlockLayout | None = None
    cert: GoodApproxCert | None = None
    inequalities: list | None = None


@dataclass
class SteeringTrace:
    config: SteeringConfig
    steps: list = field(default_factory=list)
    failure: str | None = None
    failure_step: int | None = None

    @property
    def words(self):
        return [s.word for s in self.steps]

    def chain(self):
        done = [s for s in self.steps if s.kg is not None]
        return GIKNChain(
            words=[s.word for s in self.steps],
            gammas=[s.kg.gamma for s in done],
            kappas=[kappa_schedule(s.n) for s in done],
            certs=[s.cert for s in self.steps[:-1]],
            ks=[s.kg.k for s in done],
            layouts=[s.layout for s in self.steps[:-1]],
        )


def _record_word(n, word, cocycle, config):
    spec = periodic_spectrum(cocycle, word)
    err = spec.box_distance(config.target)
    required = agreement_radius(config.delta / 2 ** n)
    eff = min(required, config.max_density_radius)
    dense, _ = dense_at_radius(word, eff)
    return StepRecord(n, word, spec, err, has_simple_spectrum(spec), required, eff, dense)


def _assert_items(rec, config):
    n = rec.n
    if not rec.box_error < config.delta / 2 ** n:
        raise SteeringError(f"box error {rec.box_error} is not < delta/2^n", n)
    if not rec.simple:
        raise SteeringError("spectrum is not simple", n)
    if not rec.dense:
        raise SteeringError(f"word is not dense at radius {rec.radius_effective}", n)


def steer(config, system, cocycle, generators, p0=None):
    """Run the construction; returns the trace (``trace.failure`` set on refusal)."""
    trace = SteeringTrace(config)
    try:
        check_config(config, cocycle, generators)
        n0 = config.start_step
        if p0 is None:
            r0 = min(agreement_radius(config.delta / 2 ** n0), config.max_density_radius)
            window = [(lam, config.delta / 2 ** n0) for lam in config.target]
            p0 = synthesize_orbit(system, cocycle, window, r0, generators).word
        _run_steps(trace, config, system, cocycle, generators, p0)
    except SteeringError as exc:
        trace.failure = exc.reason
        trace.failure_step = exc.step
    return trace


def _run_steps(trace, config, system, cocycle, generators, p):
    n0 = config.start_step
    prev_k, prev_j = None, None
    for n in range(n0, n0 + config.depth + 1):
        rec = _record_word(n, p, cocycle, config)
        trace.steps.append(rec)
        _assert_items(rec, config)
        rec.kg = choose_k_gamma(n, p, prev_k, prev_j, cocycle, config.delta, rec.spectrum.values)
        prev_k, prev_j = rec.kg.k, rec.kg.j
        if n == n0 + config.depth:
            break
        rec.window = antipodal_target(n, config.target, rec.spectrum.values, config.delta)
        rq = min(agreement_radius(config.delta / 4 ** (n + 1)), config.max_density_radius)
        syn = synthesize_orbit(system, cocycle, rec.window, rq, generators)
        q = syn.word
        rec.q, rec.q_spectrum = q, syn.spectrum
        trans = transition_data(p, q)
        rec.trans = trans
        extra = trans.t0 + trans.t1
        data = StepData(tuple(rec.spectrum.values), tuple(syn.spectrum.values), config.target,
                        config.delta, extra * _F(cocycle.log_norm_bound),
                        extra * _F(cocycle.log_conorm_bound))
        R = agreement_radius(rec.kg.gamma)
        margin = 2 * (-(-R // p.period)) + 2  # copies lost to the window at both block ends
        rec.rho = rho_interval(n)
        alpha, beta, _, _, j = choose_alpha_beta(n, p.period, q.period, extra, data, margin)
        rec.alpha, rec.beta, rec.scale = alpha, beta, j
        rec.t = mixing_ratio(alpha, beta, p.period, q.period)
        rec.inequalities = step_inequalities(n, alpha, beta, p.period, q.period, extra, data, margin)
        nxt, layout = concatenate_with_transitions(p, q, alpha, beta, trans)
        rec.layout = layout
        cert = canonical_matching(layout, rec.kg.gamma, kappa_schedule(n))
        if not cert:
            raise SteeringError(f"good approximation refused: {cert.reason}", n)
        ok, bullet, msg = check_cert(cert, nxt, p)
        if not ok:
            raise SteeringError(f"certificate fails bullet {bullet}: {msg}", n)
        rec.cert = cert
        p = nxt


# --- the limit -----------------------------------------------------------------

def y_samples(trace, n, count=8):
    """Points of ``Y_n`` obtained by composing preimages from ``Orb(p_0)``; phases of ``p_n``."""
    steps = trace.steps
    P0 = steps[0].word.period
    out = []
    for s in range(count):
        y = (s * 7919 * (P0 // count + 1)) % P0
        for m in range(n):
            pre = steps[m].cert.preimages(y)
            y = pre[(s * 31 + m) % len(pre)]
        out.append(y)
    return sorted(set(out))


def y_membership(trace, n, x):
    """True iff the phase ``x`` of ``p_n`` lies in ``Y_n``."""
    for m in range(n - 1, -1, -1):
        cert = trace.steps[m].cert
        try:
            x = cert.rho(x)
        except KeyError:
            return False
    return True


def limit_spectrum_check(trace, cocycle, samples=8):
    """Masses of ``Y_n`` and the exterior-rate windows at every stored ``k_j`` on samples of ``Y_n``."""
    config = trace.config
    n0 = config.start_step
    rows = []
    ok_all = True
    L = config.target
    delta = config.delta
    size = trace.steps[0].word.period
    for idx, rec in enumerate(trace.steps):
        n = rec.n
        if idx > 0:
            prev = trace.steps[idx - 1]
            if prev.cert is None:
                rows.append({"n": n, "ok": False, "reason": "missing certificate"})
                ok_all = False
                break
            size *= prev.cert.fiber_size
        mass = Fraction(size, rec.word.period)
        bound = math.prod((1 - Fraction(1, 2 ** l) for l in range(max(n0, 1), n + 1)),
                          start=Fraction(1)) if n > n0 else Fraction(1)
        mass_ok = mass >= bound
        window_ok = True
        worst = Fraction(0)
        for y in y_samples(trace, idx, samples):
            if not y_membership(trace, idx, y):
                window_ok = False
                continue
            for jdx in range(idx + 1):
                kg = trace.steps[jdx].kg
                j = trace.steps[jdx].n
                counts = W.cyclic_window_counts(rec.word.node, y, kg.k)
                vals = sorted((v / kg.k for v in cocycle.log_vector(counts)), reverse=True)
                gap = max(abs(v - lam) for v, lam in zip(vals, L))
                tol = delta * Fraction(2, 2 ** j)
                worst = max(worst, gap / tol)
                if not gap < tol:
                    window_ok = False
        rows.append({"n": n, "mass": mass, "mass_bound": bound, "mass_ok": mass_ok,
                     "window_ok": window_ok, "worst_ratio": worst})
        ok_all = ok_all and mass_ok and window_ok
    return {"rows": rows, "pass": ok_all}


# --- weak* targeting -------------------------------------------------------------

def choose_n0(eta, K=1):
    """Smallest ``n0 >= 2`` with ``2K(1 - prod_{n >= n0}(1 - 2^-n)) < eta/8`` (rigorous bound)."""
    eta = _F(eta)
    n0 = 2
    while not 2 * K * (1 - tail_product_lower(n0)) < eta / 8:
        n0 += 1
    return n0


def measure_block(mu):
    """One block ``u_1^{m_1} ... u_r^{m_r}`` whose orbit measure reproduces the weights exactly
    up to the seams: ``m_k |u_k|`` proportional to ``w_k``."""
    weights = [(_F(w), u) for u, w in mu]
    den = math.lcm(*[w.denominator for w, _ in weights])
    lens = math.lcm(*[u.period for _, u in weights])
    return [(u, int(w * den) * lens // u.period) for w, u in weights if w > 0]


def steer_near_measure(mu, observables, eta, config, system, cocycle, generators, K=1,
                       max_doublings=40):
    """Start the construction at ``n0`` from an orbit weak*-close to ``mu`` and report the gaps."""
    eta = _F(eta)
    n0 = choose_n0(eta, K)
    targets = [sum((w * empirical_integral(u, phi) for u, w in ((u, _F(w)) for u, w in mu)),
                   Fraction(0)) for phi in observables]
    block = measure_block(mu)
    node = W.cat(*[W.power(u.node, m) for u, m in block])
    base = PeriodicWord(system, node)
    cfg = SteeringConfig(config.target, config.delta, config.depth, config.max_density_radius, n0)
    check_config(cfg, cocycle, generators)
    r0 = min(agreement_radius(cfg.delta / 2 ** n0), cfg.max_density_radius)
    window = [(lam, cfg.delta / 2 ** n0) for lam in cfg.target]
    gens = [base] + list(generators)
    p0 = None
    syn = synthesize_orbit(system, cocycle, window, r0, gens, prefer=0, max_doublings=max_doublings)
    p0 = syn.word
    gaps0 = [abs(empirical_integral(p0, phi) - v) for phi, v in zip(observables, targets)]
    if not max(gaps0) < eta / 4:
        raise SteeringError(f"starting orbit is {max(gaps0)} away on the observables, not < eta/4", n0)
    trace = steer(cfg, system, cocycle, generators, p0=p0)
    rows = []
    for rec in trace.steps:
        gaps = [abs(empirical_integral(rec.word, phi) - v) for phi, v in zip(observables, targets)]
        rows.append({"n": rec.n, "max_gap": max(gaps), "ok": max(gaps) < eta / 2})
    report = {"n0": n0, "K": K, "eta": eta, "start_gap": max(gaps0), "rows": rows,
              "pass": trace.failure is None and all(r["ok"] for r in rows)}
    return trace, report
