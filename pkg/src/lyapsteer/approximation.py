"""Good approximations between periodic orbits and chains of them.

An orbit ``q`` approximates ``p`` at scale ``gamma`` on a set ``X`` of its
phases when a map ``rho: X -> Orb(p)`` keeps ``sigma^i x`` and
``sigma^i rho(x)`` within ``gamma`` for a whole period of ``p`` and every
fiber of ``rho`` has the same size.  In the shift metric the distance
condition is a word equality: the window ``[x - R, x + pi(p) - 1 + R]`` of
``q`` must equal the matching window of ``p``, with ``R = agreement_radius``.

Certificates store ``rho`` as runs ``(q_start, length, p_start)`` meaning
``rho(q_start + i) = (p_start + i) mod pi(p)``, so they stay small even when
the words are astronomically long.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
import math

from . import words as W
from .symbolic import Dyadic, agreement_radius, depth_cylinders, empirical_integral


def _frac(v):
    return v if isinstance(v, (Fraction, Dyadic)) else Fraction(v)


@dataclass(frozen=True)
class GoodApproxCert:
    """Witness that ``q`` is a ``(gamma, kappa)``-good approximation of ``p``."""

    q_period: int
    p_period: int
    runs: tuple
    gamma: Fraction
    kappa: Fraction
    fiber_size: int

    @property
    def size(self):
        return sum(length for _, length, _ in self.runs)

    @property
    def fraction(self):
        return Fraction(self.size, self.q_period)

    def phases(self):
        for qs, length, _ in self.runs:
            for i in range(length):
                yield (qs + i) % self.q_period

    def rho(self, x):
        for qs, length, ps in self.runs:
            off = (x - qs) % self.q_period
            if off < length:
                return (ps + off) % self.p_period
        raise KeyError(x)

    def preimages(self, y):
        """All ``x`` in X with ``rho(x) = y``."""
        out = []
        for qs, length, ps in self.runs:
            first = (y - ps) % self.p_period
            for off in range(first, length, self.p_period):
                out.append((qs + off) % self.q_period)
        return out

    def to_json(self):
        return {"q_period": self.q_period, "p_period": self.p_period,
                "runs": [list(r) for r in self.runs], "gamma": _fstr(self.gamma),
                "kappa": _fstr(self.kappa), "fiber_size": self.fiber_size}

    @classmethod
    def from_json(cls, d):
        return cls(int(d["q_period"]), int(d["p_period"]),
                   tuple(tuple(int(v) for v in r) for r in d["runs"]),
                   Dyadic.parse(d["gamma"]), Fraction(d["kappa"]), int(d["fiber_size"]))


def _fstr(x):
    if isinstance(x, Dyadic):
        return str(x)
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Refusal:
    """A declined request: which condition failed and what would have been achievable."""

    reason: str
    bullet: int | None = None
    best_kappa: Fraction | None = None
    suggestion: dict = field(default_factory=dict)

    def __bool__(self):
        return False


# --- checking ---------------------------------------------------------------

def _windows_match(q, qs, span, p, ps, R):
    if R < 0:
        return True
    a = W.periodic_cut(q.node, qs - R, qs + span + R)
    b = W.periodic_cut(p.node, ps - R, ps + span + R)
    return W.equal(a, b)


def check_cert(cert, q, p):
    """Re-run the three defining conditions; returns ``(ok, failing_bullet, message)``."""
    if cert.q_period != q.period or cert.p_period != p.period:
        return False, None, "certificate periods do not match the words"
    if cert.size == 0 or Fraction(cert.size, q.period) <= cert.kappa:
        return False, 1, f"|X|/pi(q) = {Fraction(cert.size, q.period)} is not > kappa = {cert.kappa}"
    R = agreement_radius(cert.gamma)
    for qs, length, ps in cert.runs:
        if length <= 0:
            return False, 2, "empty run"
        if not _windows_match(q, qs, length + p.period - 1, p, ps, R):
            return False, 2, f"run starting at q-phase {qs} leaves the gamma-neighborhood"
    # X must be a set: runs pairwise disjoint modulo pi(q)
    spans = sorted((qs % q.period, length) for qs, length, _ in cert.runs)
    if sum(length for _, length in spans) > q.period:
        return False, 3, "runs overlap"
    for (a, la), (b, _) in zip(spans, spans[1:]):
        if a + la > b:
            return False, 3, "runs overlap"
    if spans and spans[-1][0] + spans[-1][1] > q.period + spans[0][0]:
        return False, 3, "runs overlap"
    # every fiber has exactly fiber_size points
    cov = _coverage(cert.runs, p.period)
    if any(c != cert.fiber_size for c in cov.values()):
        return False, 3, f"fiber sizes {sorted(set(cov.values()))} are not all {cert.fiber_size}"
    return True, None, "ok"


def _coverage(runs, P):
    """Piecewise-constant fiber counts over ``[0, P)`` by an endpoint sweep."""
    base = 0
    events = defaultdict(int)
    for _, length, ps in runs:
        full, rem = divmod(length, P)
        base += full
        if rem:
            a = ps % P
            b = a + rem
            if b <= P:
                events[a] += 1
                events[b] -= 1
            else:
                events[a] += 1
                events[P] -= 1
                events[0] += 1
                events[b - P] -= 1
    pts = sorted(set(events) | {0})
    out = {}
    level = base
    for i, x in enumerate(pts):
        level += events[x]
        nxt = pts[i + 1] if i + 1 < len(pts) else P
        if x < P and nxt > x:
            out[(x, nxt)] = level
    return out


# --- searching --------------------------------------------------------------

def best_fiber(q, p, gamma):
    """Largest equal fiber size with all distance conditions met, plus a witness.

    For a primitive ``p`` the window of length ``pi(p) + 2R`` around a phase
    determines that phase, so the admissible ``x`` for each ``y`` form
    disjoint classes and the best fiber is the smallest class size.
    """
    R = agreement_radius(gamma)
    P = p.period
    if R < 0:
        f = q.period // P
        return f, [(y + P * t, y) for y in range(P) for t in range(f)]
    span = P + 2 * R
    pext = W.materialize(W.periodic_cut(p.node, -R, P + span - R))
    key_to_y = {}
    for y in range(P):
        key_to_y.setdefault(pext[y:y + span], y)
    qext = W.materialize(W.periodic_cut(q.node, -R, q.period + span - R))
    classes = defaultdict(list)
    for x in range(q.period):
        y = key_to_y.get(qext[x:x + span])
        if y is not None:
            classes[y].append(x)
    f = min(len(classes.get(y, ())) for y in range(P))
    pairs = [(x, y) for y in range(P) for x in classes.get(y, [])[:f]]
    return f, pairs


def _runs_from_pairs(pairs, Q, P):
    pairs = sorted(pairs)
    runs = []
    for x, y in pairs:
        if runs:
            qs, length, ps = runs[-1]
            if x == qs + length and y == (ps + length) % P:
                runs[-1] = (qs, length + 1, ps)
                continue
        runs.append((x, 1, y))
    return tuple(runs)


def verify_good_approx(q, p, gamma, kappa):
    """Certificate that ``q`` is a ``(gamma, kappa)``-good approximation of ``p``, or a Refusal."""
    gamma, kappa = _frac(gamma), _frac(kappa)
    if q.system != p.system:
        return Refusal("words live over different systems")
    if q.period > W.MATERIALIZE_LIMIT // 4:
        return Refusal("q too long for a search; use canonical_matching on its block layout")
    f, pairs = best_fiber(q, p, gamma)
    best = Fraction(f * p.period, q.period)
    if f == 0:
        return Refusal("no phase of q stays gamma-close to Orb(p) for a full period",
                       bullet=2, best_kappa=Fraction(0))
    if best <= kappa:
        return Refusal(f"best achievable fraction {best} is not > kappa", bullet=1, best_kappa=best)
    cert = GoodApproxCert(q.period, p.period, _runs_from_pairs(pairs, q.period, p.period),
                          gamma, kappa, f)
    return cert


@dataclass(frozen=True)
class BlockLayout:
    """Where the ``p^alpha`` block sits inside ``p^alpha c0 q^beta c1`` (offset 0)."""

    p_period: int
    alpha: int
    q_period: int
    beta: int
    t0: int
    t1: int

    @property
    def length(self):
        return self.alpha * self.p_period + self.beta * self.q_period + self.t0 + self.t1

    def to_json(self):
        return {"p_period": self.p_period, "alpha": self.alpha, "q_period": self.q_period,
                "beta": self.beta, "t0": self.t0, "t1": self.t1}

    @classmethod
    def from_json(cls, d):
        return cls(*(int(d[k]) for k in ("p_period", "alpha", "q_period", "beta", "t0", "t1")))


def canonical_copies(layout, gamma):
    """Copies ``c`` of p (phases ``[cP, (c+1)P)``) whose whole gamma-window stays inside the
    ``p^alpha`` block: ``[cP - R, (c+2)P - 2 + R]`` within ``[0, alpha P - 1]``.

    Returns ``(lo, hi, alpha_min)`` with copies ``lo <= c < hi``.
    """
    R = max(agreement_radius(gamma), 0)
    P = layout.p_period
    lo = -(-R // P)
    hi = (layout.alpha * P + 1 - R) // P - 1
    # smallest alpha with hi > lo
    alpha_min = ((lo + 2) * P + R - 1 + P - 1) // P
    return lo, hi, alpha_min


def canonical_matching(layout, gamma, kappa=Fraction(0)):
    """Certificate from the block layout alone: complete interior copies of p map by alignment."""
    lo, hi, alpha_min = canonical_copies(layout, gamma)
    if hi <= lo:
        return Refusal(f"alpha = {layout.alpha} leaves no complete copy of p clear of the block "
                       f"boundaries", bullet=2, best_kappa=Fraction(0),
                       suggestion={"alpha": alpha_min})
    P = layout.p_period
    f = hi - lo
    size = f * P
    frac = Fraction(size, layout.length)
    if frac <= _frac(kappa):
        return Refusal(f"canonical fraction {frac} is not > kappa", bullet=1, best_kappa=frac)
    return GoodApproxCert(layout.length, P, ((lo * P, size, 0),), _frac(gamma), _frac(kappa), f)


# --- chains -----------------------------------------------------------------

def kappa_schedule(n):
    return 1 - Fraction(1, 2 ** n)


@dataclass
class GIKNChain:
    words: list
    gammas: list
    kappas: list
    certs: list
    ks: list
    layouts: list = field(default_factory=list)


def verify_gikn(chain):
    """Check the hypotheses of the chain criterion on a finite chain."""
    n = len(chain.words)
    report = {"length": n}
    halving_fail = None
    for i in range(len(chain.gammas) - 1):
        if not chain.gammas[i + 1] < chain.gammas[i] / 2:
            halving_fail = i
            break
    if chain.gammas and not chain.gammas[0] < 1:
        halving_fail = halving_fail if halving_fail is not None else -1
    report["gamma_halving"] = {"pass": halving_fail is None, "failing_link": halving_fail}
    pos = [Fraction(k) for k in chain.kappas[: max(n - 1, 0)] if k > 0]
    prod = math.prod(pos, start=Fraction(1))
    report["kappa_product"] = prod
    # tail continuation with kappa_j = 1 - 2^-j beyond the chain: prod >= 1 - sum 2^-j
    last = max((i for i, k in enumerate(chain.kappas[: max(n - 1, 0)])), default=0)
    report["kappa_infinite_lower_bound"] = prod * (1 - Fraction(1, 2 ** max(last, 0)))
    links = []
    for i in range(n - 1):
        if i >= len(chain.certs) or chain.certs[i] is None:
            links.append({"link": i, "valid": False, "reason": "missing certificate"})
            continue
        cert = chain.certs[i]
        ok, bullet, msg = check_cert(cert, chain.words[i + 1], chain.words[i])
        if ok and (cert.gamma != chain.gammas[i] or cert.kappa != Fraction(chain.kappas[i])):
            ok, msg = False, "certificate (gamma, kappa) differ from the chain schedule"
        links.append({"link": i, "valid": ok, "bullet": bullet, "reason": msg})
    report["links"] = links
    periods = [w.period for w in chain.words]
    report["periods_increasing"] = all(a < b for a, b in zip(periods, periods[1:]))
    report["aperiodicity"] = "heuristic only: strictly increasing periods"
    ks_ok = all(a < b for a, b in zip(chain.ks, chain.ks[1:]))
    report["ks_increasing"] = ks_ok
    report["pass"] = (n >= 2 and halving_fail is None and prod > 0
                      and all(l["valid"] for l in links) and report["periods_increasing"] and ks_ok)
    return report


def limit_support(chain, depth):
    """Radius-``depth`` patterns seen by every tail word (last two of the chain)."""
    tail = chain.words[max(len(chain.words) - 2, 0):]
    length = 2 * depth + 1
    sets = [W.cyclic_factor_set(w.node, length) for w in tail]
    out = set(sets[0])
    for s in sets[1:]:
        out &= s
    return out


def _cyclic_counts(word, length):
    return {pat: W.count_cyclic_factor(word.node, pat)
            for pat in W.cyclic_factor_set(word.node, length)}


def weak_star_gap(a, b, depth):
    """Max over cylinders of radius <= depth of the frequency difference (exact)."""
    best = Fraction(0)
    for d in range(depth + 1):
        length = 2 * d + 1
        ca, cb = _cyclic_counts(a, length), _cyclic_counts(b, length)
        for pat in set(ca) | set(cb):
            gap = abs(Fraction(ca.get(pat, 0), a.period) - Fraction(cb.get(pat, 0), b.period))
            best = max(best, gap)
    return best


def measure_integral(mu, obs):
    return sum((w * empirical_integral(word, obs) for word, w in mu), Fraction(0))


def tail_product_lower(n0, exact_terms=60):
    """Rigorous lower bound on ``prod_{n >= n0} (1 - 2^-n)``."""
    prod = Fraction(1)
    n = n0
    while n < n0 + exact_terms:
        prod *= 1 - Fraction(1, 2 ** n)
        n += 1
    # remaining factors: prod_{j >= n} (1 - 2^-j) >= 1 - 2^{-(n-1)}
    return prod * (1 - Fraction(1, 2 ** (n - 1)))


def observable_gap(chain, observables, n0, eta=Fraction(1), K=1):
    """Exact gaps ``|int phi d mu_{p_n} - int phi d mu_{p_n0}|`` with the comparison bound."""
    if n0 >= len(chain.words):
        return Refusal("n0 beyond the chain")
    for i in range(n0, len(chain.words) - 1):
        if i >= len(chain.certs) or chain.certs[i] is None:
            return Refusal(f"missing certificate at link {i}")
    base = chain.words[n0]
    base_vals = [empirical_integral(base, phi) for phi in observables]
    tail = 1 - tail_product_lower(n0)
    rows = []
    z = base.period
    for n in range(n0 + 1, len(chain.words)):
        z *= chain.certs[n - 1].fiber_size
        word = chain.words[n]
        gaps = [abs(empirical_integral(word, phi) - v) for phi, v in zip(observables, base_vals)]
        zfrac = Fraction(z, word.period)
        bound = zfrac * _frac(eta) / 8 + 2 * K * tail
        rows.append({"n": n, "gaps": gaps, "max_gap": max(gaps, default=Fraction(0)),
                     "Z_fraction": zfrac, "bound": bound})
    return rows


def cylinder_family(system, depth):
    return depth_cylinders(system, depth)
