"""Trace files: JSON serialization, the convergence table and independent re-verification.

Rationals are written as ``"num/den"`` strings, dyadic radii as ``"2^-j"`` and
floats as strings with 17 significant digits, so that identical runs produce
byte-identical files.  Words are stored once in a shared node table.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

from . import __version__
from . import words as W
from .approximation import (BlockLayout, GIKNChain, GoodApproxCert, check_cert, kappa_schedule,
                            verify_gikn)
from .cocycle import Cocycle, SpectrumVector, has_simple_spectrum, periodic_spectrum
from .steering import (KGamma, SteeringConfig, SteeringError, SteeringTrace, StepRecord,
                       TransitionData, antipodal_target, check_config, choose_alpha_beta,
                       limit_spectrum_check, mixing_ratio, neighborhood_bound, rho_interval,
                       step_inequalities, StepData)
from .symbolic import Dyadic, PeriodicWord, ShiftSystem, agreement_radius, dense_at_radius

FORMAT = "lyapsteer-trace"


class TraceFormatError(ValueError):
    pass


def num(x):
    """Canonical string for a number."""
    if isinstance(x, Dyadic):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_num(s):
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    if isinstance(s, float):
        return s
    s = str(s).strip()
    if s.startswith("2^-"):
        return Dyadic.parse(s)
    if any(ch in s for ch in ".eEn"):  # decimal, exponent, inf or nan
        return float(s)
    return Fraction(s)


def _nums(seq):
    return [num(v) for v in seq]


def _pnums(seq):
    return tuple(parse_num(v) for v in seq)


# --- writing -----------------------------------------------------------------

def trace_to_json(trace, system, cocycle):
    table = W.NodeTable()
    steps = []
    for rec in trace.steps:
        d = {"n": rec.n, "word": table.add(rec.word.node), "period": rec.word.period,
             "spectrum": _nums(rec.spectrum.values), "box_error": num(rec.box_error),
             "simple": rec.simple, "radius_required": rec.radius_required,
             "radius_effective": rec.radius_effective, "dense": rec.dense}
        if rec.kg is not None:
            kg = rec.kg
            d["k"] = kg.k
            d["gamma"] = num(kg.gamma)
            d["orbit_error"] = num(kg.orbit_error)
            d["neighborhood_bound"] = num(kg.neighborhood_bound)
            d["free_max"] = kg.free_max
        if rec.q is not None:
            d["q"] = table.add(rec.q.node)
            d["q_spectrum"] = _nums(rec.q_spectrum.values)
            d["window"] = [[num(c), num(h)] for c, h in rec.window]
            d["c0"] = list(rec.trans.c0)
            d["c1"] = list(rec.trans.c1)
        if rec.alpha is not None:
            d["alpha"], d["beta"], d["scale"] = rec.alpha, rec.beta, rec.scale
            d["t"] = num(rec.t)
            d["rho_minus"], d["rho_plus"] = num(rec.rho[0]), num(rec.rho[1])
            d["inequalities"] = [[name, bool(ok)] for name, ok in rec.inequalities]
        if rec.layout is not None:
            d["layout"] = rec.layout.to_json()
        if rec.cert is not None:
            d["cert"] = rec.cert.to_json()
        steps.append(d)
    return {"format": FORMAT, "version": __version__, "system": system.to_json(),
            "cocycle": cocycle.to_json(system), "config": trace.config.to_json(),
            "nodes": table.rows, "steps": steps, "failure": trace.failure,
            "failure_step": trace.failure_step}


def chain_to_json(chain, system):
    table = W.NodeTable()
    return {"format": "lyapsteer-chain", "version": __version__, "system": system.to_json(),
            "nodes": table.rows,
            "words": [table.add(w.node) for w in chain.words],
            "gammas": [num(g) for g in chain.gammas], "kappas": [num(k) for k in chain.kappas],
            "certs": [c.to_json() if c is not None else None for c in chain.certs],
            "ks": list(chain.ks), "layouts": [l.to_json() for l in chain.layouts]}


def dumps(doc):
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


CSV_FIXED = ["box_error", "alpha", "beta", "t", "rho_minus", "rho_plus", "k_n", "gamma_n", "period"]


def convergence_csv(doc):
    """The convergence table of a serialized trace."""
    m = int(doc["cocycle"]["dim"])
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["n"] + [f"lambda_{i + 1}" for i in range(m)] + CSV_FIXED)
    for s in doc["steps"]:
        wr.writerow([s["n"]] + s["spectrum"] + [s["box_error"]]
                    + [s.get(key, "") for key in ("alpha", "beta", "t", "rho_minus", "rho_plus",
                                                  "k", "gamma")]
                    + [s["period"]])
    return out.getvalue()


# --- reading -----------------------------------------------------------------

def load_trace(doc):
    """Rebuild ``(trace, system, cocycle)`` from a trace document."""
    if doc.get("format") != FORMAT:
        raise TraceFormatError("not a trace document")
    try:
        system = ShiftSystem.from_json(doc["system"])
        cocycle = Cocycle.from_json(doc["cocycle"], system)
        c = doc["config"]
        config = SteeringConfig(_pnums(c["target"]), parse_num(c["delta"]), int(c["depth"]),
                                int(c.get("max_density_radius", 3)), int(c.get("start_step", 0)))
        nodes = W.load_nodes(doc["nodes"])
        trace = SteeringTrace(config, failure=doc.get("failure"),
                              failure_step=doc.get("failure_step"))
        for s in doc["steps"]:
            word = PeriodicWord(system, nodes[s["word"]])
            rec = StepRecord(int(s["n"]), word, SpectrumVector(_pnums(s["spectrum"])),
                             parse_num(s["box_error"]), bool(s["simple"]),
                             int(s["radius_required"]), int(s["radius_effective"]),
                             bool(s["dense"]))
            if "k" in s:
                rec.kg = KGamma(int(s["k"]), Dyadic.parse(s["gamma"]).j,
                                parse_num(s["orbit_error"]), parse_num(s["neighborhood_bound"]),
                                int(s["free_max"]))
            if "q" in s:
                rec.q = PeriodicWord(system, nodes[s["q"]])
                rec.q_spectrum = SpectrumVector(_pnums(s["q_spectrum"]))
                rec.window = [(parse_num(c), parse_num(h)) for c, h in s["window"]]
                rec.trans = TransitionData(tuple(s["c0"]), tuple(s["c1"]))
            if "alpha" in s:
                rec.alpha, rec.beta, rec.scale = int(s["alpha"]), int(s["beta"]), int(s["scale"])
                rec.t = parse_num(s["t"])
                rec.rho = (parse_num(s["rho_minus"]), parse_num(s["rho_plus"]))
                rec.inequalities = [(name, bool(ok)) for name, ok in s["inequalities"]]
            if "layout" in s:
                rec.layout = BlockLayout.from_json(s["layout"])
            if "cert" in s:
                rec.cert = GoodApproxCert.from_json(s["cert"])
            trace.steps.append(rec)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, TraceFormatError):
            raise
        raise TraceFormatError(f"malformed trace: {exc!r}") from None
    return trace, system, cocycle


def load_chain(doc):
    nodes = W.load_nodes(doc["nodes"])
    system = ShiftSystem.from_json(doc["system"])
    words = [PeriodicWord(system, nodes[i]) for i in doc["words"]]
    return GIKNChain(words=words, gammas=[parse_num(g) for g in doc["gammas"]],
                     kappas=[parse_num(k) for k in doc["kappas"]],
                     certs=[GoodApproxCert.from_json(c) if c is not None else None
                            for c in doc["certs"]],
                     ks=[int(k) for k in doc["ks"]],
                     layouts=[BlockLayout.from_json(l) for l in doc.get("layouts", [])])


# --- verification --------------------------------------------------------------

class _Report:
    def __init__(self):
        self.failures = []

    def check(self, ok, step, name, detail=""):
        if not ok:
            self.failures.append({"step": step, "check": name, "detail": detail})
        return ok


def _same(a, b):
    a = a.values if isinstance(a, SpectrumVector) else a
    b = b.values if isinstance(b, SpectrumVector) else b
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))


def _free_max(err, k, spread, nb_tol):
    import math
    if spread == 0:
        return k - 1
    return max(0, min(k - 1, math.ceil((nb_tol - err) * k / spread) - 1))


def verify_trace(doc, samples=8):
    """Recompute every stored field and inequality; ``verified`` is true only on a full pass."""
    rep = _Report()
    try:
        trace, system, cocycle = load_trace(doc)
    except (TraceFormatError, SteeringError) as exc:
        return {"verified": False, "failures": [{"step": None, "check": "parse",
                                                 "detail": str(exc)}]}
    config = trace.config
    rep.check(trace.failure is None, trace.failure_step, "completed",
              f"trace carries a failure marker: {trace.failure}")
    rep.check(len(trace.steps) == config.depth + 1, None, "depth",
              f"{len(trace.steps)} steps for depth {config.depth}")
    delta, L = config.delta, config.target
    spread = max(Fraction(s) for s in cocycle.spread())
    prev = None
    for idx, rec in enumerate(trace.steps):
        n = config.start_step + idx
        if not rep.check(rec.n == n, n, "n", f"stored {rec.n}"):
            continue
        p = rec.word
        spec = periodic_spectrum(cocycle, p)
        rep.check(_same(spec, rec.spectrum), n, "spectrum")
        err = spec.box_distance(L)
        rep.check(err == rec.box_error, n, "box_error", f"recomputed {err}")
        rep.check(err < delta / 2 ** n, n, "box_error < delta/2^n", num(err))
        rep.check(has_simple_spectrum(spec) and rec.simple, n, "simple")
        req = agreement_radius(delta / 2 ** n)
        eff = min(req, config.max_density_radius)
        rep.check(rec.radius_required == req and rec.radius_effective == eff, n, "density radius")
        rep.check(dense_at_radius(p, eff)[0] and rec.dense, n, "dense")
        if rep.check(rec.kg is not None, n, "k_n present"):
            kg = rec.kg
            try:
                oerr, bound = neighborhood_bound(cocycle, p, kg.k, kg.j, spec.values)
            except SteeringError as exc:
                rep.check(False, n, "k_n recomputation", str(exc))
                prev = rec
                continue
            rep.check(oerr == kg.orbit_error, n, "orbit_error", f"recomputed {oerr}")
            rep.check(bound == kg.neighborhood_bound, n, "neighborhood_bound",
                      f"recomputed {bound}")
            rep.check(oerr < delta / 2 ** (n + 1), n, "window error < delta/2^(n+1)")
            rep.check(bound < delta / 2 ** n, n, "neighborhood error < delta/2^n")
            rep.check(kg.free_max == _free_max(oerr, kg.k, spread, delta / 2 ** n), n, "free_max")
            rep.check(kg.j >= max(0, kg.k - 1 - kg.free_max) + 1, n, "gamma radius covers k")
            if prev is not None and prev.kg is not None:
                rep.check(kg.k > prev.kg.k, n, "k increasing")
                rep.check(kg.gamma < prev.kg.gamma / 2, n, "gamma halving")
        if idx == len(trace.steps) - 1:
            break
        nxt = trace.steps[idx + 1].word
        if not rep.check(None not in (rec.q, rec.alpha, rec.layout, rec.cert, rec.kg), n,
                         "step data present"):
            prev = rec
            continue
        try:
            window = antipodal_target(n, L, spec.values, delta)
        except SteeringError as exc:
            rep.check(False, n, "antipodal target", str(exc))
            prev = rec
            continue
        rep.check(window == [tuple(w) for w in rec.window], n, "window")
        q = rec.q
        qspec = periodic_spectrum(cocycle, q)
        rep.check(_same(qspec, rec.q_spectrum), n, "q spectrum")
        rep.check(all(abs(v - c) < h for v, (c, h) in zip(qspec.values, window)), n,
                  "q inside window")
        rep.check(has_simple_spectrum(qspec), n, "q simple")
        trans = rec.trans
        seams = ((p, q, trans.c0), (q, p, trans.c1))
        rep.check(all(system.is_admissible((W.symbol_at(a.node, a.period - 1),) + tuple(c)
                                           + (W.symbol_at(b.node, 0),)) for a, b, c in seams),
                  n, "connectors admissible")
        rho = rho_interval(n)
        rep.check(tuple(rec.rho) == rho, n, "rho interval")
        rep.check(rho[0] < rho[1] < Fraction(1, 2 ** n), n, "rho chain")
        t = mixing_ratio(rec.alpha, rec.beta, p.period, q.period)
        rep.check(t == rec.t, n, "t", f"recomputed {t}")
        rep.check(1 - rho[1] < t < 1 - rho[0], n, "t in interval")
        rep.check(t > 1 - Fraction(1, 2 ** n), n, "t > 1 - 2^-n")
        extra = trans.t0 + trans.t1
        data = StepData(tuple(spec.values), tuple(qspec.values), L, delta,
                        extra * Fraction(cocycle.log_norm_bound),
                        extra * Fraction(cocycle.log_conorm_bound))
        R = agreement_radius(rec.kg.gamma)
        margin = 2 * (-(-R // p.period)) + 2
        rows = step_inequalities(n, rec.alpha, rec.beta, p.period, q.period, extra, data, margin)
        for name, ok in rows:
            rep.check(ok, n, f"inequality {name}")
        rep.check(rows == list(rec.inequalities), n, "stored inequalities")
        try:
            choice = choose_alpha_beta(n, p.period, q.period, extra, data, margin)
            rep.check(choice[0] == rec.alpha and choice[1] == rec.beta and choice[4] == rec.scale,
                      n, "alpha/beta selection", f"recomputed {choice[0]}, {choice[1]}")
        except SteeringError as exc:
            rep.check(False, n, "alpha/beta selection", str(exc))
        layout = BlockLayout(p.period, rec.alpha, q.period, rec.beta, trans.t0, trans.t1)
        rep.check(layout == rec.layout, n, "layout")
        glued = W.cat(W.power(p.node, rec.alpha), W.leaf(trans.c0), W.power(q.node, rec.beta),
                      W.leaf(trans.c1))
        rep.check(glued.length == nxt.period and W.equal(glued, nxt.node), n,
                  "next word is the glued word")
        cert = rec.cert
        rep.check(cert.gamma == rec.kg.gamma and cert.kappa == kappa_schedule(n), n,
                  "certificate parameters")
        ok, bullet, msg = check_cert(cert, nxt, p)
        rep.check(ok, n, f"certificate bullet {bullet}", msg or "")
        prev = rec
    gikn = verify_gikn(trace.chain()) if len(trace.steps) >= 2 else None
    if gikn is not None:
        rep.check(gikn["pass"], None, "gikn")
    limit = None
    if not rep.failures:
        limit = limit_spectrum_check(trace, cocycle, samples)
        for row in limit["rows"]:
            rep.check(row.get("mass_ok", False), row["n"], "Y_n mass bound")
            rep.check(row.get("window_ok", False), row["n"], "window bounds on Y_n")
    return {"verified": not rep.failures, "failures": rep.failures,
            "steps": len(trace.steps), "gikn": _jsonable(gikn), "limit": _jsonable(limit)}


def verify_chain_doc(doc):
    try:
        chain = load_chain(doc)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        return {"verified": False, "failures": [{"step": None, "check": "parse",
                                                 "detail": repr(exc)}]}
    gikn = verify_gikn(chain)
    fails = [] if gikn["pass"] else [{"step": None, "check": "gikn", "detail": ""}]
    return {"verified": gikn["pass"], "failures": fails, "gikn": _jsonable(gikn),
            "note": "chain-only input: GIKN hypotheses checked, no spectrum data"}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (Fraction, Dyadic, float)) and not isinstance(x, bool):
        return num(x)
    return x
