"""Command line front end.

    lyapsteer --command spectrum --system S.json --cocycle C.json --params '{"word": "abc"}'

Exit codes: 0 success, 2 parse error, 3 domain refusal, 4 steering refusal,
5 verification failure.  Reports are JSON with sorted keys and canonical
number strings, so identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from . import records as R
from .approximation import verify_good_approx
from .cocycle import (Cocycle, CocycleError, exponents_from_exterior, has_simple_spectrum,
                      measure_spectrum, periodic_spectrum)
from .geometry import (GeometryError, averaged_spectrum, enumerate_periodic_spectra,
                       finest_splitting, graph_segment_check, hull_and_margin, interior_margin)
from .push import PushError, push_spectrum, push_spectrum_exact
from .steering import SteeringConfig, SteeringError, steer, steer_near_measure
from .symbolic import (Dyadic, OrbitPoint, PeriodicWord, ShiftSystem, SymbolicError,
                       depth_cylinders)
from . import words as W

COMMANDS = ("spectrum", "hull", "steer", "verify", "graph", "approx", "push")
EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_STEER, EXIT_VERIFY = 0, 2, 3, 4, 5


class ParseError(ValueError):
    pass


class DomainError(ValueError):
    pass


# --- input helpers ---------------------------------------------------------------

def _load_json(path, what):
    if path is None:
        raise ParseError(f"--{what} is required for this command")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {what} file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} file {path!r} is not valid JSON: {exc}") from None


def _params(text):
    if text is None:
        return {}
    if text.startswith("@"):
        return _load_json(text[1:], "params")
    try:
        out = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(out, dict):
        raise ParseError("--params must be a JSON object")
    return out


def _rational(v, name):
    if isinstance(v, bool) or v is None:
        raise ParseError(f"{name} must be a number")
    try:
        return Fraction(str(v)) if isinstance(v, (int, float, str)) else Fraction(v)
    except (ValueError, ZeroDivisionError, TypeError):
        raise ParseError(f"{name} must be a rational number, got {v!r}") from None


def _int(v, name, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{name} must be an integer")
    if lo is not None and v < lo:
        raise ParseError(f"{name} must be >= {lo}")
    return v


def _require(params, key):
    if key not in params:
        raise ParseError(f"missing parameter {key!r}")
    return params[key]


def _system(path):
    data = _load_json(path, "system")
    try:
        return ShiftSystem.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad system file: {exc}") from None


def _cocycle(path, system):
    data = _load_json(path, "cocycle")
    try:
        return Cocycle.from_json(data, system)
    except CocycleError as exc:
        raise DomainError(str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad cocycle file: {exc}") from None


def _word(system, text, name="word"):
    if not isinstance(text, (str, list)) or not text:
        raise ParseError(f"{name} must be a non-empty string")
    try:
        symbols = system.encode(text)
    except SymbolicError as exc:
        raise ParseError(f"{name}: {exc}") from None
    try:
        return PeriodicWord(system, W.leaf(symbols))
    except SymbolicError as exc:
        raise DomainError(f"{name}: {exc}") from None


def _measure(system, items):
    if not isinstance(items, list) or not items:
        raise ParseError("measure must be a list of [word, weight] pairs")
    out = []
    for pair in items:
        if not isinstance(pair, list) or len(pair) != 2:
            raise ParseError("measure entries must be [word, weight]")
        out.append((_word(system, pair[0]), _rational(pair[1], "weight")))
    if sum(w for _, w in out) != 1 or any(w < 0 for _, w in out):
        raise DomainError("measure weights must be nonnegative and sum to 1")
    return out


def _generators(system, params):
    gens = params.get("generators")
    if gens is None:
        return [system.word(a) for a in system.alphabet]
    if not isinstance(gens, list) or not gens:
        raise ParseError("generators must be a non-empty list of words")
    return [_word(system, g, "generator") for g in gens]


# --- commands ---------------------------------------------------------------------

def cmd_spectrum(args, params):
    system = _system(args.system)
    cocycle = _cocycle(args.cocycle, system)
    word = _word(system, _require(params, "word"))
    ks = params.get("k", [])
    if not isinstance(ks, list):
        raise ParseError("k must be a list of integers")
    ks = [_int(k, "k", 1) for k in ks]
    try:
        spec = periodic_spectrum(cocycle, word)
        rows = [{"k": k, "estimate": [R.num(v) for v in
                                      exponents_from_exterior(cocycle, OrbitPoint(word, 0), k).values]}
                for k in ks]
    except CocycleError as exc:
        raise DomainError(str(exc)) from None
    return EXIT_OK, {"word": word.text(), "period": word.period,
                     "spectrum": [R.num(v) for v in spec.values],
                     "exterior_estimates": rows, "simple": has_simple_spectrum(spec)}


def cmd_hull(args, params):
    system = _system(args.system)
    cocycle = _cocycle(args.cocycle, system)
    max_len = _int(params.get("max_len", 1), "max_len", 1)
    try:
        spectra = enumerate_periodic_spectra(system, cocycle, max_len)
        hull = hull_and_margin([s for _, s in spectra])
    except (GeometryError, CocycleError) as exc:
        raise DomainError(str(exc)) from None
    out = {"max_len": max_len, "hull": hull.to_json(),
           "words": [{"word": w.text(), "spectrum": [R.num(v) for v in s.values]}
                     for w, s in spectra],
           "note": "inner approximation from periodic orbits up to max_len"}
    if "target" in params:
        target = [_rational(v, "target") for v in params["target"]]
        out["target"] = [R.num(v) for v in target]
        out["interior_margin"] = R.num(interior_margin(target, hull))
    return EXIT_OK, out


def _auto_delta(system, cocycle, target, gens):
    hull = hull_and_margin([periodic_spectrum(cocycle, g) for g in gens])
    margin = interior_margin(target, hull)
    if margin <= 0:
        raise SteeringError(f"target is not interior to the generators' hull (margin {margin})")
    return margin / 2


def cmd_steer(args, params):
    system = _system(args.system)
    cocycle = _cocycle(args.cocycle, system)
    target = _require(params, "target")
    if not isinstance(target, list) or len(target) != cocycle.dim:
        raise ParseError(f"target must be a list of {cocycle.dim} numbers")
    target = tuple(_rational(v, "target") for v in target)
    depth = _int(_require(params, "depth"), "depth", 0)
    gens = _generators(system, params)
    radius = _int(params.get("max_density_radius", 3), "max_density_radius", 0)
    delta = _require(params, "delta")
    report = {}
    try:
        if delta == "auto":
            delta = _auto_delta(system, cocycle, target, gens)
            report["delta_auto"] = R.num(delta)
        else:
            delta = _rational(delta, "delta")
        config = SteeringConfig(target, delta, depth, radius)
        if "mu" in params:
            mu = _measure(system, params["mu"])
            eta = _rational(_require(params, "eta"), "eta")
            obs = depth_cylinders(system, _int(params.get("observable_depth", 1),
                                               "observable_depth", 0))
            trace, near = steer_near_measure(mu, obs, eta, config, system, cocycle, gens)
            report["weak_star"] = R._jsonable(near)
        else:
            trace = steer(config, system, cocycle, gens)
    except SteeringError as exc:
        return EXIT_STEER, {"steered": False, "failure": exc.reason, "failure_step": exc.step,
                            **report}
    doc = R.trace_to_json(trace, system, cocycle)
    out = args.out or "trace.json"
    with open(out, "w") as fh:
        fh.write(R.dumps(doc))
    csv_path = os.path.splitext(out)[0] + ".csv"
    with open(csv_path, "w") as fh:
        fh.write(R.convergence_csv(doc))
    report.update({"steered": trace.failure is None, "trace": out, "table": csv_path,
                   "steps": len(trace.steps), "delta": R.num(config.delta),
                   "failure": trace.failure, "failure_step": trace.failure_step})
    if trace.failure is not None:
        return EXIT_STEER, report
    if "weak_star" in report and report["weak_star"]["pass"] is not True:
        return EXIT_STEER, report
    return EXIT_OK, report


def cmd_verify(args, params):
    path = params.get("trace")
    if path is None:
        raise ParseError("missing parameter 'trace' (path to a trace or chain file)")
    doc = _load_json(path, "trace")
    fmt = doc.get("format") if isinstance(doc, dict) else None
    if fmt == R.FORMAT:
        rep = R.verify_trace(doc, samples=_int(params.get("samples", 8), "samples", 1))
    elif fmt == "lyapsteer-chain":
        rep = R.verify_chain_doc(doc)
    else:
        raise ParseError("not a trace or chain document")
    return (EXIT_OK if rep["verified"] else EXIT_VERIFY), rep


def cmd_graph(args, params):
    system = _system(args.system)
    cocycle = _cocycle(args.cocycle, system)
    mu = _measure(system, _require(params, "mu"))
    max_len = _int(params.get("max_len", 2), "max_len", 1)
    n_max = _int(params.get("N_max", 64), "N_max", 1)
    grid = [_rational(t, "t") for t in params.get("t_grid", ["0", "1/4", "1/2", "3/4", "1"])]
    try:
        spectra = enumerate_periodic_spectra(system, cocycle, max_len)
        hull = hull_and_margin([s for _, s in spectra])
        dims = finest_splitting(cocycle, [w for w, _ in spectra], n_max)
        L = measure_spectrum(cocycle, mu)
        Lhat = averaged_spectrum(L, dims)
        seg = graph_segment_check(L.values, Lhat.values, hull, grid)
    except (GeometryError, CocycleError) as exc:
        raise DomainError(str(exc)) from None
    return EXIT_OK, R._jsonable({"finest_splitting": list(dims), "L": list(L.values),
                                 "L_hat": list(Lhat.values), "max_len": max_len,
                                 "segment": seg, "note": "splittings not certified up to N_max "
                                 "are undetermined, not refuted"})


def cmd_approx(args, params):
    system = _system(args.system)
    q = _word(system, _require(params, "q"), "q")
    p = _word(system, _require(params, "p"), "p")
    g = _require(params, "gamma")
    gamma = Dyadic.parse(g) if isinstance(g, str) and g.startswith("2^-") else _rational(g, "gamma")
    kappa = _rational(_require(params, "kappa"), "kappa")
    res = verify_good_approx(q, p, gamma, kappa)
    if not res:
        return EXIT_DOMAIN, R._jsonable({"accepted": False, "reason": res.reason,
                                         "bullet": res.bullet, "best_kappa": res.best_kappa,
                                         "suggestion": res.suggestion})
    return EXIT_OK, {"accepted": True, "certificate": res.to_json()}


def cmd_push(args, params):
    X = [_int(x, "X", 0) for x in _require(params, "X")]
    I = [_int(i, "I", 1) for i in _require(params, "I")]
    eta = _rational(_require(params, "eta"), "eta")
    try:
        if "log_diagonals" in params:
            rows = [[_rational(v, "log_diagonals") for v in row] for row in params["log_diagonals"]]
            res = push_spectrum_exact(rows, X, I, eta)
            new = [[R.num(v) for v in row] for row in res.matrices]
            key = "log_diagonals"
        else:
            mats = _require(params, "matrices")
            res = push_spectrum(mats, X, I, float(eta))
            new = [M.tolist() for M in res.matrices]
            key = "matrices"
    except PushError as exc:
        raise DomainError(str(exc)) from None
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad matrix data: {exc}") from None
    return EXIT_OK, R._jsonable({"before": list(res.before.values), "after": list(res.after.values),
                                 "shifts": list(res.shifts), key: new,
                                 "homotopy": [{"t": t, "hyperbolic": ok} for t, ok in res.homotopy]})


HANDLERS = {"spectrum": cmd_spectrum, "hull": cmd_hull, "steer": cmd_steer, "verify": cmd_verify,
            "graph": cmd_graph, "approx": cmd_approx, "push": cmd_push}


def build_parser():
    ap = argparse.ArgumentParser(prog="lyapsteer", description=__doc__.splitlines()[0])
    ap.add_argument("command_pos", nargs="?", choices=COMMANDS, metavar="COMMAND")
    ap.add_argument("--command", choices=COMMANDS)
    ap.add_argument("--system")
    ap.add_argument("--cocycle")
    ap.add_argument("--out", help="output path (steer: trace JSON; others: report JSON)")
    ap.add_argument("--report", help="where to write the report (default stdout)")
    ap.add_argument("--params", help="JSON object, or @path to a JSON file")
    ap.add_argument("--seed", type=int, default=0, help="exploration order only; results do not depend on it")
    return ap


def run(argv=None):
    """Run one command; returns ``(exit_code, document, args)``."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_OK if exc.code == 0 else EXIT_PARSE), None, None
    command = args.command or args.command_pos
    if command is None:
        return EXIT_PARSE, {"error": "no command given"}, args
    try:
        params = _params(args.params)
        code, report = HANDLERS[command](args, params)
    except ParseError as exc:
        code, report = EXIT_PARSE, {"error": str(exc), "kind": "parse"}
    except DomainError as exc:
        code, report = EXIT_DOMAIN, {"error": str(exc), "kind": "domain"}
    return code, {"version": __version__, "command": command, "exit_code": code,
                  "report": report}, args


def main(argv=None):
    code, out, args = run(argv)
    if out is not None:
        text = json.dumps(out, indent=1, sort_keys=True) + "\n"
        if args is not None and args.report:
            with open(args.report, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
