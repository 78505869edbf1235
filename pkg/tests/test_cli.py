import json

import pytest

from lyapsteer.cli import main, run


@pytest.fixture
def files(tmp_path):
    sysf = tmp_path / "system.json"
    sysf.write_text(json.dumps({"alphabet": ["a", "b", "c"], "transitions": [[1] * 3] * 3}))
    cof = tmp_path / "cocycle.json"
    cof.write_text(json.dumps({"dim": 2, "exact": True, "log_diagonals":
                               {"a": ["2", "-1"], "b": ["1", "-2"], "c": ["3", "-3"]}}))
    swap_sys = tmp_path / "swap_system.json"
    swap_sys.write_text(json.dumps({"alphabet": ["a", "b"], "transitions": [[1, 1], [1, 1]]}))
    swap_co = tmp_path / "swap_cocycle.json"
    swap_co.write_text(json.dumps({"dim": 2, "matrices": {"a": [[2, 0], [0, 0.5]],
                                                          "b": [[0, 1], [1, 0]]}}))
    return tmp_path, str(sysf), str(cof), str(swap_sys), str(swap_co)


def _run(*argv):
    code, doc, _ = run([str(a) for a in argv])
    return code, doc["report"] if doc else None


def test_spectrum(files):
    _, s, c, *_ = files
    code, rep = _run("spectrum", "--system", s, "--cocycle", c,
                     "--params", json.dumps({"word": "abc", "k": [1, 10, 100]}))
    assert code == 0
    assert rep["spectrum"] == ["2", "-2"]


def test_parse_errors(files):
    _, s, c, *_ = files
    assert _run("spectrum", "--system", s, "--cocycle", c, "--params", '{"word": "ax"}')[0] == 2
    assert _run("spectrum", "--system", s, "--cocycle", c, "--params", "{not json")[0] == 2
    assert run(["bogus"])[0] == 2


def test_hull_and_auto_delta(files, tmp_path):
    _, s, c, *_ = files
    code, rep = _run("hull", "--system", s, "--cocycle", c, "--params", '{"target": [2, -2]}')
    assert code == 0 and rep["interior_margin"] == "1/12"
    out = tmp_path / "trace.json"
    code, rep = _run("steer", "--system", s, "--cocycle", c, "--out", out,
                     "--params", '{"target": [2, -2], "delta": "auto", "depth": 2}')
    assert code == 0 and rep["delta_auto"] == "1/24" and rep["steered"]
    assert (tmp_path / "trace.csv").exists()
    code, rep = _run("verify", "--params", json.dumps({"trace": str(out), "samples": 2}))
    assert code == 0 and rep["verified"]
    doc = json.loads(out.read_text())
    doc["steps"][1]["alpha"] += 1
    out.write_text(json.dumps(doc))
    assert _run("verify", "--params", json.dumps({"trace": str(out)}))[0] == 5


def test_steer_outside_hull(files, tmp_path):
    _, s, c, *_ = files
    code, rep = _run("steer", "--system", s, "--cocycle", c, "--out", tmp_path / "t.json",
                     "--params", '{"target": [5, -5], "delta": "auto", "depth": 1}')
    assert code == 4 and not rep["steered"]


def test_graph(files):
    _, _, _, s, c = files
    code, rep = _run("graph", "--system", s, "--cocycle", c,
                     "--params", '{"mu": [["a", 1]], "max_len": 2}')
    assert code == 0 and rep["finest_splitting"] == [2]
    assert all(abs(float(v)) < 1e-9 for v in rep["L_hat"])


def test_approx_refusal_and_accept(files):
    _, s, *_ = files
    code, rep = _run("approx", "--system", s,
                     "--params", '{"q": "aab", "p": "a", "gamma": "2^-1", "kappa": "1/2"}')
    assert code in (0, 3)
    code, rep = _run("approx", "--system", s,
                     "--params", '{"q": "abc", "p": "a", "gamma": "2^-1", "kappa": "99/100"}')
    assert code == 3 and rep["accepted"] is False and rep["reason"]


def test_push(files):
    code, rep = _run("push", "--params", json.dumps(
        {"log_diagonals": [[2, -1]] * 4, "X": [0, 1], "I": [1], "eta": "3/10"}))
    assert code == 0 and rep["after"] == ["43/20", "-23/20"]
    code, _ = _run("push", "--params", json.dumps(
        {"log_diagonals": [[2, -1]] * 4, "X": [0], "I": [1], "eta": "3/10"}))
    assert code == 3


def test_main_writes_report(files, tmp_path, capsys):
    _, s, c, *_ = files
    rep = tmp_path / "r.json"
    assert main(["--command", "spectrum", "--system", s, "--cocycle", c,
                 "--params", '{"word": "ab"}', "--report", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["exit_code"] == 0 and doc["command"] == "spectrum" and "version" in doc
    assert main(["spectrum", "--system", s, "--cocycle", c, "--params", '{"word": "ab"}']) == 0
    assert json.loads(capsys.readouterr().out)["report"]["spectrum"] == ["3/2", "-3/2"]


def test_seed_independent(files, tmp_path):
    _, s, c, *_ = files
    outs = []
    for seed in (0, 7):
        out = tmp_path / f"t{seed}.json"
        _run("steer", "--system", s, "--cocycle", c, "--out", out, "--seed", seed,
             "--params", '{"target": [2, -2], "delta": "1/16", "depth": 2}')
        outs.append(json.loads(out.read_text())["steps"])
    assert outs[0] == outs[1]
