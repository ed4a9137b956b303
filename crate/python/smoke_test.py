"""Smoke test for the tdstab_py extension module.

Run after `pip install -e crates/py --no-build-isolation`:

    python3 python/smoke_test.py

The test functions also run under pytest.
"""

import json
import math
import pathlib
import sys

import tdstab_py as td

SYSTEMS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "cli" / "systems"


def load(name):
    return json.loads((SYSTEMS / f"{name}.json").read_text())


def pair(name):
    terms = load(name)["terms"]
    return terms[0]["matrix"], terms[1]["matrix"]


def plant(name):
    p = load(name)["plant"]
    return p["A0"], p["A1"], p["h"], p["B"]


def close(a, b, tol):
    return abs(a - b) <= tol


def test_example2_stability():
    a1, a2 = pair("example2")
    rep = td.stability(a1, a2, 4.0)
    assert rep["decomposed"]
    assert rep["warnings"] == ["degenerate crossing at ω = 1; decomposed"]
    assert [b["dim"] for b in rep["blocks"]] == [2, 2]
    low = [iv for iv in rep["intervals"] if iv["NU"] == 2 and iv["tau_lo"] > 1.0]
    assert len(low) == 1
    assert close(low[0]["tau_lo"], math.pi, 1e-3)
    assert close(low[0]["tau_hi"], 2 * math.pi / math.sqrt(3), 1e-3)


def test_degenerate_without_decomposition():
    a1, a2 = pair("example2")
    try:
        td.stability(a1, a2, 4.0, decompose=False)
    except td.DegenerateCrossingError as e:
        assert isinstance(e, td.TdstabError)
    else:
        raise AssertionError("expected DegenerateCrossingError")


def test_decompose_example3():
    a1, a2 = pair("example3")
    out = td.decompose(a1, a2)
    assert sorted(b["n"] for b in out["blocks"]) == [2, 3]
    assert out["decomposition"]["residual"] < 1e-8


def test_closed_loop_design():
    a0, a1, h, b = plant("plant10")
    assert td.is_controllable(a0, a1, b)
    rt = td.stabilizing_intervals(a0, a1, h, b, [1.0, -5.0], 2.0)
    direct = td.stabilizing_intervals(a0, a1, h, b, [1.0, -5.0], 2.0, method="direct")
    (lo, hi), = rt["design"]["stable_intervals"]
    assert close(lo, 0.4540, 1e-3) and close(hi, 0.9469, 1e-3)
    assert rt["design"]["stable_intervals"] == direct["design"]["stable_intervals"]


def test_placement_and_settling():
    a0, a1, h, b = plant("plant12")
    d = td.place_pole_pair(a0, a1, h, b, 0.1, complex(-0.3254, 0.3254))
    k = d["K"]
    assert close(k[0], 40.5925, 1e-3) and close(k[1], -105.0352, 1e-3)
    assert d["residual"] <= 1e-9
    closed = td.simulate_closed_loop(a0, a1, h, b, k, 0.1, [1.0, 1.0], 100.0)
    # the open loop is x' = A0 x + A1 x(t - h)
    opened = td.simulate(a0, a1, h, [1.0, 1.0], 100.0)
    assert closed["settling_time"] is not None and closed["settling_time"] < 20.0
    assert opened["settling_time"] is None
    assert len(opened["times"]) == len(opened["states"])


def test_roots_and_errors():
    a1, a2 = pair("example2")
    roots = td.rightmost_roots(a1, a2, 3.3)
    assert all(isinstance(r, complex) for r in roots)
    assert sum(r.real > 1e-8 for r in roots) == 2
    try:
        td.stability([[1.0, 2.0]], [[1.0]], 1.0)
    except td.ValidationError:
        pass
    else:
        raise AssertionError("expected ValidationError")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok   {t.__name__}")
    print(f"smoke test: {len(tests)} passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
