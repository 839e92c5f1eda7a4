import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from ddecert import dissipativity_gap, dissipativity_lambda
from ddecert.cli import main
from ddecert.io import (SystemFileError, dumps_report, format_float, load_system, parse_system,
                        system_to_dict)

SCALAR = {"B": [[-2.0]], "kernel": {"atoms": [{"delay": -1.0, "matrix": [[1.0]]}]}}


@pytest.fixture
def sysfile(tmp_path):
    def write(data, name="sys.json"):
        p = tmp_path / name
        p.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(p)
    return write


def run(args, tmp_path):
    out = tmp_path / "out"
    code = main(args + ["--output", str(out)])
    return code, out


def report(out, name):
    return json.loads((out / f"{name}.json").read_text())


# --- io --------------------------------------------------------------------

def test_parse_full_schema_roundtrip():
    data = {"B": [[-1.0, 0.5], [0.0, -2.0]],
            "kernel": {"atoms": [{"delay": -0.5, "matrix": [[0.1, 0.0], [0.0, 0.2]]}],
                       "density": {"breakpoints": [-1.0, -0.25, 0.0],
                                   "pieces": [{"coeffs": [[[0.1, 0.0], [0.0, 0.1]]]},
                                              {"coeffs": [[[0.0, 0.0], [0.0, 0.0]],
                                                          [[1.0, 0.0], [0.0, 1.0]]]}]}}}
    s = parse_system(data)
    assert s.dimension == 2 and s.kernel.density.degree == 1
    assert parse_system(system_to_dict(s)).kernel.panel_edges().tolist() == [-1, -0.5, -0.25, 0]


def test_delay_outside_interval_names_index():
    bad = {"B": [[0.0]], "kernel": {"atoms": [{"delay": -1.0, "matrix": [[1.0]]},
                                              {"delay": 0.5, "matrix": [[1.0]]}]}}
    with pytest.raises(SystemFileError, match="atom 1"):
        parse_system(bad)


def test_dimension_mismatch():
    bad = {"B": [[0.0]], "kernel": {"atoms": [{"delay": -1.0, "matrix": np.eye(2).tolist()}]}}
    with pytest.raises(SystemFileError, match="atom 0"):
        parse_system(bad)
    with pytest.raises(SystemFileError, match="square"):
        parse_system({"B": [[1.0, 2.0]]})


def test_malformed_json_reports_position(sysfile):
    path = sysfile('{"B": [[-1]],\n  "kernel": {"atoms": [,]}}')
    with pytest.raises(SystemFileError, match=r":2:24:"):
        load_system(path)


def test_report_floats_have_17_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(3.0) == "3.0"
    text = dumps_report({"a": [0.1, 2], "b": {"c": True, "d": None}})
    assert json.loads(text) == {"a": [0.1, 2], "b": {"c": True, "d": None}}
    assert "0.10000000000000001" in text


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_roundtrips(x):
    assert float(format_float(x)) == x


# --- subcommands -----------------------------------------------------------

def test_certify_examples(sysfile, tmp_path, capsys):
    path = sysfile(SCALAR)
    code, out = run(["certify", "--system", path, "--mu", "0.0"], tmp_path)
    assert code == 0
    r = report(out, "certify")
    assert r["result"]["gap"] == pytest.approx(3.0)
    assert r["result"]["c1"] == pytest.approx(1.5) and r["result"]["c2"] == pytest.approx(2.0)
    assert r["config"]["mu"] == 0.0 and r["version"]
    assert {"mu_sufficient", "webb_mu", "zero_dissipative"} <= set(r["result"]["bounds"])
    assert (out / "tau.csv").read_text().startswith("s,value,side\n")
    code, out = run(["certify", "--system", path, "--mu", "-1.0"], tmp_path)
    assert code == 2
    assert "gap ≤ 0" in capsys.readouterr().err
    assert report(out, "certify")["result"]["gap"] == pytest.approx(1 - np.e ** 2)


def test_min_mu_examples(sysfile, tmp_path):
    code, out = run(["min-mu", "--system", sysfile({"B": [[-1.0]]}), "--tol", "1e-8"], tmp_path)
    assert code == 0 and report(out, "min-mu")["result"]["mu_star"] == -1.0
    code, out = run(["min-mu", "--system", sysfile(SCALAR), "--tol", "1e-10"], tmp_path)
    r = report(out, "min-mu")["result"]
    assert r["mu_star"] == pytest.approx(-0.44285440100238858, abs=1e-9)
    assert r["certificate"]["mu"] == pytest.approx(r["mu_star"] + 1e-10, abs=1e-15)


def test_bounds_spectrum_check_simulate(sysfile, tmp_path):
    path = sysfile(SCALAR)
    code, out = run(["bounds", "--system", path], tmp_path)
    assert code == 0 and report(out, "bounds")["result"]["zero_dissipative"] is True
    code, out = run(["spectrum", "--system", path, "--N", "16"], tmp_path)
    assert code == 0
    assert report(out, "spectrum")["result"]["abscissa"] == pytest.approx(-0.442854401, abs=1e-8)
    assert (out / "eigenvalues.csv").read_text().startswith("re,im,residual,spurious\n")
    code, out = run(["check", "--system", path, "--mu", "0", "--audit"], tmp_path)
    assert code == 0 and "gram_diagonal" in report(out, "check")["result"]
    code, out = run(["simulate", "--system", path, "--mu", "0", "--h", "0.01",
                     "--t-final", "2"], tmp_path)
    assert code == 0 and report(out, "simulate")["result"]["pass"] is True
    rows = (out / "trajectory.csv").read_text().splitlines()
    assert rows[0] == "t,u0,weighted_norm" and len(rows) == 22


def test_lyapunov_renorm_subcommand(sysfile, tmp_path):
    code, out = run(["lyapunov-renorm", "--system", sysfile({"B": [[0, 1], [-2, -3]]})],
                    tmp_path)
    assert code == 0
    Q = np.array(report(out, "lyapunov-renorm")["result"]["Q"])
    assert np.allclose(Q, [[1.25, 0.25], [0.25, 0.25]], atol=1e-14)
    code, _ = run(["lyapunov-renorm", "--system", sysfile({"B": [[0.5]]})], tmp_path)
    assert code == 2


def test_sdde_subcommands_byte_identical(sysfile, tmp_path):
    path = sysfile({"B": [[-1.0]], "kernel": {"atoms": [{"delay": -1.0, "matrix": [[0.25]]}]}})
    args = ["sdde-pair", "--system", path, "--omega", "0.5", "--paths", "100", "--dt", "0.01",
            "--t-final", "4"]
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"o{threads}"
        assert main(args + ["--threads", threads, "--output", str(out)]) == 0
        outs.append((out / "sdde-pair.json").read_bytes())
    assert outs[0] == outs[1]
    args = ["sdde-lyapunov", "--b", "1", "--c", "0", "--sigma", "1", "--paths", "100",
            "--dt", "0.01", "--t-final", "5"]
    assert main(args + ["--output", str(tmp_path / "l")]) == 2
    r = report(tmp_path / "l", "sdde-lyapunov")["result"]
    assert r["region_holds"] is False and r["stable"] is False


def test_input_errors_exit_1(sysfile, tmp_path, capsys):
    bad = sysfile('{"B": [[-1]]\n "kernel": {}}', "bad.json")
    code, _ = run(["certify", "--system", bad, "--mu", "0"], tmp_path)
    assert code == 1 and ":2:2:" in capsys.readouterr().err
    code, _ = run(["certify", "--system", str(tmp_path / "missing.json"), "--mu", "0"], tmp_path)
    assert code == 1
    code, _ = run(["certify", "--mu", "0"], tmp_path)
    assert code == 1
    baddim = sysfile({"B": [[-1.0]], "kernel": {"atoms": [{"delay": -1, "matrix": np.eye(2).tolist()}]}})
    code, _ = run(["spectrum", "--system", baddim], tmp_path)
    assert code == 1
    code, _ = run(["simulate", "--system", sysfile(SCALAR), "--mu", "0", "--x0", "1,2"], tmp_path)
    assert code == 1


def test_reports_byte_identical(sysfile, tmp_path):
    path = sysfile(SCALAR)
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        main(["certify", "--system", path, "--mu", "0.1", "--output", str(out)])
        texts.append((out / "certify.json").read_bytes() + (out / "tau.csv").read_bytes())
    assert texts[0] == texts[1]


@settings(max_examples=30, deadline=None,
          suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.floats(-4.0, 2.0), st.floats(-3.0, 3.0), st.floats(-1.0, 0.0), st.floats(0.01, 3.0))
def test_certify_exit_code_matches_gap_sign(tmp_path, b, c, loc, offset):
    data = {"B": [[b]], "kernel": {"atoms": [{"delay": loc, "matrix": [[c]]}]}}
    path = tmp_path / "fuzz.json"
    path.write_text(json.dumps(data))
    mu = b + offset
    system = parse_system(data)
    gap = dissipativity_gap(dissipativity_lambda(system.drift), mu, system.kernel)
    code = main(["certify", "--system", str(path), "--mu", repr(mu),
                 "--output", str(tmp_path / "fz")])
    assert code == (0 if gap > 0 else 2)
