import json
import subprocess
import sys

import numpy as np
import pytest

from subproduct_lab import cli, expr, systems


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


@pytest.fixture
def small_config(tmp_path):
    return write(tmp_path, "cfg.json", {"system": {"kind": "symmetric", "d": 2}, "N": 5, "seed": 4,
                                        "samples": 50, "suites": ["axioms", "gauge", "ideal", "reps"]})


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr().out


def test_verify_is_byte_deterministic(small_config, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert cli.main(["verify", small_config, "--seed", "4", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    report = json.loads(outs[0])
    assert report["version"] == cli.__version__
    assert report["config"]["system"]["kind"] == "symmetric"
    assert set(report["result"]) == {"axioms", "gauge", "ideal", "reps"}


def test_full_verify_on_quiver(tmp_path, capsys):
    cfg = write(tmp_path, "q.json", {"system": {"kind": "quiver", "P": [[1, 1], [1, 0]]}, "N": 6})
    code, out = run(["verify", cfg], capsys)
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert report["result"]["shifts"]["tail_reconstruction"] <= 1e-12
    assert report["result"]["wold"]["coisometric_dim"] == 2
    assert report["result"]["morita"]["skipped"]


def test_bare_system_description_is_accepted(tmp_path, capsys):
    cfg = write(tmp_path, "bare.json", {"kind": "subshift", "d": 2, "forbidden": ["11"], "N": 6})
    code, out = run(["build", cfg], capsys)
    assert code == 0
    assert json.loads(out)["result"]["fiber_dims"] == [1, 2, 3, 5, 8, 13, 21]


@pytest.mark.parametrize("data,fragment", [
    ({"system": {"kind": "quiver", "P": [[1, 0], [1, 0]]}, "N": 4}, "column 2 of P is zero"),
    ({"system": {"kind": "symmetric", "d": 2}, "colour": "red"}, "invalid config"),
    ({"system": {"kind": "subshift", "d": 2, "forbidden": ["0", "1"]}}, "no allowed word"),
    ({"system": {"kind": "product"}}, "needs d"),
])
def test_config_errors_exit_2(tmp_path, capsys, data, fragment):
    code, out = run(["verify", write(tmp_path, "bad.json", data)], capsys)
    assert code == 2
    report = json.loads(out)
    assert fragment in report["error"] and report["passed"] is False


def test_missing_file_exits_2(capsys, tmp_path):
    code, out = run(["build", str(tmp_path / "nope.json")], capsys)
    assert code == 2 and "cannot read" in json.loads(out)["error"]


def test_parse_error_exits_2(small_config, capsys):
    code, out = run(["scan", "--op", "S1[e1)*", small_config], capsys)
    assert code == 2
    assert "column 6" in json.loads(out)["error"]


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["scan", "--format", "xml"])
    assert err.value.code == 2


def test_scan_and_cpnorm(small_config, capsys):
    code, out = run(["scan", "--op", "S1[e1]*S1[e2]~ - S1[e2]~*S1[e1]", small_config], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["verdict"] == "in_ideal" and res["degrees"] == [0]
    code, out = run(["cpnorm", "--op", "S1[e1]*S1[e1]~", "--nstar", "4", small_config], capsys)
    res = json.loads(out)["result"]
    assert res["n_star"] == 4 and res["estimate"] == pytest.approx(1.0)


def test_sphere_command(tmp_path, capsys):
    cfg = write(tmp_path, "s.json", {"system": {"kind": "symmetric", "d": 2}, "N": 8, "samples": 100})
    code, out = run(["sphere", "--coeffs", "1,1,-1", "--nstar", "7", cfg], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["sphere_sup"] == pytest.approx(0.0, abs=1e-12) and res["estimate"] <= 0.05
    code, _ = run(["sphere", "--coeffs", "1,2", cfg], capsys)
    assert code == 2


def test_csv_output(small_config, capsys):
    code, out = run(["scan", "--format", "csv", "--op", "Q2", small_config], capsys)
    lines = out.strip().splitlines()
    assert lines[0] == "table,n,value,exact"
    assert "norms,2,1.0,True" in lines


def rep_file(tmp_path, z):
    data = {"dims": [1], "T1": {"e1": [[str(complex(z[0]))]], "e2": [[str(complex(z[1]))]]}}
    return write(tmp_path, "rep.json", data)


def test_rep_and_wold_commands(small_config, tmp_path, capsys):
    good = rep_file(tmp_path, np.array([0.6, 0.8j]))
    code, out = run(["rep", small_config, good], capsys)
    cls = json.loads(out)["result"]["classification"]
    assert code == 0 and cls["fully_coisometric"] and cls["essential"]
    code, out = run(["wold", small_config, good], capsys)
    assert code == 0 and json.loads(out)["result"]["coisometric_dim"] == 1
    # an interior point breaks the Wold hypothesis: an invariant failure, exit 1
    inner = rep_file(tmp_path, np.array([0.3, 0.4]))
    code, out = run(["wold", small_config, inner], capsys)
    assert code == 1 and json.loads(out)["result"]["n"] == 1


def test_inconsistent_rep_exits_2(small_config, tmp_path, capsys):
    data = {"dims": [2], "T1": {"e1": [[0, 1], [0, 0]], "e2": [[0, 0], [1, 0]]}}
    code, out = run(["rep", small_config, write(tmp_path, "bad.json", data)], capsys)
    assert code == 2 and "inconsistent extension" in json.loads(out)["error"]


def test_morita_command(tmp_path, capsys):
    cfg = write(tmp_path, "m.json", {"system": {"kind": "symmetric", "d": 2}, "N": 5, "k": 1, "samples": 5})
    code, out = run(["morita", cfg], capsys)
    res = json.loads(out)["result"]
    assert code == 0 and res["compression"]["p_residual"] == 0.0 and res["z_dims"] == [4, 8, 12, 16, 20, 24]


def test_clean_rounds_and_encodes():
    assert cli.clean(0.1 + 0.2) == 0.3
    assert cli.clean(1 + 2j) == [1.0, 2.0]
    assert cli.clean({"a": np.float64(np.inf), 1: (np.int64(3), np.bool_(True))}) == {"a": None, "1": [3, True]}


def test_random_ast_round_trip_50():
    X = systems.build_symmetric(2, 6)
    rng = np.random.default_rng(2024)
    for _ in range(50):
        node = expr.random_expr(X, rng, depth=4)
        assert expr.parse_expr(expr.to_text(node), X) == node


def test_console_entry_point(small_config):
    proc = subprocess.run([sys.executable, "-m", "subproduct_lab.cli", "build", small_config],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["fiber_dims"] == [1, 2, 3, 4, 5, 6]


def test_full_symmetric_suite_under_a_minute(tmp_path, capsys):
    import time

    cfg = write(tmp_path, "full.json", {"system": {"kind": "symmetric", "d": 2}, "N": 8})
    start = time.perf_counter()
    code, out = run(["verify", cfg], capsys)
    assert code == 0 and json.loads(out)["passed"]
    assert time.perf_counter() - start < 60
