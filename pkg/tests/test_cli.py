import io
import json
import subprocess
import sys

import numpy as np
import pytest

from fracspec.cli import SUMMARY_FIELDS, fmt, parse_times, read_csv, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


SOLVE = ("solve", "--kind", "heat", "--operator", "dirichlet", "--beta", "0.5", "--init", "mode:1",
         "--times", "logspace(-2,4,240)")


def test_ml_eval_prints_inverse_e():
    code, out, err = call("ml-eval", "--alpha", "1", "--z", "-1")
    assert code == 0 and err == ""
    assert out.strip() == "0.36787944117144233"
    assert float(out) == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_ml_eval_table():
    code, out, _ = call("ml-eval", "--alpha", "0.5", "--z", "linspace(-4,0,5)")
    assert code == 0
    header, data = read_csv(out)
    assert header == ["z", "value", "est_abs_error"]
    assert data.shape == (5, 3)
    assert data[0, 1] == pytest.approx(0.13699945762506138989, abs=1e-14)
    assert data[-1, 1] == 1.0


def test_solve_heat_table():
    code, out, _ = call(*SOLVE)
    assert code == 0
    header, data = read_csv(out)
    assert header[:3] == ["t", "l2_norm", "sobolev_0"]
    assert data.shape[0] == 240
    assert np.all(np.diff(data[:, 1]) < 0)
    assert data[0, 0] == pytest.approx(1e-2) and data[-1, 0] == pytest.approx(1e4)


def test_heat_rejects_wave_order():
    code, out, err = call("solve", "--kind", "heat", "--beta", "1.5")
    assert code == 1 and out == ""
    assert "'beta'" in err


@pytest.mark.parametrize("argv, field", [
    (("solve", "--kind", "heat"), "beta"),
    (("solve", "--kind", "diffusion", "--beta", "0.5"), "kind"),
    (("solve", "--kind", "heat", "--beta", "0.5", "--times", "logspace(1,2)"), "times"),
    (("solve", "--kind", "heat", "--beta", "0.5", "--operator", "sphere"), "operator"),
    (("solve", "--kind", "heat", "--beta", "0.5", "--init", "mode:999"), "init"),
    (("ml-eval", "--z", "1"), "alpha"),
    (("lplq-study", "--alpha", "0.5", "--p", "3"), "p"),
    (("solve", "--kind", "wave", "--beta", "1.5", "--modes", "x"), "modes"),
    (("solve", "--kind", "heat", "--beta", "0.5", "--tail-tol", "tiny"), "tail_tol"),
    (("ml-eval", "--alpha"), "alpha"),
    (("integrate",), "command"),
])
def test_validation_names_field(argv, field):
    code, _, err = call(*argv)
    assert code == 1
    assert f"'{field}'" in err


def test_under_resolved_data_is_rejected():
    code, _, err = call("solve", "--kind", "wave", "--beta", "1.5", "--init", "gaussian:0.3")
    assert code == 1 and "'init'" in err and "tail" in err


def test_unknown_flag_exits_one():
    code, _, err = call("solve", "--kind", "heat", "--beta", "0.5", "--bogus", "1")
    assert code == 1 and "'bogus'" in err


def test_missing_command_exits_one():
    code, _, err = call()
    assert code == 1 and "'command'" in err


def test_overflow_exits_two():
    for z in ("1000", "800"):
        code, out, err = call("ml-eval", "--alpha", "1" if z == "800" else "0.5", "--z", z)
        assert code == 2 and out == ""
        assert "exceeds the double-precision range" in err


def test_repeat_runs_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert call(*SOLVE, "--deltas", "0,2", "--output", str(a))[0] == 0
    assert call(*SOLVE, "--deltas", "0,2", "--output", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_round_trip_is_exact(tmp_path):
    path = tmp_path / "w.csv"
    assert call("solve", "--kind", "wave", "--beta", "1.5", "--init", "gaussian:0.3",
                "--tail-tol", "1e-6", "--times", "0.5,1,2", "--output", str(path))[0] == 0
    header, data = read_csv(path)
    text = path.read_text().splitlines()
    for line, row in zip(text[1:], data):
        assert line == ",".join(fmt(v) for v in row)


def test_summary_fields(tmp_path):
    path = tmp_path / "d.csv"
    code, _, _ = call("decay-study", "--kind", "heat", "--beta", "0.6", "--init", "mode:1",
                      "--times", "logspace(1,4,40)", "--bounds", "heat-1", "--output", str(path))
    assert code == 0
    summary = json.loads((tmp_path / "d.csv.json").read_text())
    assert set(SUMMARY_FIELDS) <= set(summary)
    assert summary["command"] == "decay-study"
    assert summary["parameters"]["beta"] == 0.6
    assert summary["fitted_slope"] == pytest.approx(-0.6, abs=0.05)
    assert summary["runtime_seconds"] >= 0
    header, data = read_csv(path)
    assert header[-2:] == ["bound_heat-1", "ratio_heat-1"]
    assert np.all(data[:, -1] <= 1 + 1e-12)


def test_oracle_compare_command():
    code, out, _ = call("oracle-compare", "--kind", "heat", "--beta", "0.5", "--modes", "4",
                        "--init", "mode:2", "--steps", "512")
    assert code == 0
    _, data = read_csv(out)
    assert data[:, 1].max() <= 5e-3


def test_yaml_config_and_flag_override(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("kind: heat\nbeta: 0.5\ninit: mode:1\ntimes: logspace(-1,1,5)\n")
    code, base, _ = call("solve", "--config", str(cfg))
    assert code == 0
    code, over, _ = call("solve", "--config", str(cfg), "--beta", "0.8")
    assert code == 0
    _, a = read_csv(base)
    _, b = read_csv(over)
    assert a.shape == b.shape == (5, 3)
    assert not np.array_equal(a[:, 1], b[:, 1])
    code, same, _ = call("solve", "--kind", "heat", "--beta", "0.8", "--init", "mode:1",
                         "--times", "logspace(-1,1,5)")
    assert same == over


def test_json_config_with_dashes(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"kind": "heat", "beta": 0.5, "init": "mode:1", "times": [1, 2],
                               "tail-tol": 1e-6}))
    assert call("solve", "--config", str(cfg))[0] == 0


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("kind: heat\nbeta: 0.5\ncolour: blue\n")
    code, _, err = call("solve", "--config", str(cfg))
    assert code == 1 and "'colour'" in err


def test_thread_cap_validation_and_determinism(monkeypatch):
    monkeypatch.setenv("FRACSPEC_THREADS", "zero")
    code, _, err = call(*SOLVE)
    assert code == 1 and "FRACSPEC_THREADS" in err
    monkeypatch.setenv("FRACSPEC_THREADS", "1")
    one = call(*SOLVE, "--init", "polynomial:x(L-x)", "--tail-tol", "1e-4")
    monkeypatch.setenv("FRACSPEC_THREADS", "4")
    four = call(*SOLVE, "--init", "polynomial:x(L-x)", "--tail-tol", "1e-4")
    assert one[0] == four[0] == 0
    assert one[1] == four[1] and len(one[1].splitlines()) == 241


def test_parse_times():
    assert np.allclose(parse_times("logspace(0,2,3)"), [1, 10, 100])
    assert np.allclose(parse_times("linspace(0,1,3)"), [0, 0.5, 1])
    assert list(parse_times("3, 1,2")) == [3.0, 1.0, 2.0]
    assert list(parse_times([0.5, 2])) == [0.5, 2.0]


def test_console_script_subprocess():
    proc = subprocess.run([sys.executable, "-m", "fracspec.cli", "ml-eval", "--alpha", "1", "--z", "-1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.36787944117144233"
    proc = subprocess.run([sys.executable, "-m", "fracspec.cli", "solve", "--kind", "heat", "--beta", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 1 and "'beta'" in proc.stderr
