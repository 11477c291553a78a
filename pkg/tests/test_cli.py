import json
import subprocess
import sys

import numpy as np
import pytest

from quadricflow.cli import ConfigError, main, parse_config, run_verify
from quadricflow.model import ParameterError

NEUMANN = """
system: neumann
params: {a: [1, 2, 3], r: 1.0}
initial: random
seed: 7
integration: {step: 1.0e-3, t_end: 10.0, sample_stride: 10}
"""

WORKED = """
system: jacobi
params: {b: [4, 1], r: 1.0}
initial: {q: [2.0, 0.0], p: [0.0, 1.0]}
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="run.yaml"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


def test_parse_minimal():
    cfg = parse_config("system: neumann\nparams: {a: [1, 2], r: 1}\nseed: 3\n")
    np.testing.assert_allclose(cfg.params.b, [1.0, 0.5])
    assert cfg.initial == "random" and cfg.seed == 3


def test_parse_errors():
    with pytest.raises(ParameterError) as info:
        parse_config("system: neumann\nparams: {a: [1, 2]}\nseed: 1\n")
    assert info.value.field == "r"
    with pytest.raises(ParameterError, match="not strictly increasing"):
        parse_config("system: neumann\nparams: {a: [2, 1], r: 1}\nseed: 1\n")
    with pytest.raises(ConfigError) as info:
        parse_config("system: neumann\nparams: {a: [1, 2], r: 1}\ninitial: random\n")
    assert info.value.field == "seed"
    with pytest.raises(ConfigError):
        parse_config("system: [unclosed\n")
    with pytest.raises(ConfigError):
        parse_config("system: lagrange\nparams: {a: [1, 2], r: 1}\n")
    with pytest.raises(ConfigError):
        parse_config("system: neumann\nparams: {a: [1, 2], r: 1}\nseed: 1\noutputs: [plot_png]\n")


def test_simulate_reference_run(write, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(write(NEUMANN)), "--out", str(out), "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["suite"] == "simulate" and report["pass"]
    for check in report["checks"]:
        assert {"name", "residual", "tolerance", "pass"} <= set(check)
    assert max(max(v) for v in report["drift"].values()) <= 1e-8
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x_1,x_2,x_3,v_1,v_2,v_3"
    inv_header = (out / "invariants.csv").read_text().splitlines()[0]
    assert inv_header == "t,F_1,F_2,F_3,hamiltonian"
    first = (out / "trajectory.csv").read_text().splitlines()[1].split(",")
    assert all(len(f.split("e")[0].replace("-", "").replace(".", "")) == 17 for f in first)


def test_simulate_is_deterministic(write, tmp_path):
    cfg = str(write(NEUMANN.replace("t_end: 10.0", "t_end: 1.0")))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(a), "--quiet"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b), "--quiet"]) == 0
    for name in ("trajectory.csv", "invariants.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    main(["simulate", "--config", cfg, "--out", str(c), "--seed", "8", "--quiet"])
    assert (a / "trajectory.csv").read_bytes() != (c / "trajectory.csv").read_bytes()


def test_simulate_zero_duration(write, tmp_path):
    cfg = write(NEUMANN.replace("t_end: 10.0", "t_end: 0.0"))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    assert len((tmp_path / "trajectory.csv").read_text().splitlines()) == 2


def test_simulate_singular_input(write, tmp_path):
    cfg = write("""
system: rosochatius
params: {a: [1, 2], r: 1.0, c: [0.1, 0.1]}
initial: {x: [0.0, 1.0], v: [1.0, 0.0]}
integration: {step: 1.0e-3, t_end: 1.0}
""")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) != 0


def test_simulate_guard_truncates(write, tmp_path):
    x = np.array([0.4, 0.6, 0.0])
    x[2] = np.sqrt(1 - x @ x)
    v = np.array([-1.0, 0.0, 0.0]) - x * (-0.4)
    cfg = write(f"""
system: rosochatius
params: {{a: [1, 2, 3], r: 1.0, c: [0.05, 0.075, 0.06]}}
initial: {{x: {x.tolist()}, v: {v.tolist()}}}
integration: {{step: 1.0e-3, t_end: 2.0, singular_guard_radius: 0.3}}
""")
    status = main(["simulate", "--config", str(cfg), "--out", str(tmp_path), "--quiet"])
    assert status != 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[-1].startswith("# truncated")
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["truncated"] and not report["pass"]


def test_simulate_rejects_off_constraint_state(write, tmp_path):
    cfg = write("""
system: neumann
params: {a: [1, 2], r: 1.0}
initial: {x: [2.0, 0.0], v: [0.0, 1.0]}
""")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) != 0


def test_verify_involution(write):
    cfg = parse_config(NEUMANN)
    status, report = run_verify("involution", cfg)
    assert status == 0
    f = {c["name"]: c for c in report["checks"]}["F_analytic"]
    assert f["residual"] <= 1e-10 and f["tolerance"] == 1e-10


def test_verify_gaussmap_worked_point():
    status, report = run_verify("gaussmap", parse_config(WORKED))
    assert status == 0
    checks = {c["name"]: c for c in report["checks"]}
    assert checks["commutation_position"]["residual"] <= 1e-6


def test_verify_identities_mu_zero():
    cfg = parse_config(WORKED + "verify: {mu: 0.0}\n")
    _, report = run_verify("identities", cfg)
    checks = {c["name"]: c for c in report["checks"]}
    assert checks["sum_y2_over_a"]["residual"] <= 1e-10
    # the stated forms are reported but do not gate the exit status
    assert not checks["sum_bF_stated"]["required"]


def test_verify_tolerance_override():
    status, report = run_verify("brackets", parse_config(NEUMANN), tol=1e-30)
    assert status != 0
    assert all(c["tolerance"] == 1e-30 for c in report["checks"])


def test_verify_unknown_suite():
    with pytest.raises(ConfigError):
        run_verify("everything", parse_config(NEUMANN))


def test_verify_writes_report(write, tmp_path):
    assert main(["verify", "brackets", "--config", str(write(NEUMANN)), "--out", str(tmp_path), "--quiet"]) == 0
    report = json.loads((tmp_path / "verify_brackets.json").read_text())
    assert report["suite"] == "brackets" and "config_echo" in report


def test_map_verb(write, tmp_path):
    assert main(["map", "--config", str(write(WORKED)), "--out", str(tmp_path), "--quiet"]) == 0
    mapped = json.loads((tmp_path / "mapped.json").read_text())
    np.testing.assert_allclose(mapped["x"], [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(mapped["y"], [0.0, 1.0], atol=1e-15)
    assert mapped["kappa"] == pytest.approx(2.0)


def test_map_state_file(write, tmp_path):
    cfg = write("system: rosochatius\nparams: {a: [1, 2], r: 1, c: [1, 1]}\nseed: 0\n")
    state = tmp_path / "state.json"
    state.write_text(json.dumps({"x": [0.6, 0.8], "v": [0.8, -0.6]}))
    assert main(["map", "--config", str(cfg), "--state", str(state), "--out", str(tmp_path), "--quiet"]) == 0
    mapped = json.loads((tmp_path / "mapped.json").read_text())
    assert mapped["kind"] == "lift_rosochatius" and len(mapped["z"]) == 4


def test_params_check(write, capsys):
    assert main(["params-check", "--config", str(write("system: neumann\nparams: {a: [1, 2], r: 1}\nseed: 0\n"))]) == 0
    out = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(out["params"]["b"], [1.0, 0.5])
    assert main(["params-check", "--config", str(write("system: neumann\nparams: {a: [2, 1], r: 1}\n"))]) != 0


def test_module_entry_point(write):
    res = subprocess.run([sys.executable, "-m", "quadricflow", "params-check", "--config",
                          str(write("system: neumann\nparams: {a: [1, 2], r: 1}\nseed: 0\n"))],
                         capture_output=True, text=True)
    assert res.returncode == 0 and '"b"' in res.stdout
