from __future__ import annotations

import csv

import numpy as np
import pytest

from breakage import scenario as scenario_mod
from breakage.cli import main
from breakage.errors import ConfigError
from breakage.monitors import InvariantMonitor
from breakage.scenario import (
    EXIT_INTEGRATION,
    EXIT_MONITOR,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    load_scenario,
    load_state,
    parse_scenario,
    preset_scenarios,
    run_scenario,
    worker_count,
)
from breakage.svg import render_svg

SMALL = """
name = "small"
p = 12
dt = 0.01
t_end = 2.0

[kernel]
family = "product"
alpha = 1.0

[phi]
family = "exponential"
"""


def write(tmp_path, text, name="s.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# scenario parsing


def test_parse_defaults_and_sections(tmp_path):
    sc = load_scenario(write(tmp_path, SMALL))
    assert sc.name == "small" and sc.p == 12
    assert sc.kernel.describe() == "(ij)^1"
    assert sc.phi.family == "exponential"
    assert sc.integrator.t_end == 2.0
    np.testing.assert_array_equal(sc.initial, 0.5 ** np.arange(1, 13))


@pytest.mark.parametrize(
    "doc, message",
    [
        ({"q": 1}, "unknown key 'q'"),
        ({"kernel": {"family": "product", "beta": 1}}, "kernel.beta"),
        ({"phi": {"family": "power_law"}}, "phi.nu"),
        ({"phi": {"family": "nope"}}, "unknown phi family"),
        ({"initial": {"kind": "file"}}, "initial.path"),
        ({"weights": {"family": "power", "m": 3.0}}, "m in (1, 2]"),
        ({"dt": -1.0}, "dt must be positive"),
        ({"monitors": ["mass", "energy"]}, "unknown monitor"),
        ({"kernel": 3}, "must be a table"),
    ],
)
def test_parse_errors(doc, message):
    with pytest.raises(ConfigError, match=message.replace("(", r"\(").replace(")", r"\)")):
        parse_scenario(doc)


def test_initial_state_file(tmp_path):
    path = write(tmp_path, "# i value\n1 0.5\n3 0.25  # trailing comment\n", "init.txt")
    np.testing.assert_array_equal(load_state(path, 4), [0.5, 0.0, 0.25, 0.0])
    sc = load_scenario(write(tmp_path, 'p = 4\n[initial]\nkind = "file"\npath = "init.txt"\n'))
    np.testing.assert_array_equal(sc.initial, [0.5, 0.0, 0.25, 0.0])
    bad = write(tmp_path, "5 1.0\n", "bad.txt")
    with pytest.raises(ConfigError):
        load_state(bad, 4)
    with pytest.raises(ConfigError):
        load_state(write(tmp_path, "1 -1\n", "neg.txt"), 4)


def test_malformed_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(write(tmp_path, "p = = 3\n"))


# ---------------------------------------------------------------------------
# runs


def test_run_writes_artifacts(tmp_path):
    sc = load_scenario(write(tmp_path, SMALL))
    res = run_scenario(sc, tmp_path / "out")
    assert res.exit_code == EXIT_OK
    out = tmp_path / "out"
    states = read_csv(out / "states.csv")
    assert states[0] == ["t"] + [f"psi_{i}" for i in range(1, 13)]
    assert len(states) == len(res.trajectory) + 1
    moments = read_csv(out / "moments.csv")
    assert moments[0] == ["t", "m0", "m1", "g0moment", "lambda_moment"]
    m1 = [float(r[2]) for r in moments[1:]]
    assert max(abs(x - m1[0]) for x in m1) <= 1e-12 * m1[0]
    diag = read_csv(out / "diagnostics.csv")
    assert diag[0] == ["t", "newton_iterations", "newton_residual", "halvings", "rhs_l1"]
    assert len(diag) == len(res.trajectory)
    report = (out / "report.txt").read_text()
    assert "PASS mass-drift" in report and "FAIL" not in report
    # shortest round-trip floats reload losslessly
    assert float(states[1][1]) == 0.5


def test_runs_are_byte_identical(tmp_path):
    sc = load_scenario(write(tmp_path, SMALL))
    run_scenario(sc, tmp_path / "a")
    run_scenario(sc, tmp_path / "b")
    for name in ("states.csv", "moments.csv", "diagnostics.csv", "report.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_validation_failure_exit_code(tmp_path):
    sc = load_scenario(write(tmp_path, SMALL + "\n[lambda]\nexponent = 0.5\n"))
    res = run_scenario(sc, tmp_path / "out")
    assert res.exit_code == EXIT_VALIDATION
    assert res.trajectory is None
    assert "FAIL lambda" in (tmp_path / "out" / "report.txt").read_text()


def test_integration_failure_exit_code(tmp_path):
    sc = parse_scenario({**_doc(SMALL), "newton_tol": 1e-30, "newton_max_iter": 2})
    res = run_scenario(sc, tmp_path / "out")
    assert res.exit_code == EXIT_INTEGRATION
    assert "FAIL integration" in (tmp_path / "out" / "report.txt").read_text()


def _doc(text):
    from breakage.scenario import tomllib

    return tomllib.loads(text)


class _AlwaysFails(InvariantMonitor):
    name = "always-fails"

    def __call__(self, t, psi, info=None):
        self._record(t, -1.0)


def test_monitor_failure_exit_code(tmp_path, monkeypatch):
    original = scenario_mod.build_monitors
    monkeypatch.setattr(scenario_mod, "build_monitors", lambda sc: original(sc) + [_AlwaysFails()])
    res = run_scenario(parse_scenario(_doc(SMALL)), tmp_path / "out")
    assert res.exit_code == EXIT_MONITOR
    assert "FAIL (first at t=0) always-fails" in (tmp_path / "out" / "report.txt").read_text()


def test_presets_are_well_formed():
    assert [rel for rel, _ in preset_scenarios("fig5")] == ["uniform", "monomer", "exponential"]
    fig6 = preset_scenarios("fig6")
    assert len(fig6) == 15 and all(sc.integrator.steady_tol == 0 for _, sc in fig6)
    fig7 = preset_scenarios("fig7")
    assert {sc.kernel.param for _, sc in fig7} == {0.0, 1.0, 2.0}
    with pytest.raises(ConfigError):
        preset_scenarios("fig8")


def test_worker_count(monkeypatch):
    monkeypatch.setenv("BREAKAGE_THREADS", "2")
    assert worker_count(9) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv("BREAKAGE_THREADS", "zero")
    with pytest.raises(ConfigError):
        worker_count(3)
    monkeypatch.setenv("BREAKAGE_THREADS", "0")
    with pytest.raises(ConfigError):
        worker_count(3)


# ---------------------------------------------------------------------------
# svg


def test_svg_rendering(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("t,a,b\n0.0,1.0,0.0\n1.0,1.0,0.5\n2.0,1.0,1.0\n")
    out = render_svg(data, ["a", "b"], tmp_path / "x.svg", title="demo")
    text = out.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 2
    assert ">a</text>" in text and ">b</text>" in text
    # a constant column is drawn as a horizontal line
    flat = [seg for seg in text.splitlines() if "polyline" in seg][0]
    ys = {pt.split(",")[1] for pt in flat.split('points="')[1].rstrip('"/>').split()}
    assert len(ys) == 1
    again = render_svg(data, ["a", "b"], tmp_path / "y.svg", title="demo")
    assert again.read_bytes() == out.read_bytes()


def test_svg_log_axis_drops_zeros(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("t,a\n0,0\n1,0.1\n2,0.01\n")
    text = render_svg(data, ["a"], tmp_path / "x.svg", logy=True).read_text()
    assert text.count("<polyline") == 1
    assert text.split('points="')[1].count(",") == 2


def test_svg_errors(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("t,a\n0,1\n")
    with pytest.raises(ConfigError, match="'zz'"):
        render_svg(data, ["a", "zz"], tmp_path / "x.svg")
    with pytest.raises(ConfigError):
        render_svg(data, [], tmp_path / "x.svg")


# ---------------------------------------------------------------------------
# command line


def test_cli_validate_examples(capsys):
    assert main(["validate", "phi", "exponential", "--alpha0", "1", "--alpha1", "1",
                 "--jmax", "200", "--kmax", "200"]) == 0
    assert "certified" in capsys.readouterr().out
    assert main(["validate", "phi", "monomer", "--alpha0", "0", "--alpha1", "1"]) == 0
    assert main(["validate", "kernel", "product", "--alpha", "2", "--lambda", "power:2", "--p", "40"]) == 0
    assert main(["validate", "weights", "log_power", "--m", "2"]) == 0


def test_cli_validate_failures(capsys):
    assert main(["validate", "phi", "monomer", "--alpha0", "0", "--alpha1", "0.5", "--jmax", "20",
                 "--kmax", "20"]) == EXIT_VALIDATION
    assert "violated(1, 2, 2)" in capsys.readouterr().out
    assert main(["validate", "kernel", "product", "--alpha", "2", "--lambda", "power:1"]) == EXIT_VALIDATION
    assert main(["validate", "kernel", "product", "--lambda", "linear"]) == EXIT_PARSE
    assert main(["validate", "phi", "power_law"]) == EXIT_PARSE


def test_cli_simulate_and_render(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert "PASS g0-moment-bound" in capsys.readouterr().out
    svg = tmp_path / "m.svg"
    assert main(["render-svg", "--csv", str(out / "moments.csv"), "--cols", "m0,m1", "--out", str(svg)]) == 0
    assert svg.exists()
    assert main(["render-svg", "--csv", str(out / "moments.csv"), "--cols", "m9", "--out", str(svg)]) == EXIT_PARSE
    assert "m9" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.toml")]) == EXIT_PARSE


def test_cli_bounds(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    assert main(["bounds", "--config", str(cfg), "--imax", "2", "--mmax", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("J0 = ")
    assert "m,i,omega_m(i)" in lines
    table = write(tmp_path, SMALL.replace('family = "exponential"', 'family = "table"\ntable = "phi.txt"'), "t.toml")
    write(tmp_path, "1 2 * 2\n", "phi.txt")
    assert main(["bounds", "--config", str(table)]) == EXIT_PARSE


def test_cli_gronwall(tmp_path, capsys):
    cfg = write(tmp_path, 'p = 10\nt_end = 1.0\nsteady_tol = 0.0\n[kernel]\nfamily = "constant"\n')
    out = tmp_path / "gw"
    assert main(["gronwall", "--config", str(cfg), "--perturb", "2:1e-6", "--out", str(out)]) == 0
    rows = read_csv(out / "distance.csv")
    assert rows[0] == ["t", "d", "bound"] and len(rows) == 102
    assert main(["gronwall", "--config", str(cfg), "--perturb", "2-1e-6"]) == EXIT_PARSE
    assert main(["gronwall", "--config", str(cfg), "--perturb", "11:1e-6"]) == EXIT_PARSE


def test_cli_preset_fig5(tmp_path, capsys):
    assert main(["preset", "fig5", "--out", str(tmp_path), "--logy"]) == EXIT_OK
    for phi in ("uniform", "monomer", "exponential"):
        assert (tmp_path / "fig5" / phi / "psi_1_5.svg").exists()
    assert capsys.readouterr().out.count(": ok") == 3
