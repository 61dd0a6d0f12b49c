"""Scenario files, single runs with CSV artifacts, and the sweep presets.

A scenario is a small TOML document::

    name = "demo"
    p = 40
    dt = 0.01
    t_end = 50.0

    [kernel]
    family = "product"      # constant | product | lambda | table
    alpha = 2.0

    [phi]
    family = "exponential"  # uniform | power_law | monomer | exponential | table

    [initial]
    kind = "geometric"      # geometric | monomer | file

Unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import g0_moment, rhs_l1
from .errors import BreakageError, ConfigError, ValidationError
from .integrator import IntegratorConfig, Trajectory, integrate
from .kinetics import (
    CollisionKernel,
    FragmentDistribution,
    WeightFunction,
    WeightSequence,
    bcond_constants,
    check_weight_class,
    find_bcond_witness,
    load_fragment_table,
    load_kernel_table,
    validate_kernel,
    validate_lmc1,
    validate_weight_sequence,
)
from .monitors import G0MomentBound, MassDrift, NumberGrowth, TailMonotonicity
from .svg import render_svg
from .system import SystemConfig, geometric_state, mass, monomer_state, number, ordered_sum

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INTEGRATION = 4
EXIT_MONITOR = 5

MONITORS = ("mass", "number", "tail", "g0")
TAIL_INDICES = (1, 2, 3, 5, 10, 20)

_ALLOWED = {
    "": {"name", "p", "dt", "t_end", "scheme", "newton_tol", "newton_max_iter", "steady_tol", "output", "monitors",
         "kernel", "phi", "initial", "weights", "lambda"},
    "kernel": {"family", "alpha", "c", "table", "exponent"},
    "phi": {"family", "nu", "table"},
    "initial": {"kind", "ratio", "mass", "path"},
    "weights": {"family", "m"},
    "lambda": {"family", "exponent", "scale"},
}


@dataclass(frozen=True)
class Scenario:
    """A fully resolved run description."""

    name: str
    p: int
    kernel: CollisionKernel
    phi: FragmentDistribution
    initial: np.ndarray = field(repr=False, compare=False)
    integrator: IntegratorConfig = IntegratorConfig(dt=0.01, t_end=10.0)
    weights: WeightFunction = WeightFunction.power(2.0)
    lam: WeightSequence = WeightSequence.power(1.0)
    monitors: tuple[str, ...] = MONITORS
    output: str | None = None

    def system(self, validate: bool = True) -> SystemConfig:
        return SystemConfig(self.p, self.kernel, self.phi, validate=validate)


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _check_keys(doc: dict) -> None:
    for key, value in doc.items():
        if key not in _ALLOWED[""]:
            raise ConfigError(f"unknown key {key!r}")
        if key in _ALLOWED and key != "":
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            for sub in value:
                if sub not in _ALLOWED[key]:
                    raise ConfigError(f"unknown key {key}.{sub}")


def _resolve(base: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def build_kernel(section: dict, base: Path = Path(".")) -> CollisionKernel:
    family = section.get("family", "product")
    if family == "constant":
        return CollisionKernel.constant(float(section.get("c", 1.0)))
    if family == "product":
        return CollisionKernel.product(float(section.get("alpha", 2.0)))
    if family == "lambda":
        return CollisionKernel.lambda_bounded(WeightSequence.power(float(section.get("exponent", 1.0))))
    if family == "table":
        if "table" not in section:
            raise ConfigError("kernel.family = 'table' needs kernel.table")
        return load_kernel_table(_resolve(base, section["table"]))
    raise ConfigError(f"unknown kernel family {family!r}")


def build_phi(section: dict, base: Path = Path(".")) -> FragmentDistribution:
    family = section.get("family", "uniform")
    if family == "uniform":
        return FragmentDistribution.uniform()
    if family == "monomer":
        return FragmentDistribution.monomer()
    if family == "exponential":
        return FragmentDistribution.exponential()
    if family == "power_law":
        if "nu" not in section:
            raise ConfigError("phi.family = 'power_law' needs phi.nu")
        return FragmentDistribution.power_law(float(section["nu"]))
    if family == "table":
        if "table" not in section:
            raise ConfigError("phi.family = 'table' needs phi.table")
        return load_fragment_table(_resolve(base, section["table"]))
    raise ConfigError(f"unknown phi family {family!r}")


def load_state(path: str | Path, p: int) -> np.ndarray:
    """Read ``i value`` lines (``#`` comments allowed); unlisted sizes are zero."""
    x = np.zeros(p)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                i, value = int(parts[0]), float(parts[1])
            except (IndexError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: expected 'i value'") from exc
            if len(parts) != 2 or not 1 <= i <= p:
                raise ConfigError(f"{path}:{lineno}: bad entry {line!r} for p={p}")
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"{path}:{lineno}: value must be finite and non-negative")
            x[i - 1] = value
    return x


def build_initial(section: dict, p: int, base: Path = Path(".")) -> np.ndarray:
    kind = section.get("kind", "geometric")
    if kind == "geometric":
        return geometric_state(p, float(section.get("ratio", 0.5)))
    if kind == "monomer":
        return monomer_state(p, float(section.get("mass", 1.0)))
    if kind == "file":
        if "path" not in section:
            raise ConfigError("initial.kind = 'file' needs initial.path")
        return load_state(_resolve(base, section["path"]), p)
    raise ConfigError(f"unknown initial kind {kind!r}")


def build_weights(section: dict) -> WeightFunction:
    family = section.get("family", "power")
    m = float(section.get("m", 2.0))
    if family == "power":
        return WeightFunction.power(m)
    if family == "log_power":
        return WeightFunction.log_power(m)
    raise ConfigError(f"unknown weight family {family!r}")


def build_lambda(section: dict) -> WeightSequence:
    family = section.get("family", "power")
    if family != "power":
        raise ConfigError(f"unknown lambda family {family!r}")
    return WeightSequence.power(float(section.get("exponent", 1.0)), float(section.get("scale", 1.0)))


def parse_scenario(doc: dict, base: Path = Path("."), default_name: str = "scenario") -> Scenario:
    """Build a :class:`Scenario` from a parsed TOML mapping.

    Any malformed or out-of-range entry is reported as :class:`ConfigError`.
    """
    _check_keys(doc)
    try:
        p = int(doc.get("p", 40))
        icfg = IntegratorConfig(
            dt=float(doc.get("dt", 0.01)),
            t_end=float(doc.get("t_end", 10.0)),
            scheme=str(doc.get("scheme", "implicit_euler")),
            newton_tol=float(doc.get("newton_tol", 1e-12)),
            newton_max_iter=int(doc.get("newton_max_iter", 50)),
            steady_tol=float(doc.get("steady_tol", 1e-10)),
        )
        monitors = tuple(doc.get("monitors", MONITORS))
        unknown = [m for m in monitors if m not in MONITORS]
        if unknown:
            raise ConfigError(f"unknown monitor {unknown[0]!r}; choose from {', '.join(MONITORS)}")
        return Scenario(
            name=str(doc.get("name", default_name)),
            p=p,
            kernel=build_kernel(_section(doc, "kernel"), base),
            phi=build_phi(_section(doc, "phi"), base),
            initial=build_initial(_section(doc, "initial"), p, base),
            integrator=icfg,
            weights=build_weights(_section(doc, "weights")),
            lam=build_lambda(_section(doc, "lambda")),
            monitors=monitors,
            output=doc.get("output"),
        )
    except ConfigError:
        raise
    except (BreakageError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_scenario(doc, path.parent, path.stem)


# ---------------------------------------------------------------------------
# validation and runs


def validate_scenario(sc: Scenario, lines: list[str] | None = None) -> list[str]:
    """Certify every kinetic object on ``1..p``.

    One PASS/FAIL line per check is appended to ``lines`` (returned); the
    first failing check raises :class:`ValidationError`.
    """
    lines = [] if lines is None else lines

    def require(ok: bool, line: str, report=None):
        lines.append(("PASS " if ok else "FAIL ") + line)
        if not ok:
            raise ValidationError(line, report)

    kr = validate_kernel(sc.kernel, sc.kernel.certificate, sc.p)
    require(kr.certified, f"kernel {sc.kernel.describe()}: {kr.summary()}", kr)
    lr = validate_lmc1(sc.phi, sc.p, sc.p, exact=sc.phi.is_rational)
    require(lr.certified, f"lmc1 {sc.phi.describe()}: {lr.summary()}", lr)
    a0, a1 = bcond_constants(sc.phi, sc.p)
    bw = find_bcond_witness(sc.phi, a0, a1, sc.p, sc.p)
    require(bw.certified, f"bcond {sc.phi.describe()} alpha0={float(a0):.6g} alpha1={float(a1):.6g}: {bw.status}")
    wr = validate_weight_sequence(sc.lam, sc.p)
    require(wr.certified, f"lambda {sc.lam.describe()}: {wr.summary()}", wr)
    gr = check_weight_class(sc.weights, np.geomspace(1.0, 1e4, 200))
    require(gr.certified, f"weight {sc.weights.describe()}: {gr.summary()}", gr)
    return lines


def build_monitors(sc: Scenario) -> list:
    slack = 10.0 * sc.integrator.newton_tol * max(1.0, mass(sc.initial))
    out = []
    if "mass" in sc.monitors:
        out.append(MassDrift(1e-8))
    if "number" in sc.monitors:
        out.append(NumberGrowth(slack))
    if "tail" in sc.monitors:
        rs = [r for r in TAIL_INDICES if r <= sc.p]
        out.append(TailMonotonicity(sc.lam, rs, slack))
    if "g0" in sc.monitors:
        j0 = g0_moment(sc.initial, sc.weights)
        out.append(G0MomentBound(sc.weights, 10.0 * sc.integrator.newton_tol * max(1.0, j0)))
    return out


@dataclass
class RunResult:
    scenario: Scenario
    exit_code: int
    trajectory: Trajectory | None = None
    report: list[str] = field(default_factory=list)
    out_dir: Path | None = None


def _fmt(x) -> str:
    # shortest round-trip representation: deterministic and lossless
    return repr(float(x))


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_artifacts(sc: Scenario, traj: Trajectory, cfg: SystemConfig, out_dir: Path) -> None:
    p = sc.p
    write_csv(out_dir / "states.csv", ["t"] + [f"psi_{i}" for i in range(1, p + 1)],
              ([t, *psi] for t, psi in zip(traj.times, traj.states)))
    sizes = np.arange(1, p + 1, dtype=float)
    g0w = sc.weights.g0(sizes)
    lw = sc.lam.array(p)
    write_csv(out_dir / "moments.csv", ["t", "m0", "m1", "g0moment", "lambda_moment"],
              ([t, number(psi), mass(psi), ordered_sum(g0w * psi), ordered_sum(lw * psi)]
               for t, psi in zip(traj.times, traj.states)))
    write_csv(out_dir / "diagnostics.csv", ["t", "newton_iterations", "newton_residual", "halvings", "rhs_l1"],
              ([d.t, d.iterations, d.residual, d.halvings, rhs_l1(psi, cfg)]
               for d, psi in zip(traj.diagnostics, traj.states[1:])))


def run_scenario(sc: Scenario, out_dir: str | Path | None = None) -> RunResult:
    """Validate, integrate and write artifacts; the exit code mirrors the CLI's."""
    out = Path(out_dir if out_dir is not None else (sc.output or sc.name))
    out.mkdir(parents=True, exist_ok=True)
    result = RunResult(sc, EXIT_OK, out_dir=out)
    report = result.report
    report.append(f"scenario {sc.name}: p={sc.p}, Gamma={sc.kernel.describe()}, phi={sc.phi.describe()}, "
                  f"dt={sc.integrator.dt:g}, t_end={sc.integrator.t_end:g}")

    def finish(code: int) -> RunResult:
        result.exit_code = code
        (out / "report.txt").write_text("\n".join(report) + "\n")
        return result

    try:
        validate_scenario(sc, report)
    except (ValidationError, BreakageError) as exc:
        if not report[-1].startswith("FAIL"):
            report.append(f"FAIL validation: {exc}")
        return finish(EXIT_VALIDATION)

    cfg = sc.system(validate=False)
    monitors = build_monitors(sc)
    try:
        traj = integrate(sc.initial, cfg, sc.integrator, monitors)
    except BreakageError as exc:
        report.append(f"FAIL integration at t={getattr(exc, 'time', None)}: {exc}")
        return finish(EXIT_INTEGRATION)
    result.trajectory = traj
    write_artifacts(sc, traj, cfg, out)
    report.append(f"stop: {traj.stop_reason} after {len(traj) - 1} steps")
    final = traj.final
    report.append(f"final m0={_fmt(number(final))} m1={_fmt(mass(final))} "
                  f"max_tail={_fmt(final[1:].max())}")
    report.extend(mon.summary() for mon in monitors)
    return finish(EXIT_OK if all(mon.passed for mon in monitors) else EXIT_MONITOR)


# ---------------------------------------------------------------------------
# presets

PHI_RULES = ("uniform", "monomer", "exponential")
PRESETS = ("fig5", "fig6", "fig7")
GAMMA_SETS = {"one": 0.0, "ij": 1.0, "i2j2": 2.0}


def _preset_scenario(name: str, alpha: float, phi: str, t_end: float, steady_tol: float) -> Scenario:
    return Scenario(
        name=name,
        p=40,
        kernel=CollisionKernel.product(alpha),
        phi=build_phi({"family": phi}),
        initial=geometric_state(40),
        integrator=IntegratorConfig(dt=0.01, t_end=t_end, steady_tol=steady_tol),
    )


def preset_scenarios(preset: str) -> list[tuple[str, Scenario]]:
    """``(relative directory, scenario)`` pairs making up a preset."""
    if preset == "fig5":
        return [(phi, _preset_scenario(f"fig5-{phi}", 2.0, phi, 50.0, 1e-10)) for phi in PHI_RULES]
    if preset == "fig6":
        # no early stop so that every curve shares the same time grid
        return [
            (f"{phi}/alpha_{a}", _preset_scenario(f"fig6-{phi}-alpha{a}", float(a), phi, 10.0, 0.0))
            for phi in PHI_RULES
            for a in range(5)
        ]
    if preset == "fig7":
        return [
            (f"{g}/{phi}", _preset_scenario(f"fig7-{g}-{phi}", alpha, phi, 10.0, 0.0))
            for g, alpha in GAMMA_SETS.items()
            for phi in PHI_RULES
        ]
    raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")


def worker_count(n_jobs: int) -> int:
    env = os.environ.get("BREAKAGE_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ConfigError(f"BREAKAGE_THREADS must be an integer, got {env!r}") from exc
        if cap < 1:
            raise ConfigError("BREAKAGE_THREADS must be >= 1")
    return max(1, min(cap, n_jobs))


def _overlay(path: Path, runs: list[tuple[str, RunResult]]) -> list[str]:
    """Write ``t`` plus one ``m0`` column per run; all runs must share one grid."""
    times = runs[0][1].trajectory.times
    for label, r in runs:
        if r.trajectory.times != times:
            raise BreakageError(f"run {label} has a different time grid")
    cols = [label for label, _ in runs]
    m0 = [[number(s) for s in r.trajectory.states] for _, r in runs]
    write_csv(path, ["t"] + cols, ([t, *(c[n] for c in m0)] for n, t in enumerate(times)))
    return cols


def run_preset(preset: str, out_dir: str | Path, logy: bool = False) -> tuple[int, list[RunResult]]:
    """Run every scenario of ``preset`` under ``out_dir`` and draw its charts.

    Returns the worst exit code and the individual results.
    """
    jobs = preset_scenarios(preset)
    root = Path(out_dir) / preset
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        results = list(pool.map(lambda job: run_scenario(job[1], root / job[0]), jobs))
    code = max(r.exit_code for r in results)
    if any(r.trajectory is None for r in results):
        return code, results

    if preset == "fig5":
        cols = [f"psi_{i}" for i in range(1, 6)]
        for (rel, _), r in zip(jobs, results):
            render_svg(r.out_dir / "states.csv", cols, r.out_dir / "psi_1_5.svg", logy=logy,
                       title=f"Gamma=(ij)^2, phi={rel}")
    elif preset == "fig6":
        for phi in PHI_RULES:
            runs = [(f"alpha_{a}", r) for (rel, _), r in zip(jobs, results) for a in range(5)
                    if rel == f"{phi}/alpha_{a}"]
            csv_path = root / f"m0_{phi}.csv"
            cols = _overlay(csv_path, runs)
            render_svg(csv_path, cols, root / f"m0_{phi}.svg", logy=logy, title=f"m0(t), phi={phi}")
    else:
        for g in GAMMA_SETS:
            runs = [(phi, r) for (rel, _), r in zip(jobs, results) for phi in PHI_RULES if rel == f"{g}/{phi}"]
            csv_path = root / f"m0_{g}.csv"
            cols = _overlay(csv_path, runs)
            render_svg(csv_path, cols, root / f"m0_{g}.svg", logy=logy, title=f"m0(t), Gamma={g}")
    return code, results
