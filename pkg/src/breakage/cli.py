"""Command line entry point: ``breakage <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import compute_bounds, gronwall_experiment
from .errors import BreakageError, ConfigError, IntegrationError
from .kinetics import (
    CollisionKernel,
    WeightFunction,
    WeightSequence,
    bcond_constants,
    check_weight_class,
    default_alpha1,
    find_bcond_witness,
    load_kernel_table,
    validate_kernel,
    validate_lmc1,
)
from .scenario import (
    EXIT_INTEGRATION,
    EXIT_MONITOR,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    PRESETS,
    build_phi,
    load_scenario,
    run_preset,
    run_scenario,
    write_csv,
)
from .svg import render_svg
from .system import SystemConfig


def _verdict(ok: bool) -> int:
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_simulate(args) -> int:
    sc = load_scenario(args.config)
    result = run_scenario(sc, args.out)
    print("\n".join(result.report))
    print(f"artifacts in {result.out_dir}")
    return result.exit_code


def cmd_preset(args) -> int:
    code, results = run_preset(args.name, args.out, logy=args.logy)
    for r in results:
        verdict = "ok" if r.exit_code == EXIT_OK else f"exit {r.exit_code}"
        print(f"{r.scenario.name}: {verdict} ({r.out_dir})")
    return code


def cmd_validate_phi(args) -> int:
    rule = {"family": args.family}
    if args.nu is not None:
        rule["nu"] = args.nu
    if args.table:
        rule["table"] = args.table
    phi = build_phi(rule)
    jmax, kmax = args.jmax, max(args.kmax, args.jmax)
    lr = validate_lmc1(phi, jmax, kmax, exact=phi.is_rational)
    print(lr.summary())
    d0, d1 = bcond_constants(phi, kmax)
    a0 = d0 if args.alpha0 is None else args.alpha0
    a1 = d1 if args.alpha1 is None else args.alpha1
    bw = find_bcond_witness(phi, a0, a1, jmax, kmax)
    mode = "exact" if bw.exact else "float"
    print(f"bcond ({mode}, alpha0={float(a0):.6g}, alpha1={float(a1):.6g}, j<={jmax}, k<={kmax}): {bw.status}")
    return _verdict(lr.certified and bw.certified)


def _parse_lambda(text: str | None) -> WeightSequence | None:
    if text is None:
        return None
    family, _, value = text.partition(":")
    if family != "power" or not value:
        raise ConfigError(f"--lambda expects power:<exponent>, got {text!r}")
    try:
        return WeightSequence.power(float(value))
    except ValueError as exc:
        raise ConfigError(f"bad lambda exponent {value!r}") from exc


def cmd_validate_kernel(args) -> int:
    if args.family == "constant":
        kernel = CollisionKernel.constant(args.c)
    elif args.family == "product":
        kernel = CollisionKernel.product(args.alpha)
    elif args.family == "table":
        if not args.table:
            raise ConfigError("table kernels need --table")
        kernel = load_kernel_table(args.table)
    else:
        raise ConfigError(f"unknown kernel family {args.family!r}")
    lam = _parse_lambda(args.lam)
    report = validate_kernel(kernel, lam, args.p)
    print(f"{kernel.describe()} on 1..{args.p}: {report.summary()}")
    return _verdict(report.certified)


def cmd_validate_weights(args) -> int:
    g = WeightFunction.power(args.m) if args.family == "power" else WeightFunction.log_power(args.m)
    report = check_weight_class(g, np.geomspace(1.0, args.zmax, args.points))
    print(f"{g.describe()}: {report.summary()}")
    return _verdict(report.certified)


def cmd_bounds(args) -> int:
    sc = load_scenario(args.config)
    alpha1 = args.alpha1
    if alpha1 is None:
        alpha1 = default_alpha1(sc.phi)
        if alpha1 is None:
            raise ConfigError("no default alpha1 for table rules; pass --alpha1")
    m_max = min(args.mmax, sc.p)
    b = compute_bounds(sc.initial, sc.weights, alpha1, min(args.imax, m_max), m_max)
    print(f"J0 = {b.j0!r}  ({sc.weights.describe()}), alpha1 = {b.alpha1!r}")
    print("i,C_i")
    for i in range(1, b.c.size + 1):
        print(f"{i},{b.C(i)!r}")
    print("m,eps_m")
    for m in range(1, b.eps.size + 1):
        print(f"{m},{b.epsilon(m)!r}")
    print("m,i,omega_m(i)")
    for m in range(1, b.eps.size + 1):
        for i in range(1, min(m, b.c.size) + 1):
            print(f"{m},{i},{b.omega_at(m, i)!r}")
    return EXIT_OK


def _parse_perturb(text: str) -> tuple[int, float]:
    i, sep, eps = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return int(i), float(eps)
    except ValueError as exc:
        raise ConfigError(f"--perturb expects i:eps, got {text!r}") from exc


def cmd_gronwall(args) -> int:
    sc = load_scenario(args.config)
    i, eps = _parse_perturb(args.perturb)
    if not 1 <= i <= sc.p:
        raise ConfigError(f"perturbed index {i} outside 1..{sc.p}")
    kernel = sc.kernel if sc.kernel.certificate is not None else sc.kernel.with_certificate(sc.lam)
    cfg = SystemConfig(sc.p, kernel, sc.phi)
    b = sc.initial.copy()
    b[i - 1] += eps
    if b[i - 1] < 0:
        raise ConfigError("perturbation makes the state negative")
    series = gronwall_experiment(sc.initial, b, cfg, sc.integrator, kernel.certificate)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "distance.csv", ["t", "d", "bound"], zip(series.times, series.d, series.bound))
    ok = series.holds(1e-6)
    print(f"M_Lambda^2 = {series.m_lambda_sq!r}, worst d/bound = {series.worst_ratio():.6g}: "
          f"{'PASS' if ok else 'FAIL'} ({out / 'distance.csv'})")
    return EXIT_OK if ok else EXIT_MONITOR


def cmd_render_svg(args) -> int:
    cols = [c for c in args.cols.split(",") if c]
    path = render_svg(args.csv, cols, args.out, logy=args.logy, title=args.title)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="breakage", description="Discrete collision-induced breakage simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default: the scenario's output key or its name)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preset", help="run a built-in scenario sweep")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--out", default="out")
    p.add_argument("--logy", action="store_true", help="logarithmic ordinate in the charts")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("validate", help="certify kinetic coefficients")
    vsub = p.add_subparsers(dest="what", required=True)
    v = vsub.add_parser("phi")
    v.add_argument("family", choices=("uniform", "power_law", "monomer", "exponential", "table"))
    v.add_argument("--nu", type=float)
    v.add_argument("--table")
    v.add_argument("--alpha0", type=float)
    v.add_argument("--alpha1", type=float)
    v.add_argument("--jmax", type=int, default=200)
    v.add_argument("--kmax", type=int, default=200)
    v.set_defaults(func=cmd_validate_phi)
    v = vsub.add_parser("kernel")
    v.add_argument("family", choices=("constant", "product", "table"))
    v.add_argument("--alpha", type=float, default=2.0)
    v.add_argument("--c", type=float, default=1.0)
    v.add_argument("--table")
    v.add_argument("--lambda", dest="lam", help="dominating sequence, e.g. power:2")
    v.add_argument("--p", type=int, default=40)
    v.set_defaults(func=cmd_validate_kernel)
    v = vsub.add_parser("weights")
    v.add_argument("family", choices=("power", "log_power"))
    v.add_argument("--m", type=float, required=True)
    v.add_argument("--zmax", type=float, default=1e4)
    v.add_argument("--points", type=int, default=200)
    v.set_defaults(func=cmd_validate_weights)

    p = sub.add_parser("bounds", help="print the a priori estimate constants for a scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--alpha1", type=float)
    p.add_argument("--imax", type=int, default=10)
    p.add_argument("--mmax", type=int, default=20)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("render-svg", help="plot CSV columns")
    p.add_argument("--csv", required=True)
    p.add_argument("--cols", required=True, help="comma separated column names")
    p.add_argument("--out", required=True)
    p.add_argument("--logy", action="store_true")
    p.add_argument("--title")
    p.set_defaults(func=cmd_render_svg)

    p = sub.add_parser("gronwall", help="distance between a scenario and a perturbed copy")
    p.add_argument("--config", required=True)
    p.add_argument("--perturb", required=True, metavar="I:EPS")
    p.add_argument("--out", default="gronwall")
    p.set_defaults(func=cmd_gronwall)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except BreakageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
