"""A priori estimates evaluated along computed trajectories.

The constants follow from the weight ``G0`` and the initial datum::

    J0        = sum_i G0(i) psi_i(0)
    C_i       = J0 / (i G1'(i+1))
    eps_m     = J0 / inf_{z>=m} z G1'(z)          (attained at z = m)
    omega_m(i)= alpha1 J0 / (G1(m+1) - G1(i))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, PreconditionError, RangeError
from .integrator import IntegratorConfig, Trajectory, integrate
from .kinetics import ValidationReport, WeightFunction, WeightSequence, validate_kernel
from .monitors import G0MomentBound, TailMonotonicity, replay
from .system import SystemConfig, as_state, mass, ordered_sum, reaction_terms, rhs


def g0_moment(psi, g: WeightFunction) -> float:
    x = np.asarray(psi, dtype=float)
    return ordered_sum(g.g0(np.arange(1, x.size + 1, dtype=float)) * x)


@dataclass(frozen=True)
class BoundsReport:
    """Estimate constants.

    ``c[i-1]`` is ``C_i`` for ``i = 1..i_max``; ``eps[m-1]`` is ``eps_m`` for
    ``m = 1..m_max``; ``omega[i-1, m-1]`` is ``omega_m(i)`` (NaN for ``m < i``).
    """

    j0: float
    alpha1: float
    c: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)

    def C(self, i: int) -> float:
        return float(self.c[i - 1])

    def epsilon(self, m: int) -> float:
        return float(self.eps[m - 1])

    def omega_at(self, m: int, i: int) -> float:
        if m < i:
            raise RangeError(f"omega_m(i) needs m >= i, got m={m}, i={i}")
        return float(self.omega[i - 1, m - 1])


def compute_bounds(initial, g: WeightFunction, alpha1: float, i_max: int, m_max: int) -> BoundsReport:
    psi = as_state(initial)
    if not 1 <= i_max <= m_max:
        raise RangeError("compute_bounds needs 1 <= i_max <= m_max")
    if alpha1 < 0:
        raise RangeError("alpha1 must be non-negative")
    j0 = g0_moment(psi, g)

    i = np.arange(1, i_max + 1, dtype=float)
    m = np.arange(1, m_max + 1, dtype=float)
    c = j0 / (i * g.dg1(i + 1.0))
    # z G1'(z) is non-decreasing for both weight families, so the infimum over z >= m sits at m
    eps = j0 / g.z_dg1(m)

    denom = g.g1(m + 1.0)[None, :] - g.g1(i)[:, None]
    valid = m[None, :] >= i[:, None]
    if np.any(denom[valid] <= 0):
        raise DomainError("degenerate denominator G1(m+1) - G1(i)")
    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(valid, alpha1 * j0 / denom, np.nan)
    return BoundsReport(j0, float(alpha1), c, eps, omega)


def _default_slack(traj: Trajectory, newton_tol: float, scale: float | None = None) -> float:
    ref = mass(traj.initial) if scale is None else scale
    return 10.0 * newton_tol * max(1.0, ref)


def check_tail_monotonicity(
    traj: Trajectory,
    lam: WeightSequence,
    rs,
    newton_tol: float = 1e-12,
    cfg: SystemConfig | None = None,
) -> ValidationReport:
    """Tail sums never exceed their initial values (slack ``10 * newton_tol * m1(0)``).

    With ``cfg`` the differential form ``sum_{i>=r} Lambda_i rhs_i <= 0`` is
    also checked at every sample, up to round-off scaled by the reaction
    magnitudes.
    """
    mon = replay(TailMonotonicity(lam, rs, _default_slack(traj, newton_tol)), traj.times, traj.states)
    report = ValidationReport("tail-monotonicity", mon.passed, checked=mon.samples, worst_margin=mon.worst_margin)
    if not mon.passed:
        report.counterexample = ("t", mon.first_failure)
    if cfg is not None:
        w = lam.array(cfg.p)
        worst = math.inf
        for t, psi in zip(traj.times, traj.states):
            gain, loss = reaction_terms(psi, cfg)
            d = w * (gain - loss)
            scale = 1e-12 * float(np.sum(w * (gain + loss)))
            for r in rs:
                if r > cfg.p:
                    continue
                margin = scale - ordered_sum(d[r - 1 :])
                worst = min(worst, margin)
                if margin < 0 and report.certified:
                    report.certified = False
                    report.counterexample = ("differential", t, r)
        report.details["differential_worst_margin"] = worst
    return report


def check_g0_moment_bound(traj: Trajectory, g: WeightFunction, newton_tol: float = 1e-12) -> ValidationReport:
    """``sum G0(i) psi_i(t) <= J0 + 10 * newton_tol * max(1, J0)`` at every sample."""
    j0 = g0_moment(traj.initial, g)
    mon = replay(G0MomentBound(g, _default_slack(traj, newton_tol, j0)), traj.times, traj.states)
    report = ValidationReport("g0-moment-bound", mon.passed, checked=mon.samples, worst_margin=mon.worst_margin)
    report.details["j0"] = j0
    if not mon.passed:
        report.counterexample = ("t", mon.first_failure)
    return report


def reaction_integrals(traj: Trajectory, cfg: SystemConfig) -> dict[str, np.ndarray]:
    """Trapezoidal time integrals of gain, loss and ``|dpsi_i/dt|`` per size."""
    gains, losses = [], []
    for psi in traj.states:
        g, l = reaction_terms(psi, cfg)
        gains.append(g)
        losses.append(l)
    t = traj.t
    gains = np.array(gains)
    losses = np.array(losses)
    return {
        "gain": np.trapezoid(gains, t, axis=0),
        "loss": np.trapezoid(losses, t, axis=0),
        "abs_rate": np.trapezoid(np.abs(gains - losses), t, axis=0),
    }


def check_reaction_bounds(
    traj: Trajectory,
    cfg: SystemConfig,
    g: WeightFunction,
    species=range(2, 11),
    slack: float = 0.01,
) -> ValidationReport:
    """Integrated gain and loss at most ``C_i``, integrated ``|dpsi_i/dt|`` at most ``2 C_i``.

    ``slack`` is the relative allowance for quadrature error.
    """
    species = [i for i in species if i < cfg.p]
    bounds = compute_bounds(traj.initial, g, 0.0, max(species), max(species))
    ints = reaction_integrals(traj, cfg)
    report = ValidationReport("reaction-bounds", True, worst_margin=math.inf)
    rows = {}
    for i in species:
        ci = bounds.C(i)
        limits = {"loss": ci, "gain": ci, "abs_rate": 2.0 * ci}
        for key, limit in limits.items():
            value = float(ints[key][i - 1])
            margin = limit * (1.0 + slack) - value
            report.worst_margin = min(report.worst_margin, margin / limit)
            report.checked += 1
            if margin < 0 and report.certified:
                report.certified = False
                report.counterexample = (key, i)
        rows[i] = {"C_i": ci, **{k: float(ints[k][i - 1]) for k in limits}}
    report.details["species"] = rows
    return report


@dataclass(frozen=True)
class DistanceSeries:
    """Weighted l1 distance between two runs and its exponential envelope."""

    times: np.ndarray
    d: np.ndarray
    bound: np.ndarray
    m_lambda_sq: float
    alpha0: float

    def holds(self, rtol: float = 1e-6) -> bool:
        return bool(np.all(self.d <= self.bound * (1.0 + rtol)))

    def worst_ratio(self) -> float:
        """Largest ``d(t) / bound(t)`` over the samples (0 when both vanish)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.bound > 0, self.d / self.bound, np.where(self.d > 0, np.inf, 0.0))
        return float(r.max())


def gronwall_experiment(
    initial_a,
    initial_b,
    cfg: SystemConfig,
    icfg: IntegratorConfig,
    lam: WeightSequence | None = None,
) -> DistanceSeries:
    """Integrate two initial data on one grid and compare their distance to the envelope.

    ``d(t) = sum Lambda_i |psi_i - phi_i|`` and ``bound(t) = d(0) exp(2 M t)``
    with ``M`` the larger initial ``Lambda**2`` moment.  The kernel must carry
    a certificate ``Gamma[i,j] <= Lambda_i Lambda_j``; ``lam`` defaults to it.
    """
    cert = cfg.kernel.certificate
    if cert is None:
        raise PreconditionError("kernel carries no Lambda certificate")
    kr = validate_kernel(cfg.kernel, cert, cfg.p)
    if not kr.certified:
        raise PreconditionError(f"Lambda certificate rejected: {kr.summary()}")
    lam = cert if lam is None else lam
    a = as_state(initial_a, cfg.p)
    b = as_state(initial_b, cfg.p)

    # same grid for both runs: no early stop
    fixed = replace(icfg, steady_tol=0.0)
    ta = integrate(a, cfg, fixed)
    tb = integrate(b, cfg, fixed)
    w = lam.array(cfg.p)
    d = np.array([ordered_sum(w * np.abs(x - y)) for x, y in zip(ta.states, tb.states)])
    m_sq = max(ordered_sum(w * w * a), ordered_sum(w * w * b))
    t = ta.t
    alpha0 = float(cfg.phi_array.max())
    return DistanceSeries(t, d, d[0] * np.exp(2.0 * m_sq * t), m_sq, alpha0)


@dataclass(frozen=True)
class LongTimeReport:
    t_end: float
    max_tail: float
    monomer_gap: float
    count_gap: float
    tail_decay_rate: float | None
    final_state: np.ndarray = field(repr=False)


def longtime_report(traj: Trajectory, cfg: SystemConfig) -> LongTimeReport:
    """Distance of the final state from the monodisperse limit ``(m1(0), 0, 0, ...)``.

    ``tail_decay_rate`` is the slope of ``-log max_{i>=2} psi_i`` fitted over
    the second half of the run; it is informational only.
    """
    diag = np.diag(cfg.gamma)[1:]
    if np.any(diag <= 0):
        raise PreconditionError("long-time limit needs Gamma[i,i] > 0 for 2 <= i <= p")
    m1_0 = mass(traj.initial)
    final = traj.final
    tails = np.array([float(s[1:].max()) for s in traj.states])
    t = traj.t
    rate = None
    half = t >= t[-1] / 2
    sel = half & (tails > 1e-300)
    if sel.sum() >= 3 and t[-1] > 0:
        rate = float(-np.polyfit(t[sel], np.log(tails[sel]), 1)[0])
    return LongTimeReport(
        t_end=float(t[-1]),
        max_tail=float(final[1:].max()),
        monomer_gap=abs(float(final[0]) - m1_0),
        count_gap=abs(ordered_sum(final) - m1_0),
        tail_decay_rate=rate,
        final_state=final,
    )


def rhs_l1(psi, cfg: SystemConfig) -> float:
    return float(np.sum(np.abs(rhs(psi, cfg))))
