"""Fixed-step time integration of the truncated system.

The production scheme is backward Euler with a damped Newton iteration on
the analytical Jacobian.  Classical RK4 is available only as an independent
reference for cross-checking.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BreakageError, ConvergenceError, NegativityError, RangeError, SolverError
from .system import SystemConfig, jacobian, mass, number, rhs

logger = logging.getLogger(__name__)

SCHEMES = ("implicit_euler", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    """Time stepping parameters.

    ``newton_tol`` bounds the l1 norm of the backward Euler residual.  A
    positive ``steady_tol`` stops the run once ``||rhs||_1`` drops below it.
    """

    dt: float = 0.01
    t_end: float = 1.0
    scheme: str = "implicit_euler"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    max_halvings: int = 30
    steady_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise RangeError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise RangeError(f"t_end must be non-negative, got {self.t_end}")
        if not self.newton_tol > 0:
            raise RangeError("newton_tol must be positive")
        if self.scheme not in SCHEMES:
            raise RangeError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class StepInfo:
    """Diagnostics of one accepted step, with a moment snapshot of its end state."""

    t: float
    iterations: int
    residual: float
    halvings: int
    m0: float
    m1: float


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    diagnostics: list[StepInfo] = field(default_factory=list)
    stop_reason: str = ""

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t(self) -> np.ndarray:
        return np.array(self.times)

    @property
    def psi(self) -> np.ndarray:
        """States stacked as an ``(n_samples, p)`` array."""
        return np.vstack(self.states)

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


Monitor = Callable[[float, np.ndarray, "StepInfo | None"], None]


def _l1(x: np.ndarray) -> float:
    return float(np.sum(np.abs(x)))


def newton_backward_euler(
    psi: np.ndarray,
    cfg: SystemConfig,
    dt: float,
    tol: float,
    max_iter: int,
    max_halvings: int = 30,
) -> tuple[np.ndarray, int, float, int]:
    """Solve ``x - psi - dt * rhs(x) = 0``.

    Starts from the forward Euler predictor and halves the Newton update
    until the l1 residual decreases.  Iterates are projected onto the
    non-negative orthant: for stiff kernels the quadratic system has spurious
    roots with negative components that plain Newton happily converges to.
    Returns ``(x, iterations, residual, total_halvings)``.
    """
    # the true solution is non-negative; keep every iterate in the closed orthant
    x = np.maximum(psi + dt * rhs(psi, cfg), 0.0)
    F = x - psi - dt * rhs(x, cfg)
    res = _l1(F)
    eye = np.eye(psi.size)
    halvings = 0
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton stalled after {it} iterations (residual {res:.3e})", res)
        it += 1
        A = eye - dt * jacobian(x, cfg)
        try:
            delta = np.linalg.solve(A, -F)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Newton matrix: {exc}") from exc
        lam = 1.0
        for _ in range(max_halvings + 1):
            x_try = np.maximum(x + lam * delta, 0.0)
            F_try = x_try - psi - dt * rhs(x_try, cfg)
            res_try = _l1(F_try)
            if res_try < res:
                break
            lam *= 0.5
            halvings += 1
        else:
            raise ConvergenceError(f"damping failed to reduce residual {res:.3e}", res)
        x, F, res = x_try, F_try, res_try
    return x, it, res, halvings


def step_implicit_euler(psi, cfg: SystemConfig, icfg: IntegratorConfig, dt: float | None = None):
    """One backward Euler step of size ``dt`` (default ``icfg.dt``).

    Returns ``(new_state, iterations, residual, halvings)``.  Components
    below ``-newton_tol`` raise ``NegativityError``; smaller negative
    round-off is clamped to zero.
    """
    h = icfg.dt if dt is None else dt
    x0 = np.asarray(psi, dtype=float)
    x, it, res, halvings = newton_backward_euler(
        x0, cfg, h, icfg.newton_tol, icfg.newton_max_iter, icfg.max_halvings
    )
    return _clamped(x, icfg.newton_tol), it, res, halvings


def step_rk4(psi, cfg: SystemConfig, dt: float) -> np.ndarray:
    x = np.asarray(psi, dtype=float)
    k1 = rhs(x, cfg)
    k2 = rhs(x + 0.5 * dt * k1, cfg)
    k3 = rhs(x + 0.5 * dt * k2, cfg)
    k4 = rhs(x + dt * k3, cfg)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _clamped(x: np.ndarray, floor: float) -> np.ndarray:
    low = float(x.min())
    if low < -floor:
        raise NegativityError(f"component fell to {low:.3e} (floor {-floor:.1e})")
    return np.maximum(x, 0.0)


def time_grid(dt: float, t_end: float) -> list[float]:
    """Step end times ``k*dt``, with a shortened final step landing on ``t_end``."""
    if t_end == 0:
        return []
    n = round(t_end / dt)
    if n >= 1 and abs(n * dt - t_end) <= 1e-9 * max(1.0, t_end):
        grid = [k * dt for k in range(1, n)]
    else:
        n = math.floor(t_end / dt)
        grid = [k * dt for k in range(1, n + 1) if k * dt < t_end]
    grid.append(float(t_end))
    return grid


def integrate(
    initial,
    cfg: SystemConfig,
    icfg: IntegratorConfig,
    monitors: Sequence[Monitor] = (),
) -> Trajectory:
    """March from ``t = 0`` to ``icfg.t_end``.

    Each monitor is called as ``monitor(t, state, info)`` on the initial
    sample (``info`` is ``None``) and after every accepted step.  Errors from
    a step are re-raised with ``error.time`` set to the step's start time.
    """
    psi = np.array(initial, dtype=float)
    if psi.shape != (cfg.p,):
        raise RangeError(f"initial state has shape {psi.shape}, expected ({cfg.p},)")
    if np.any(psi < 0):
        raise RangeError("initial state must be non-negative")

    traj = Trajectory()
    t = 0.0
    traj.times.append(t)
    traj.states.append(psi)
    for mon in monitors:
        mon(t, psi, None)

    for t_next in time_grid(icfg.dt, icfg.t_end):
        if icfg.steady_tol > 0 and _l1(rhs(psi, cfg)) < icfg.steady_tol:
            traj.stop_reason = f"steady state at t={t:.6g}"
            return traj
        h = t_next - t
        try:
            if icfg.scheme == "implicit_euler":
                psi, it, res, halvings = step_implicit_euler(psi, cfg, icfg, h)
            else:
                psi, it, res, halvings = _clamped(step_rk4(psi, cfg, h), icfg.newton_tol), 0, 0.0, 0
        except BreakageError as exc:
            exc.time = t
            logger.error("step from t=%g failed: %s", t, exc)
            raise
        t = t_next
        info = StepInfo(t, it, res, halvings, number(psi), mass(psi))
        traj.times.append(t)
        traj.states.append(psi)
        traj.diagnostics.append(info)
        for mon in monitors:
            mon(t, psi, info)

    if icfg.steady_tol > 0 and _l1(rhs(psi, cfg)) < icfg.steady_tol:
        traj.stop_reason = f"steady state at t={t:.6g}"
    else:
        traj.stop_reason = "reached t_end"
    return traj


def detect_steady_state(traj: Trajectory, cfg: SystemConfig, tol: float):
    """First sample ``(t, state)`` with ``||rhs||_1 < tol``, or ``None``."""
    if not len(traj):
        raise RangeError("empty trajectory")
    for t, psi in zip(traj.times, traj.states):
        if _l1(rhs(psi, cfg)) < tol:
            return t, psi
    return None

