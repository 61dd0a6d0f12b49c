from __future__ import annotations

import math

import numpy as np
import pytest

from breakage.errors import ConvergenceError, NegativityError, RangeError
from breakage.integrator import (
    IntegratorConfig,
    _clamped,
    detect_steady_state,
    integrate,
    newton_backward_euler,
    step_implicit_euler,
    step_rk4,
    time_grid,
)
from breakage.kinetics import CollisionKernel, FragmentDistribution
from breakage.system import SystemConfig, geometric_state, mass, number, rhs

PAIR = SystemConfig(2, CollisionKernel.constant(1.0), FragmentDistribution.uniform())


def pair_exact(t, psi0):
    """Closed form for p = 2, Gamma = 1: psi_2 solves y' = -y (M - y)."""
    m = psi0[0] + 2 * psi0[1]
    y0 = psi0[1]
    y = m * y0 / (y0 + (m - y0) * math.exp(m * t))
    return np.array([m - 2 * y, y])


def test_time_grid():
    assert time_grid(0.1, 0.0) == []
    g = time_grid(0.1, 0.3)
    assert len(g) == 3 and g[-1] == 0.3
    g = time_grid(0.1, 0.25)
    assert g[-1] == 0.25 and g[-2] == pytest.approx(0.2)


def test_config_validation():
    with pytest.raises(RangeError):
        IntegratorConfig(dt=0)
    with pytest.raises(RangeError):
        IntegratorConfig(t_end=-1)
    with pytest.raises(RangeError):
        IntegratorConfig(scheme="euler")


def test_backward_euler_step_solves_the_implicit_equation():
    cfg = SystemConfig(20, CollisionKernel.product(2.0), FragmentDistribution.exponential())
    psi = geometric_state(20)
    x, it, res, _ = newton_backward_euler(psi, cfg, 0.01, 1e-12, 50)
    assert it >= 1
    assert res <= 1e-12
    assert np.abs(x - psi - 0.01 * rhs(x, cfg)).sum() <= 1e-12
    assert x.min() >= 0


def test_backward_euler_conserves_mass_per_step():
    cfg = SystemConfig(30, CollisionKernel.product(3.0), FragmentDistribution.monomer())
    psi = geometric_state(30)
    icfg = IntegratorConfig(dt=0.01)
    x, *_ = step_implicit_euler(psi, cfg, icfg)
    assert abs(mass(x) - mass(psi)) <= 1e-12 * mass(psi)
    assert number(x) >= number(psi)


@pytest.mark.parametrize("scheme, dt, tol", [("rk4", 1e-3, 1e-11), ("implicit_euler", 1e-3, 2e-3)])
def test_pair_against_closed_form(scheme, dt, tol):
    psi0 = np.array([0.2, 0.9])
    traj = integrate(psi0, PAIR, IntegratorConfig(dt=dt, t_end=1.0, scheme=scheme, steady_tol=0.0))
    err = max(np.abs(s - pair_exact(t, psi0)).sum() for t, s in zip(traj.times, traj.states))
    assert err <= tol


def test_backward_euler_is_first_order_on_the_pair():
    psi0 = np.array([0.2, 0.9])
    errors = []
    for dt in (0.04, 0.02, 0.01, 0.005):
        traj = integrate(psi0, PAIR, IntegratorConfig(dt=dt, t_end=1.0, steady_tol=0.0))
        errors.append(np.abs(traj.final - pair_exact(1.0, psi0)).sum())
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert all(0.9 < q < 1.1 for q in orders), orders


def test_rk4_step_is_fourth_order():
    psi0 = np.array([0.2, 0.9])
    e1 = np.abs(step_rk4(psi0, PAIR, 0.1) - pair_exact(0.1, psi0)).sum()
    e2 = np.abs(step_rk4(psi0, PAIR, 0.05) - pair_exact(0.05, psi0)).sum()
    # local error is fifth order
    assert 4.5 < math.log2(e1 / e2) < 5.5


def test_integrate_stops_at_steady_state_and_calls_monitors():
    cfg = SystemConfig(10, CollisionKernel.product(2.0), FragmentDistribution.uniform())
    calls = []
    traj = integrate(geometric_state(10), cfg, IntegratorConfig(dt=0.01, t_end=50.0, steady_tol=1e-10),
                     monitors=[lambda t, psi, info: calls.append((t, info))])
    assert traj.stop_reason.startswith("steady state")
    assert traj.t[-1] < 50.0
    assert len(calls) == len(traj)
    assert calls[0][1] is None and calls[-1][1].t == traj.times[-1]
    assert len(traj.diagnostics) == len(traj) - 1
    assert traj.psi.shape == (len(traj), 10)
    t_star, state = detect_steady_state(traj, cfg, 1e-10)
    assert t_star == traj.times[-1]
    assert np.array_equal(state, traj.final)


def test_integrate_without_early_stop_reaches_t_end():
    traj = integrate([0.0, 1.0], PAIR, IntegratorConfig(dt=0.1, t_end=0.35, steady_tol=0.0))
    assert traj.stop_reason == "reached t_end"
    assert traj.times[-1] == 0.35
    assert len(traj) == 5


def test_integrate_rejects_bad_initial_state():
    with pytest.raises(RangeError):
        integrate([1.0], PAIR, IntegratorConfig())
    with pytest.raises(RangeError):
        integrate([1.0, -0.1], PAIR, IntegratorConfig())


def test_newton_failure_carries_time():
    cfg = SystemConfig(10, CollisionKernel.product(2.0), FragmentDistribution.uniform())
    icfg = IntegratorConfig(dt=0.01, t_end=1.0, newton_tol=1e-30, newton_max_iter=3)
    with pytest.raises(ConvergenceError) as info:
        integrate(geometric_state(10), cfg, icfg)
    assert info.value.time == 0.0


def test_clamping():
    np.testing.assert_array_equal(_clamped(np.array([1.0, -1e-15]), 1e-12), [1.0, 0.0])
    with pytest.raises(NegativityError):
        _clamped(np.array([1.0, -1e-6]), 1e-12)


def test_stiff_kernel_stays_in_the_orthant():
    # Gamma = (ij)^4 has a spurious Newton root with a negative component
    cfg = SystemConfig(40, CollisionKernel.product(4.0), FragmentDistribution.uniform())
    traj = integrate(geometric_state(40), cfg, IntegratorConfig(dt=0.01, t_end=0.2, steady_tol=0.0))
    assert min(s.min() for s in traj.states) >= 0
    assert abs(mass(traj.final) - mass(traj.initial)) <= 1e-10 * mass(traj.initial)


def test_detect_steady_state_empty():
    from breakage.integrator import Trajectory

    with pytest.raises(RangeError):
        detect_steady_state(Trajectory(), PAIR, 1e-10)
