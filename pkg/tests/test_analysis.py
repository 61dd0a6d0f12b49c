from __future__ import annotations

import numpy as np
import pytest

from breakage.analysis import (
    DistanceSeries,
    check_g0_moment_bound,
    check_reaction_bounds,
    check_tail_monotonicity,
    compute_bounds,
    g0_moment,
    gronwall_experiment,
    longtime_report,
    reaction_integrals,
)
from breakage.errors import PreconditionError, RangeError
from breakage.integrator import IntegratorConfig, Trajectory, integrate
from breakage.kinetics import CollisionKernel, FragmentDistribution, WeightFunction, WeightSequence
from breakage.monitors import G0MomentBound, MassDrift, NumberGrowth, TailMonotonicity, replay
from breakage.system import SystemConfig, geometric_state, monomer_state


@pytest.fixture(scope="module")
def fig5_uniform():
    cfg = SystemConfig(40, CollisionKernel.product(2.0), FragmentDistribution.uniform())
    traj = integrate(geometric_state(40), cfg, IntegratorConfig(dt=0.01, t_end=50.0))
    return cfg, traj


def test_bounds_closed_forms_for_quadratic_weight():
    psi = geometric_state(10)
    b = compute_bounds(psi, WeightFunction.power(2.0), 1.5, 4, 6)
    j0 = float(np.sum(np.arange(1, 11) ** 2 * psi))
    assert b.j0 == pytest.approx(j0, rel=1e-15)
    # G1(z) = z: C_i = J0 / i, eps_m = J0 / m, omega_m(i) = alpha1 J0 / (m + 1 - i)
    for i in range(1, 5):
        assert b.C(i) == pytest.approx(j0 / i, rel=1e-14)
    for m in range(1, 7):
        assert b.epsilon(m) == pytest.approx(j0 / m, rel=1e-14)
        for i in range(1, min(m, 4) + 1):
            assert b.omega_at(m, i) == pytest.approx(1.5 * j0 / (m + 1 - i), rel=1e-14)
    assert np.isnan(b.omega[3, 1])
    with pytest.raises(RangeError):
        b.omega_at(2, 3)


def test_bounds_log_weight_decrease():
    b = compute_bounds(geometric_state(20), WeightFunction.log_power(2.0), 1.0, 10, 20)
    assert np.all(np.diff(b.eps) < 0)
    assert np.all(np.diff(b.c) < 0)


def test_bounds_argument_checks():
    with pytest.raises(RangeError):
        compute_bounds(geometric_state(5), WeightFunction.power(2.0), 1.0, 6, 5)
    with pytest.raises(RangeError):
        compute_bounds(geometric_state(5), WeightFunction.power(2.0), -1.0, 2, 5)


def test_estimates_hold_along_the_flow(fig5_uniform):
    cfg, traj = fig5_uniform
    g = WeightFunction.power(2.0)
    assert check_g0_moment_bound(traj, g).certified
    for lam in (WeightSequence.power(1.0), WeightSequence.power(2.0)):
        rep = check_tail_monotonicity(traj, lam, (1, 2, 5, 10), cfg=cfg)
        assert rep.certified, rep.summary()
    rep = check_reaction_bounds(traj, cfg, g)
    assert rep.certified, rep.summary()
    assert rep.details["species"][2]["abs_rate"] <= 2 * rep.details["species"][2]["C_i"]


def test_reaction_integrals_balance():
    cfg = SystemConfig(2, CollisionKernel.constant(1.0), FragmentDistribution.uniform())
    traj = integrate([0.2, 0.9], cfg, IntegratorConfig(dt=1e-3, t_end=1.0, steady_tol=0.0))
    ints = reaction_integrals(traj, cfg)
    # gain - loss integrates dpsi/dt, up to first-order time stepping and quadrature error
    np.testing.assert_allclose(ints["gain"] - ints["loss"], traj.final - traj.initial, atol=2e-3)
    assert np.all(ints["abs_rate"] >= np.abs(ints["gain"] - ints["loss"]) - 1e-15)
    assert ints["loss"][0] == 0.0


def test_tail_check_catches_growth():
    traj = Trajectory(times=[0.0, 1.0], states=[np.array([1.0, 0.0]), np.array([0.0, 0.5])])
    rep = check_tail_monotonicity(traj, WeightSequence.power(2.0), (1, 2))
    assert not rep.certified
    assert rep.counterexample == ("t", 1.0)


def test_monitors_report_failures():
    times = [0.0, 1.0, 2.0]
    states = [np.array([1.0, 1.0]), np.array([3.0, 0.0]), np.array([2.5, 0.25])]
    drift = replay(MassDrift(1e-8), times, states)
    assert drift.passed and drift.max_drift == 0.0
    growth = replay(NumberGrowth(), times, states)
    assert not growth.passed and growth.first_failure == 2.0
    assert growth.summary().startswith("FAIL")
    g0 = replay(G0MomentBound(WeightFunction.power(2.0)), times, states)
    assert g0.passed
    tails = replay(TailMonotonicity(WeightSequence.power(1.0), (1, 2, 7)), times, states)
    assert tails.passed and tails.samples == 3


def test_gronwall_contraction():
    lam = WeightSequence.power(1.0)
    cfg = SystemConfig(10, CollisionKernel.constant(1.0).with_certificate(lam), FragmentDistribution.uniform())
    a = geometric_state(10)
    b = a.copy()
    b[1] += 1e-6
    series = gronwall_experiment(a, b, cfg, IntegratorConfig(dt=0.01, t_end=2.0))
    assert series.holds(1e-6)
    assert series.times[-1] == 2.0
    assert series.d[0] == pytest.approx(2e-6)
    assert 0 < series.worst_ratio() <= 1.0 + 1e-6


def test_gronwall_needs_a_valid_certificate():
    cfg = SystemConfig(10, CollisionKernel.constant(1.0), FragmentDistribution.uniform())
    with pytest.raises(PreconditionError):
        gronwall_experiment(geometric_state(10), geometric_state(10), cfg, IntegratorConfig())
    weak = SystemConfig(10, CollisionKernel.constant(2.0).with_certificate(WeightSequence.power(1.0)),
                        FragmentDistribution.uniform())
    with pytest.raises(PreconditionError):
        gronwall_experiment(geometric_state(10), geometric_state(10), weak, IntegratorConfig())


def test_distance_series_ratio():
    s = DistanceSeries(np.array([0.0, 1.0]), np.array([0.0, 0.0]), np.array([0.0, 0.0]), 1.0, 0.0)
    assert s.worst_ratio() == 0.0 and s.holds()
    s = DistanceSeries(np.array([0.0, 1.0]), np.array([1.0, 3.0]), np.array([1.0, 2.0]), 1.0, 0.0)
    assert s.worst_ratio() == 1.5 and not s.holds()


def test_longtime_limit(fig5_uniform):
    cfg, traj = fig5_uniform
    rep = longtime_report(traj, cfg)
    assert rep.max_tail < 1e-10
    assert rep.monomer_gap < 1e-9
    assert rep.count_gap < 1e-9
    assert rep.tail_decay_rate is not None and rep.tail_decay_rate > 0


def test_longtime_needs_self_collisions():
    g = np.ones((4, 4))
    g[2, 2] = 0.0
    cfg = SystemConfig(4, CollisionKernel.from_table(g), FragmentDistribution.uniform())
    traj = integrate(monomer_state(4), cfg, IntegratorConfig(t_end=0.1))
    with pytest.raises(PreconditionError):
        longtime_report(traj, cfg)


def test_g0_moment_helper():
    assert g0_moment([1.0, 1.0], WeightFunction.power(2.0)) == 5.0
