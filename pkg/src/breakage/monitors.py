"""Streaming invariant monitors invoked by :func:`breakage.integrator.integrate`.

A monitor is any callable ``monitor(t, psi, info)``.  The classes here record
the worst margin seen and a pass/fail verdict, so the same object serves as
a live hook during a run and as a post-processor over a stored trajectory.
"""

from __future__ import annotations

import math

import numpy as np

from .kinetics import WeightFunction, WeightSequence
from .system import mass, number, ordered_sum, tail_sum


class InvariantMonitor:
    name = "invariant"

    def __init__(self) -> None:
        self.passed = True
        self.worst_margin = math.inf
        self.first_failure: float | None = None
        self.samples = 0

    def _record(self, t: float, margin: float) -> None:
        self.samples += 1
        self.worst_margin = min(self.worst_margin, margin)
        if margin < 0 and self.passed:
            self.passed = False
            self.first_failure = t

    def __call__(self, t, psi, info=None) -> None:  # pragma: no cover - abstract
        raise NotImplementedError

    def summary(self) -> str:
        verdict = "PASS" if self.passed else f"FAIL (first at t={self.first_failure:.6g})"
        return f"{verdict} {self.name}: worst margin {self.worst_margin:.6g} over {self.samples} samples"


class MassDrift(InvariantMonitor):
    """Relative deviation of ``sum i psi_i`` from its initial value stays below ``rtol``."""

    name = "mass-drift"

    def __init__(self, rtol: float = 1e-8) -> None:
        super().__init__()
        self.rtol = rtol
        self.reference: float | None = None
        self.max_drift = 0.0

    def __call__(self, t, psi, info=None) -> None:
        m1 = mass(psi)
        if self.reference is None:
            self.reference = m1
        drift = abs(m1 - self.reference) / max(abs(self.reference), 1e-300)
        self.max_drift = max(self.max_drift, drift)
        self._record(t, self.rtol - drift)


class NumberGrowth(InvariantMonitor):
    """``sum psi_i`` never decreases by more than ``slack`` between samples."""

    name = "number-growth"

    def __init__(self, slack: float = 0.0) -> None:
        super().__init__()
        self.slack = slack
        self.previous: float | None = None

    def __call__(self, t, psi, info=None) -> None:
        m0 = number(psi)
        if self.previous is not None:
            self._record(t, m0 - self.previous + self.slack)
        else:
            self.samples += 1
        self.previous = m0


class TailMonotonicity(InvariantMonitor):
    """``sum_{i>=r} Lambda_i psi_i(t) <= sum_{i>=r} Lambda_i psi_i(0) + slack`` for each ``r``."""

    name = "tail-monotonicity"

    def __init__(self, lam: WeightSequence, rs, slack: float = 0.0) -> None:
        super().__init__()
        self.lam = lam
        self.rs = tuple(int(r) for r in rs)
        self.slack = slack
        self.initial: dict[int, float] | None = None
        self._w = None

    def __call__(self, t, psi, info=None) -> None:
        if self._w is None:
            self._w = self.lam.array(len(psi))
        rs = [r for r in self.rs if r <= len(psi)]
        tails = {r: tail_sum(psi, self._w, r) for r in rs}
        if self.initial is None:
            self.initial = tails
        margin = min((self.initial[r] + self.slack - tails[r] for r in rs), default=math.inf)
        self._record(t, margin)


class G0MomentBound(InvariantMonitor):
    """``sum G0(i) psi_i(t)`` stays below its initial value plus ``slack``."""

    name = "g0-moment-bound"

    def __init__(self, g: WeightFunction, slack: float = 0.0) -> None:
        super().__init__()
        self.g = g
        self.slack = slack
        self.j0: float | None = None
        self._w = None

    def __call__(self, t, psi, info=None) -> None:
        if self._w is None:
            self._w = self.g.g0(np.arange(1, len(psi) + 1, dtype=float))
        value = ordered_sum(self._w * np.asarray(psi))
        if self.j0 is None:
            self.j0 = value
        self._record(t, self.j0 + self.slack - value)


def replay(monitor: InvariantMonitor, times, states) -> InvariantMonitor:
    """Feed stored samples through ``monitor`` and return it."""
    for t, psi in zip(times, states):
        monitor(t, psi, None)
    return monitor
