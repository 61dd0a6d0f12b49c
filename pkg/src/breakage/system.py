"""Truncated collisional breakage system.

For sizes ``i = 1..p`` the vector field is::

    dpsi_i/dt = sum_{j=i+1}^{p} sum_{k=1}^{p} Gamma[j,k] phi(i,j,k) psi_j psi_k
                - [i > 1] sum_{j=1}^{p} Gamma[i,j] psi_i psi_j

Every reduction runs in a fixed serial order (ascending ``j``, then ascending
``k``) so that repeated evaluations are bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from .errors import RangeError, ValidationError
from .kinetics import (
    CollisionKernel,
    FragmentDistribution,
    WeightFunction,
    WeightSequence,
    validate_kernel,
    validate_lmc1,
)


@dataclass(frozen=True)
class SystemConfig:
    """Truncation size plus kinetic coefficients.

    The kernel and distribution are certified on ``1..p`` at construction
    (symmetry, non-negativity and local mass conservation to 1e-12) unless
    ``validate`` is false.  ``compensated`` switches the reductions to
    Neumaier summation, which is worth it for ``p`` in the thousands.
    """

    p: int
    kernel: CollisionKernel
    phi: FragmentDistribution
    compensated: bool = False
    validate: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        if self.p < 2:
            raise RangeError(f"truncation size must be >= 2, got {self.p}")
        if self.validate:
            kr = validate_kernel(self.kernel, None, self.p)
            if not kr.certified:
                raise ValidationError(f"kernel rejected: {kr.summary()}", kr)
            lr = validate_lmc1(self.phi, self.p, self.p, exact=False)
            if not lr.certified:
                raise ValidationError(f"fragment distribution rejected: {lr.summary()}", lr)

    @cached_property
    def gamma(self) -> np.ndarray:
        g = np.ascontiguousarray(self.kernel.matrix(self.p), dtype=float)
        g.setflags(write=False)
        return g

    @cached_property
    def phi_array(self) -> np.ndarray:
        return np.ascontiguousarray(self.phi.array(self.p))

    def describe(self) -> str:
        return f"p={self.p}, Gamma={self.kernel.describe()}, phi={self.phi.describe()}"


def as_state(psi, p: int | None = None) -> np.ndarray:
    """Validated float copy of a state: finite, non-negative, of length ``p``."""
    x = np.array(psi, dtype=float)
    if x.ndim != 1:
        raise RangeError("state must be one-dimensional")
    if p is not None and x.size != p:
        raise RangeError(f"state has length {x.size}, expected {p}")
    if not np.all(np.isfinite(x)):
        raise RangeError("state has non-finite entries")
    if np.any(x < 0):
        raise RangeError(f"state has negative entries (min {x.min():g})")
    return x


def geometric_state(p: int, ratio: float = 0.5) -> np.ndarray:
    """``psi_i = ratio**i`` for ``i = 1..p``."""
    return ratio ** np.arange(1, p + 1, dtype=float)


def monomer_state(p: int, mass: float = 1.0) -> np.ndarray:
    x = np.zeros(p)
    x[0] = mass
    return x


def _checked(psi, cfg: SystemConfig) -> np.ndarray:
    x = np.ascontiguousarray(psi, dtype=float)
    if x.shape != (cfg.p,):
        raise RangeError(f"state has shape {x.shape}, expected ({cfg.p},)")
    return x


# ---------------------------------------------------------------------------
# compiled kernels


@numba.njit(cache=True, nogil=True)
def _reaction_kernel(psi, gamma, phi, compensated, gain, loss):
    p = psi.shape[0]
    kdep = phi.shape[2] > 1
    for i in range(p):
        s = 0.0
        c = 0.0
        for j in range(i + 1, p):
            for k in range(p):
                f = phi[i, j, k] if kdep else phi[i, j, 0]
                term = gamma[j, k] * f * psi[j] * psi[k]
                if compensated:
                    t = s + term
                    if abs(s) >= abs(term):
                        c += (s - t) + term
                    else:
                        c += (term - t) + s
                    s = t
                else:
                    s += term
        gain[i] = s + c
        s = 0.0
        c = 0.0
        if i > 0:
            for j in range(p):
                term = gamma[i, j] * psi[i] * psi[j]
                if compensated:
                    t = s + term
                    if abs(s) >= abs(term):
                        c += (s - t) + term
                    else:
                        c += (term - t) + s
                    s = t
                else:
                    s += term
        loss[i] = s + c


@numba.njit(cache=True, nogil=True)
def _jacobian_kernel(psi, gamma, phi, out):
    p = psi.shape[0]
    kdep = phi.shape[2] > 1
    for i in range(p):
        total_rate = 0.0
        if i > 0:
            for j in range(p):
                total_rate += gamma[i, j] * psi[j]
        for l in range(p):
            a = 0.0
            # d/dpsi_l of the gain through the colliding partner k = l
            for j in range(i + 1, p):
                f = phi[i, j, l] if kdep else phi[i, j, 0]
                a += f * gamma[j, l] * psi[j]
            # ... and through the breaking cluster j = l
            if l > i:
                for k in range(p):
                    f = phi[i, l, k] if kdep else phi[i, l, 0]
                    a += f * gamma[l, k] * psi[k]
            if i > 0:
                a -= gamma[i, l] * psi[i]
                if l == i:
                    a -= total_rate
            out[i, l] = a


# ---------------------------------------------------------------------------
# public operations


def reaction_terms(psi, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Gain and loss rates per size; the vector field is ``gain - loss``."""
    x = _checked(psi, cfg)
    gain = np.empty(cfg.p)
    loss = np.empty(cfg.p)
    _reaction_kernel(x, cfg.gamma, cfg.phi_array, cfg.compensated, gain, loss)
    return gain, loss


def rhs(psi, cfg: SystemConfig) -> np.ndarray:
    """Time derivative of the truncated system at ``psi``."""
    gain, loss = reaction_terms(psi, cfg)
    return gain - loss


def jacobian(psi, cfg: SystemConfig) -> np.ndarray:
    """Analytical Jacobian ``J[i, l] = d rhs_i / d psi_l``."""
    x = _checked(psi, cfg)
    out = np.empty((cfg.p, cfg.p))
    _jacobian_kernel(x, cfg.gamma, cfg.phi_array, out)
    return out


def weak_form_dissipation(psi, upsilon, cfg: SystemConfig) -> float:
    """``sum_{j>=2} sum_k (u_j - sum_{i<j} u_i phi(i,j,k)) Gamma[j,k] psi_j psi_k``.

    Along the flow this equals ``-d/dt sum_i u_i psi_i``; it is non-negative
    whenever ``u`` is non-negative with ``u_i / i`` non-decreasing.
    """
    x = _checked(psi, cfg)
    u = np.asarray(upsilon, dtype=float)
    if u.shape != (cfg.p,):
        raise RangeError(f"weight vector has shape {u.shape}, expected ({cfg.p},)")
    phi = cfg.phi_array
    # redistributed[j, k] = sum_{i<j} u_i phi(i, j, k); phi vanishes for i >= j
    redistributed = np.einsum("i,ijk->jk", u, phi)
    bracket = u[:, None] - redistributed
    bracket[0, :] = 0.0
    flux = cfg.gamma * np.outer(x, x)
    if phi.shape[2] == 1:
        bracket = np.broadcast_to(bracket, flux.shape)
    return float(np.sum(bracket * flux))


def weak_form_residual(psi, deriv, upsilon, cfg: SystemConfig) -> float:
    """``sum_i u_i deriv_i + weak_form_dissipation``; vanishes when ``deriv = rhs(psi)``."""
    u = np.asarray(upsilon, dtype=float)
    d = np.asarray(deriv, dtype=float)
    if d.shape != (cfg.p,):
        raise RangeError(f"derivative has shape {d.shape}, expected ({cfg.p},)")
    return float(u @ d) + weak_form_dissipation(psi, u, cfg)


# ---------------------------------------------------------------------------
# moments


def ordered_sum(x) -> float:
    """Serial left-to-right sum (``cumsum`` accumulates strictly in index order)."""
    x = np.asarray(x, dtype=float)
    return float(np.cumsum(x)[-1]) if x.size else 0.0


@dataclass(frozen=True)
class MomentReport:
    """Moments of one state.  ``tails[r]`` is ``sum_{i>=r} Lambda_i psi_i``."""

    m0: float
    m1: float
    g0_moment: float
    lambda_moment: float
    lambda_sq_moment: float
    tails: dict[int, float]


def tail_sum(psi, weights, r: int) -> float:
    if r < 1:
        raise RangeError(f"tail index must be >= 1, got {r}")
    w = np.asarray(weights, dtype=float)
    x = np.asarray(psi, dtype=float)
    return ordered_sum((w * x)[r - 1 :])


def moments(
    psi,
    g: WeightFunction,
    lam: WeightSequence,
    tails=(),
) -> MomentReport:
    x = np.asarray(psi, dtype=float)
    p = x.size
    sizes = np.arange(1, p + 1, dtype=float)
    w = lam.array(p)
    return MomentReport(
        m0=ordered_sum(x),
        m1=ordered_sum(sizes * x),
        g0_moment=ordered_sum(g.g0(sizes) * x),
        lambda_moment=ordered_sum(w * x),
        lambda_sq_moment=ordered_sum(w * w * x),
        tails={int(r): tail_sum(x, w, r) for r in tails},
    )


def mass(psi) -> float:
    x = np.asarray(psi, dtype=float)
    return ordered_sum(np.arange(1, x.size + 1) * x)


def number(psi) -> float:
    return ordered_sum(psi)
