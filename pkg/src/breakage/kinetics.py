"""Kinetic coefficients of the collisional breakage model and their validators.

Three ingredients drive the dynamics:

``CollisionKernel``
    Symmetric non-negative collision rates ``Gamma[i, j]``, optionally
    carrying a weight sequence ``Lambda`` with ``Gamma[i, j] <= Lambda_i Lambda_j``.
``FragmentDistribution``
    Daughter distribution ``phi(i, j, k)``: number of ``i``-clusters produced
    when a ``j``-cluster shatters on a ``k``-cluster (the ``k``-cluster survives).
``WeightFunction``
    Superlinear weight ``G0`` used for the a priori moment estimates.

All sizes are 1-based, as in the model; arrays returned by ``matrix``/``array``
are 0-based with ``a[i - 1, j - 1]`` holding the entry for sizes ``(i, j)``.
Catalog fragment distributions are rational whenever their parameter is an
integer, and the validators then work in exact ``Fraction`` arithmetic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ModeError, RangeError

TABLE_SIZE_CAP = 256

Number = Fraction | float


@dataclass
class ValidationReport:
    """Outcome of a certification check.

    ``counterexample`` holds the first offending index tuple when
    ``certified`` is false.  ``worst_margin`` is the smallest slack observed
    (negative when violated).
    """

    check: str
    certified: bool
    checked: int = 0
    counterexample: tuple | None = None
    worst_margin: float | None = None
    details: dict = field(default_factory=dict)

    def summary(self) -> str:
        status = "certified" if self.certified else f"violated at {self.counterexample}"
        line = f"{self.check}: {status} ({self.checked} cases"
        if self.worst_margin is not None:
            line += f", worst margin {self.worst_margin:.6g}"
        return line + ")"


def _is_integer(x: float) -> bool:
    return float(x).is_integer()


# ---------------------------------------------------------------------------
# weight sequences


@dataclass(frozen=True)
class WeightSequence:
    """Positive weights ``Lambda_i``.

    Either a power rule ``scale * i**exponent`` (defined for every ``i``) or an
    explicit finite list of values.
    """

    exponent: float | None = 1.0
    scale: float = 1.0
    values: tuple[float, ...] | None = None

    @classmethod
    def power(cls, exponent: float, scale: float = 1.0) -> "WeightSequence":
        return cls(exponent=float(exponent), scale=float(scale))

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "WeightSequence":
        return cls(exponent=None, values=tuple(float(v) for v in values))

    @property
    def first_at_least_one(self) -> bool:
        return self.value(1) >= 1.0

    def value(self, i: int) -> float:
        if i < 1:
            raise RangeError(f"weight index must be >= 1, got {i}")
        if self.values is not None:
            if i > len(self.values):
                raise RangeError(f"weight sequence has only {len(self.values)} entries")
            return self.values[i - 1]
        return self.scale * float(i) ** self.exponent

    def array(self, p: int) -> np.ndarray:
        if self.values is not None:
            if p > len(self.values):
                raise RangeError(f"weight sequence has only {len(self.values)} entries, need {p}")
            return np.array(self.values[:p], dtype=float)
        return self.scale * np.arange(1, p + 1, dtype=float) ** self.exponent

    def describe(self) -> str:
        if self.values is not None:
            return f"values[{len(self.values)}]"
        if self.scale != 1.0:
            return f"{self.scale:g}*i^{self.exponent:g}"
        return f"i^{self.exponent:g}"


def validate_weight_sequence(lam: WeightSequence, p: int, rtol: float = 1e-12) -> ValidationReport:
    """Check ``Lambda_i >= 0``, ``Lambda_i/i`` and ``Lambda_i**2/i`` non-decreasing on ``1..p``."""
    if p < 1:
        raise RangeError("p must be >= 1")
    w = lam.array(p)
    sizes = np.arange(1, p + 1, dtype=float)
    report = ValidationReport("weight-sequence", True, checked=p)
    neg = np.flatnonzero(w < 0)
    if neg.size:
        report.certified = False
        report.counterexample = ("negative", int(neg[0]) + 1)
        return report
    for label, seq in (("ratio", w / sizes), ("square-ratio", w * w / sizes)):
        drop = seq[:-1] - seq[1:]
        bad = np.flatnonzero(drop > rtol * np.abs(seq[:-1]))
        if bad.size:
            report.certified = False
            report.counterexample = (label, int(bad[0]) + 1)
            return report
    report.details["first_at_least_one"] = bool(w[0] >= 1.0)
    return report


# ---------------------------------------------------------------------------
# collision kernels

KERNEL_FAMILIES = ("constant", "product", "lambda", "table")


@dataclass(frozen=True)
class CollisionKernel:
    """Collision rate rule ``Gamma[i, j]``.

    Families: ``constant`` (``param`` = c), ``product`` (``(ij)**param``),
    ``lambda`` (``Lambda_i Lambda_j`` for ``source``) and ``table``.
    ``certificate`` is an optional sequence claimed to dominate the kernel.
    """

    family: str
    param: float = 1.0
    source: WeightSequence | None = None
    table: np.ndarray | None = field(default=None, compare=False, repr=False)
    certificate: WeightSequence | None = None

    def __post_init__(self) -> None:
        if self.family not in KERNEL_FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.family == "lambda" and self.source is None:
            raise ConfigError("lambda kernel needs a weight sequence")
        if self.family == "table":
            if self.table is None or self.table.ndim != 2 or self.table.shape[0] != self.table.shape[1]:
                raise ConfigError("table kernel needs a square matrix")
            if self.table.shape[0] > TABLE_SIZE_CAP:
                raise RangeError(f"table kernels are capped at p <= {TABLE_SIZE_CAP}")

    @classmethod
    def constant(cls, c: float = 1.0) -> "CollisionKernel":
        if c < 0:
            raise DomainError("constant kernel must be non-negative")
        return cls("constant", float(c))

    @classmethod
    def product(cls, alpha: float) -> "CollisionKernel":
        return cls("product", float(alpha))

    @classmethod
    def lambda_bounded(cls, lam: WeightSequence) -> "CollisionKernel":
        return cls("lambda", source=lam, certificate=lam)

    @classmethod
    def from_table(cls, matrix) -> "CollisionKernel":
        m = np.array(matrix, dtype=float)
        m.setflags(write=False)
        return cls("table", table=m)

    def with_certificate(self, lam: WeightSequence | None) -> "CollisionKernel":
        return replace(self, certificate=lam)

    @property
    def size(self) -> int | None:
        return None if self.table is None else self.table.shape[0]

    def value(self, i: int, j: int) -> float:
        if i < 1 or j < 1:
            raise RangeError(f"kernel indices must be >= 1, got ({i}, {j})")
        if self.family == "constant":
            return self.param
        if self.family == "product":
            return float(i * j) ** self.param
        if self.family == "lambda":
            return self.source.value(i) * self.source.value(j)
        if i > self.size or j > self.size:
            raise RangeError(f"table kernel has size {self.size}")
        return float(self.table[i - 1, j - 1])

    def matrix(self, p: int) -> np.ndarray:
        if p < 1:
            raise RangeError("p must be >= 1")
        if self.family == "constant":
            return np.full((p, p), self.param)
        if self.family == "product":
            sizes = np.arange(1, p + 1, dtype=float)
            return np.outer(sizes, sizes) ** self.param
        if self.family == "lambda":
            w = self.source.array(p)
            return np.outer(w, w)
        if p > self.size:
            raise RangeError(f"table kernel has size {self.size}, need {p}")
        return np.array(self.table[:p, :p])

    def describe(self) -> str:
        if self.family == "constant":
            return f"constant({self.param:g})"
        if self.family == "product":
            return f"(ij)^{self.param:g}"
        if self.family == "lambda":
            return f"lambda({self.source.describe()})"
        return f"table[{self.size}]"


def validate_kernel(
    kernel: CollisionKernel,
    lam: WeightSequence | None,
    p: int,
    rtol: float = 1e-12,
) -> ValidationReport:
    """Certify symmetry and non-negativity on ``1..p``, and the ``Lambda`` bound if given.

    Counterexamples are the lexicographically smallest offending ``(i, j)``.
    The domination bound tolerates a relative rounding slack ``rtol`` since
    e.g. ``(ij)**0.5`` and ``i**0.5 * j**0.5`` differ in the last bit.
    """
    if p < 2:
        raise RangeError("kernel validation needs p >= 2")
    g = kernel.matrix(p)
    report = ValidationReport("kernel", True, checked=p * p)

    neg = np.argwhere(g < 0)
    if neg.size:
        report.certified = False
        report.counterexample = ("negative",) + tuple(int(x) + 1 for x in neg[0])
        return report
    asym = np.argwhere(g != g.T)
    if asym.size:
        i, j = sorted(int(x) + 1 for x in asym[0])
        report.certified = False
        report.counterexample = ("asymmetric", i, j)
        return report

    if lam is not None:
        w = lam.array(p)
        bound = np.outer(w, w)
        margin = bound * (1.0 + rtol) - g
        report.worst_margin = float(margin.min())
        bad = np.argwhere(margin < 0)
        if bad.size:
            report.certified = False
            report.counterexample = ("lambda-bound",) + tuple(int(x) + 1 for x in bad[0])
            return report
        seq = validate_weight_sequence(lam, p)
        report.details["lambda_sequence_admissible"] = seq.certified
        report.details["lambda_first_at_least_one"] = bool(w[0] >= 1.0)
    return report


def load_kernel_table(path: str | Path) -> CollisionKernel:
    """Read ``i j value`` lines into a table kernel (missing entries are zero)."""
    entries = _read_table(path, ncols=3)
    size = max(max(key) for key in entries) if entries else 0
    if size > TABLE_SIZE_CAP:
        raise RangeError(f"table kernels are capped at p <= {TABLE_SIZE_CAP}")
    m = np.zeros((size, size))
    for (i, j), v in entries.items():
        m[i - 1, j - 1] = float(v)
    return CollisionKernel.from_table(m)


# ---------------------------------------------------------------------------
# fragment distributions

PHI_FAMILIES = ("uniform", "power_law", "monomer", "exponential", "table")


def xi(z: int) -> Fraction:
    """Exact value of ``z 2**(z-1) / (2**z - z - 1)`` for integers ``z >= 2``."""
    if isinstance(z, bool) or not isinstance(z, (int, np.integer)):
        raise DomainError(f"xi is defined on integers, got {z!r}")
    z = int(z)
    if z < 2:
        raise DomainError(f"xi needs z >= 2, got {z}")
    return Fraction(z * 2 ** (z - 1), 2**z - z - 1)


@lru_cache(maxsize=None)
def _exact_power_norm(nu: int, j: int) -> Fraction:
    # sum_{l=1}^{j-1} l**(1+nu)
    if j <= 1:
        return Fraction(0)
    return _exact_power_norm(nu, j - 1) + Fraction(j - 1) ** (1 + nu)


def _exact_power_norm_iter(nu: int, j: int) -> Fraction:
    # fill the cache bottom-up so the recursion never goes deep
    for jj in range(2, j + 1, 64):
        _exact_power_norm(nu, jj)
    return _exact_power_norm(nu, j)


@lru_cache(maxsize=None)
def _float_power_norm(nu: float, j: int) -> float:
    return math.fsum(float(l) ** (1.0 + nu) for l in range(1, j))


@dataclass(frozen=True)
class FragmentDistribution:
    """Daughter distribution rule ``phi(i, j, k)`` for ``1 <= i <= j - 1``.

    Catalog families ignore ``k``.  A ``table`` rule stores explicit entries
    keyed by ``(i, j, k)``; ``k == 0`` in a key stands for every ``k``.
    """

    family: str
    nu: float = 0.0
    entries: Mapping[tuple[int, int, int], Number] | None = field(default=None, compare=False, repr=False)
    size: int | None = None

    def __post_init__(self) -> None:
        if self.family not in PHI_FAMILIES:
            raise ConfigError(f"unknown fragment distribution {self.family!r}")
        if self.family == "table":
            if self.entries is None or self.size is None:
                raise ConfigError("table distribution needs entries and a size")
            if self.size > TABLE_SIZE_CAP:
                raise RangeError(f"table distributions are capped at p <= {TABLE_SIZE_CAP}")
            for (i, j, k), v in self.entries.items():
                if not (1 <= i < j <= self.size and 0 <= k <= self.size):
                    raise RangeError(f"table entry ({i}, {j}, {k}) out of range")
                if v < 0:
                    raise DomainError(f"negative table entry at ({i}, {j}, {k})")

    # constructors -------------------------------------------------------
    @classmethod
    def uniform(cls) -> "FragmentDistribution":
        return cls("uniform")

    @classmethod
    def power_law(cls, nu: float) -> "FragmentDistribution":
        return cls("power_law", float(nu))

    @classmethod
    def monomer(cls) -> "FragmentDistribution":
        return cls("monomer")

    @classmethod
    def exponential(cls) -> "FragmentDistribution":
        return cls("exponential")

    @classmethod
    def from_table(cls, entries: Mapping[tuple[int, int, int], Number], size: int) -> "FragmentDistribution":
        return cls("table", entries=dict(entries), size=int(size))

    # properties ---------------------------------------------------------
    @property
    def k_independent(self) -> bool:
        if self.family != "table":
            return True
        return all(k == 0 for (_, _, k) in self.entries)

    @property
    def is_rational(self) -> bool:
        if self.family == "power_law":
            return _is_integer(self.nu)
        if self.family == "table":
            return all(isinstance(v, (int, Fraction)) for v in self.entries.values())
        return True

    def describe(self) -> str:
        if self.family == "power_law":
            return f"power_law({self.nu:g})"
        if self.family == "table":
            return f"table[{self.size}]"
        return self.family

    def _check(self, i: int, j: int, k: int) -> None:
        if not (1 <= i <= j - 1) or k < 1:
            raise RangeError(f"phi index ({i}, {j}, {k}) outside 1 <= i <= j-1, k >= 1")
        if self.family == "table" and (j > self.size or k > self.size):
            raise RangeError(f"table distribution has size {self.size}")

    # evaluation ---------------------------------------------------------
    def exact(self, i: int, j: int, k: int = 1) -> Fraction:
        """Entry as an exact rational; raises ``ModeError`` for irrational rules."""
        self._check(i, j, k)
        if not self.is_rational:
            raise ModeError(f"{self.describe()} has irrational entries")
        if self.family == "uniform":
            return Fraction(2, j - 1)
        if self.family == "monomer":
            return Fraction(j) if i == 1 else Fraction(0)
        if self.family == "exponential":
            return xi(j) / 2**i
        if self.family == "power_law":
            nu = int(self.nu)
            return Fraction(i) ** nu * j / _exact_power_norm_iter(nu, j)
        return Fraction(self._table_entry(i, j, k))

    def value(self, i: int, j: int, k: int = 1) -> float:
        self._check(i, j, k)
        if self.family == "power_law" and not self.is_rational:
            return float(i) ** self.nu * j / _float_power_norm(self.nu, j)
        if self.family == "table":
            return float(self._table_entry(i, j, k))
        return float(self.exact(i, j, k))

    def _table_entry(self, i: int, j: int, k: int) -> Number:
        v = self.entries.get((i, j, k))
        if v is None:
            v = self.entries.get((i, j, 0), 0)
        return v

    def array(self, p: int) -> np.ndarray:
        """Dense read-only array ``a[i-1, j-1, k-1]``, last axis of length 1 when k-independent."""
        if p < 1:
            raise RangeError("p must be >= 1")
        if self.family == "table":
            if p > self.size:
                raise RangeError(f"table distribution has size {self.size}, need {p}")
            return _table_array(self, p)
        return _catalog_array(self.family, self.nu, p)


@lru_cache(maxsize=64)
def _catalog_array(family: str, nu: float, p: int) -> np.ndarray:
    rule = FragmentDistribution(family, nu)
    a = np.zeros((p, p, 1))
    for j in range(2, p + 1):
        for i in range(1, j):
            a[i - 1, j - 1, 0] = rule.value(i, j)
    a.setflags(write=False)
    return a


def _table_array(rule: FragmentDistribution, p: int) -> np.ndarray:
    kdep = not rule.k_independent
    a = np.zeros((p, p, p if kdep else 1))
    for (i, j, k), v in rule.entries.items():
        if j > p or k > p:
            continue
        if k == 0:
            a[i - 1, j - 1, :] = float(v)
    for (i, j, k), v in rule.entries.items():
        if j <= p and 0 < k <= p:
            a[i - 1, j - 1, k - 1] = float(v)
    a.setflags(write=False)
    return a


def load_fragment_table(path: str | Path) -> FragmentDistribution:
    """Read ``i j k value`` lines into a table distribution.

    ``value`` is a decimal or an exact fraction ``num/den``; ``k`` may be ``*``
    for an entry shared by every ``k``.  Lines starting with ``#`` are skipped.
    """
    entries = _read_table(path, ncols=4)
    size = max((max(key) for key in entries), default=0)
    return FragmentDistribution.from_table(entries, size)


_FRACTION = re.compile(r"^[+-]?\d+/\d+$")


def _parse_number(token: str) -> Fraction:
    try:
        if _FRACTION.match(token):
            num, den = token.split("/")
            return Fraction(int(num), int(den))
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {token!r}") from exc


def _read_table(path: str | Path, ncols: int) -> dict[tuple[int, ...], Fraction]:
    entries: dict[tuple[int, ...], Fraction] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != ncols:
            raise ConfigError(f"{path}:{lineno}: expected {ncols} fields, got {len(parts)}")
        try:
            key = tuple(0 if tok == "*" else int(tok) for tok in parts[:-1])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad index") from exc
        entries[key] = _parse_number(parts[-1])
    return entries


# ---------------------------------------------------------------------------
# hypothesis checks on fragment distributions


def _k_values(phi: FragmentDistribution, kmax: int) -> range:
    # k-independent rules need a single representative k
    return range(1, 2) if phi.k_independent else range(1, kmax + 1)


def validate_lmc1(
    phi: FragmentDistribution,
    jmax: int,
    kmax: int,
    exact: bool = True,
    tol: float = 1e-12,
) -> ValidationReport:
    """Check ``sum_{i<j} i phi(i, j, k) == j`` for ``2 <= j <= jmax``, ``1 <= k <= kmax``.

    In exact mode residuals are ``Fraction`` and must vanish; otherwise
    ``|residual| <= tol * j`` is required.  ``details['residuals']`` maps every
    ``(j, k)`` to its residual.
    """
    if jmax < 2 or kmax < 1:
        raise RangeError("validate_lmc1 needs jmax >= 2 and kmax >= 1")
    if phi.family == "table" and max(jmax, kmax) > phi.size:
        raise RangeError(f"table distribution has size {phi.size}")
    if exact and not phi.is_rational:
        raise ModeError(f"{phi.describe()} cannot be checked in exact mode")

    report = ValidationReport("lmc1", True, worst_margin=math.inf)
    residuals: dict[tuple[int, int], Number] = {}
    ks = _k_values(phi, kmax)
    for j in range(2, jmax + 1):
        for k in ks:
            if exact:
                res = sum((i * phi.exact(i, j, k) for i in range(1, j)), Fraction(0)) - j
                ok = res == 0
                margin = 0.0 if ok else -abs(float(res))
            else:
                res = math.fsum(i * phi.value(i, j, k) for i in range(1, j)) - j
                margin = tol * j - abs(res)
                ok = margin >= 0
            if phi.k_independent:
                for kk in range(1, kmax + 1):
                    residuals[(j, kk)] = res
            else:
                residuals[(j, k)] = res
            report.worst_margin = min(report.worst_margin, margin)
            if not ok and report.certified:
                report.certified = False
                report.counterexample = (j, k)
    report.checked = len(residuals)
    report.details["residuals"] = residuals
    report.details["mode"] = "exact" if exact else f"tolerance({tol:g})"
    return report


@dataclass(frozen=True)
class BcondWitness:
    """Result of checking ``phi(i,j,k) <= alpha0 + alpha1 phi(i,k,j)`` for ``k >= j``."""

    alpha0: float
    alpha1: float
    jmax: int
    kmax: int
    certified: bool
    counterexample: tuple[int, int, int] | None = None
    exact: bool = True

    @property
    def status(self) -> str:
        return "certified" if self.certified else f"violated{self.counterexample}"


def find_bcond_witness(
    phi: FragmentDistribution,
    alpha0: float,
    alpha1: float,
    jmax: int,
    kmax: int,
    tol: float = 1e-12,
) -> BcondWitness:
    """Check the comparison condition on ``1 <= i < j <= jmax``, ``j <= k <= kmax``.

    Rational rules are compared exactly (float ``alpha`` values are converted
    to their exact binary value).  Irrational rules use the relative slack
    ``tol``.  On failure the lexicographically smallest ``(i, j, k)`` is reported.
    """
    if alpha0 < 0 or alpha1 < 0:
        raise RangeError("alpha0 and alpha1 must be non-negative")
    if not 2 <= jmax <= kmax:
        raise RangeError("find_bcond_witness needs kmax >= jmax >= 2")
    if phi.family == "table" and kmax > phi.size:
        raise RangeError(f"table distribution has size {phi.size}")

    exact = phi.is_rational
    if exact:
        a0, a1 = Fraction(alpha0), Fraction(alpha1)
        get = phi.exact

        def violates(lhs, rhs):
            return lhs > rhs
    else:
        a0, a1 = float(alpha0), float(alpha1)
        get = phi.value

        def violates(lhs, rhs):
            return lhs - rhs > tol * max(abs(lhs), abs(rhs))

    def result(counterexample=None):
        return BcondWitness(float(alpha0), float(alpha1), jmax, kmax, counterexample is None, counterexample, exact)

    if phi.k_independent:
        # rhs(i, k) = a0 + a1 phi(i, k); compare phi(i, j) with the suffix minimum over k >= j
        for i in range(1, jmax):
            rhs = {k: a0 + a1 * get(i, k, 1) for k in range(i + 1, kmax + 1)}
            suffix_min = {}
            running = None
            for k in range(kmax, i, -1):
                running = rhs[k] if running is None or rhs[k] < running else running
                suffix_min[k] = running
            for j in range(max(i + 1, 2), jmax + 1):
                lhs = get(i, j, 1)
                if violates(lhs, suffix_min[j]):
                    k = next(k for k in range(j, kmax + 1) if violates(lhs, rhs[k]))
                    return result((i, j, k))
        return result()

    for i in range(1, jmax):
        for j in range(i + 1, jmax + 1):
            for k in range(j, kmax + 1):
                if violates(get(i, j, k), a0 + a1 * get(i, k, j)):
                    return result((i, j, k))
    return result()


def zeta_upper_bound(s: float, terms: int = 100_000) -> tuple[float, float]:
    """Partial sum of ``sum_{l>=1} l**-s`` and a rigorous upper bound (``s > 1``).

    The remainder after ``terms`` terms is at most ``terms**(1-s)/(s-1)``.
    """
    if s <= 1:
        raise DomainError("series diverges for s <= 1")
    partial = math.fsum(float(l) ** -s for l in range(1, terms + 1))
    return partial, partial + terms ** (1.0 - s) / (s - 1.0)


def default_alpha1(phi: FragmentDistribution) -> float | None:
    """Known ``alpha1`` for catalog rules (``None`` for tables).

    Bounded rules (uniform, power law with ``nu >= -1``) need ``alpha1 = 0``.
    """
    if phi.family in ("monomer", "exponential"):
        return 1.0
    if phi.family == "uniform":
        return 0.0
    if phi.family == "power_law":
        if phi.nu >= -1:
            return 0.0
        if phi.nu >= -2:
            return 2.0 ** (2.0 + phi.nu)
        return zeta_upper_bound(-(1.0 + phi.nu))[1]
    return None


def bcond_constants(phi: FragmentDistribution, p: int) -> tuple[Number, Number]:
    """``(alpha0, alpha1)`` under which ``phi`` is expected to satisfy the comparison condition on ``1..p``.

    Unbounded catalog rules use their known constants.  Everything else falls
    back to ``(max phi, 0)`` over the truncation, taken exactly for rational rules.
    """
    if phi.family == "monomer":
        return 0.0, 1.0
    if phi.family == "exponential":
        return 1.0, 1.0
    if phi.family == "power_law" and phi.nu < -1:
        return 0.0, default_alpha1(phi)
    if phi.is_rational:
        ks = _k_values(phi, p)
        top = max(phi.exact(i, j, k) for j in range(2, p + 1) for i in range(1, j) for k in ks)
        return top, 0.0
    return float(phi.array(p).max()), 0.0


# ---------------------------------------------------------------------------
# weight functions


@dataclass(frozen=True)
class WeightFunction:
    """Superlinear weight ``G0`` with ``G1 = G0 / z``.

    ``power``: ``G0 = z**m`` with ``m`` in (1, 2].
    ``log_power``: ``G0 = z * ln(e**(m-1) + z)**m`` with ``m > 1``.
    """

    family: str
    m: float

    def __post_init__(self) -> None:
        if self.family == "power":
            if not 1.0 < self.m <= 2.0:
                raise DomainError(f"power weight needs m in (1, 2], got {self.m}")
        elif self.family == "log_power":
            if not self.m > 1.0:
                raise DomainError(f"log_power weight needs m > 1, got {self.m}")
        else:
            raise ConfigError(f"unknown weight family {self.family!r}")

    @classmethod
    def power(cls, m: float = 2.0) -> "WeightFunction":
        return cls("power", float(m))

    @classmethod
    def log_power(cls, m: float) -> "WeightFunction":
        return cls("log_power", float(m))

    @property
    def _shift(self) -> float:
        return math.exp(self.m - 1.0)

    def g0(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "power":
            return z**self.m
        return z * np.log(self._shift + z) ** self.m

    def g1(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "power":
            return z ** (self.m - 1.0)
        return np.log(self._shift + z) ** self.m

    def dg1(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "power":
            return (self.m - 1.0) * z ** (self.m - 2.0)
        c = self._shift
        return self.m * np.log(c + z) ** (self.m - 1.0) / (c + z)

    def z_dg1(self, z):
        """``z * G1'(z)``, non-decreasing for both families."""
        z = np.asarray(z, dtype=float)
        if self.family == "power":
            return (self.m - 1.0) * z ** (self.m - 1.0)
        c = self._shift
        return self.m * z * np.log(c + z) ** (self.m - 1.0) / (c + z)

    def describe(self) -> str:
        return f"{self.family}({self.m:g})"


def _slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.diff(y) / np.diff(x)


def check_weight_class(g: WeightFunction, grid, rtol: float = 1e-10) -> ValidationReport:
    """Numerical membership test for the superlinear weight class on a grid.

    Checks ``G0(0) == 0``, convexity of ``G0`` and concavity plus monotonicity
    of ``G1`` through divided differences, and that ``z G1'(z)`` increases on
    the upper half of the grid.  This is a regression check: divergence of
    ``z G1'(z)`` is known in closed form for both catalog families.
    """
    z = np.asarray(grid, dtype=float)
    if z.ndim != 1 or z.size < 3:
        raise RangeError("grid needs at least three points")
    if np.any(z <= 0) or np.any(np.diff(z) <= 0):
        raise RangeError("grid must be positive and strictly increasing")

    report = ValidationReport("weight-class", True, checked=int(z.size))
    if float(g.g0(0.0)) != 0.0:
        report.certified = False
        report.counterexample = ("g0(0)", 0.0)
        return report

    def first_failure(name, values, sign):
        s = _slopes(z, values)
        # sign=+1: slopes non-decreasing (convex); sign=-1: non-increasing (concave)
        jump = sign * np.diff(s)
        scale = rtol * (np.abs(s[:-1]) + np.abs(s[1:]))
        bad = np.flatnonzero(jump < -scale)
        return None if not bad.size else (name, float(z[bad[0] + 1]))

    checks = [
        first_failure("g0-convex", g.g0(z), +1),
        first_failure("g1-concave", g.g1(z), -1),
    ]
    g1 = g.g1(z)
    dec = np.flatnonzero(np.diff(g1) < -rtol * np.abs(g1[:-1]))
    checks.append(None if not dec.size else ("g1-monotone", float(z[dec[0] + 1])))
    upper = z[z.size // 2 :]
    growth = g.z_dg1(upper)
    flat = np.flatnonzero(np.diff(growth) <= 0)
    checks.append(None if not flat.size else ("z*g1'-increasing", float(upper[flat[0] + 1])))

    for failure in checks:
        if failure is not None:
            report.certified = False
            report.counterexample = failure
            return report
    report.details["z_dg1_at_end"] = float(growth[-1])
    return report
