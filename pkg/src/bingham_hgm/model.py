"""
Canonical parameter representation for the Bingham normalising constant.

The Bingham density on the unit sphere S^{p-1} is proportional to
``exp(sum_i theta_i x_i^2)``.  Its normalising constant ``C(theta)`` is
invariant under permutations of ``theta`` and satisfies the shift identity
``C(theta + c) = exp(c) C(theta)``.  Everything downstream therefore works
with a canonical form: the distinct values ``phi`` sorted in decreasing
order, their multiplicities ``d``, and the shift that moves the largest
value to zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError

__all__ = [
    "Layout",
    "MultiplicityTheta",
    "GVector",
    "UniformMass",
    "canonicalize",
    "gauge_shift",
    "uniform_mass",
    "log_uniform_mass",
]


class Layout(str, enum.Enum):
    """Storage layout of a derivative vector."""

    FULL = "full"
    REDUCED = "reduced"
    LOG = "log"


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MultiplicityTheta:
    """Distinct parameter values with multiplicities.

    Attributes
    ----------
    phi : ndarray, shape (q,)
        Strictly decreasing distinct values, gauge-fixed so ``phi[0] == 0``.
    d : ndarray of int, shape (q,)
        Multiplicity of each distinct value.
    order : ndarray of int, shape (p,)
        ``order[k]`` is the user index of the k-th coordinate in canonical
        (block-expanded, decreasing) order.
    shift : float
        The gauge constant; the user parameter is ``phi + shift`` expanded.
    levels : ndarray, shape (q,)
        The distinct values before the gauge shift (kept so that expansion
        reproduces the user's input bit for bit).
    """

    phi: np.ndarray
    d: np.ndarray
    order: np.ndarray
    shift: float
    levels: np.ndarray = field(repr=False)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        d = np.asarray(self.d, dtype=int)
        if phi.ndim != 1 or phi.shape != d.shape or phi.size == 0:
            raise InputError("phi and d must be non-empty vectors of equal length")
        if np.any(d < 1):
            raise InputError("multiplicities must be positive")
        if np.any(np.diff(phi) >= 0):
            raise InputError("phi must be strictly decreasing")
        if sorted(np.asarray(self.order)) != list(range(int(d.sum()))):
            raise InputError("order must be a permutation of range(p)")

    @classmethod
    def from_blocks(cls, phi, d=None):
        """Build from distinct values in decreasing order (identity layout).

        The gauge is applied here, so ``phi`` need not start at zero.
        """
        levels = np.asarray(phi, dtype=float).ravel()
        if d is None:
            d = np.ones(levels.size, dtype=int)
        d = np.asarray(d, dtype=int).ravel()
        if not np.all(np.isfinite(levels)):
            raise InputError("parameter values must be finite")
        shift = float(levels[0])
        p = int(d.sum())
        return cls(
            phi=_frozen(levels - shift),
            d=_frozen(d, int),
            order=_frozen(np.arange(p), int),
            shift=shift,
            levels=_frozen(levels),
        )

    @property
    def q(self) -> int:
        return int(self.phi.size)

    @property
    def p(self) -> int:
        return int(self.d.sum())

    @property
    def l1(self) -> float:
        """l1 norm of the gauged distinct values, ``sum_i |phi_i|``."""
        return float(np.abs(self.phi).sum())

    @property
    def blocks(self) -> np.ndarray:
        """Block index of every coordinate, in user order."""
        canon = np.repeat(np.arange(self.q), self.d)
        out = np.empty(self.p, dtype=int)
        out[self.order] = canon
        return out

    def expand(self) -> np.ndarray:
        """The user's parameter vector."""
        out = np.empty(self.p)
        out[self.order] = np.repeat(self.levels, self.d)
        return out

    def expand_gauged(self) -> np.ndarray:
        """The gauge-fixed parameter vector (max entry 0) in user order."""
        out = np.empty(self.p)
        out[self.order] = np.repeat(self.phi, self.d)
        return out

    def with_phi(self, phi) -> "MultiplicityTheta":
        """Same pattern and layout, new gauged values (shift reset to 0)."""
        phi = np.asarray(phi, dtype=float)
        return MultiplicityTheta(
            phi=_frozen(phi - phi[0]),
            d=self.d,
            order=self.order,
            shift=float(phi[0]),
            levels=_frozen(phi),
        )

    def same_pattern(self, other: "MultiplicityTheta") -> bool:
        return bool(np.array_equal(self.d, other.d) and np.array_equal(self.blocks, other.blocks))

    def __repr__(self):
        return (
            f"MultiplicityTheta(phi={np.array2string(self.phi, precision=6)}, "
            f"d={self.d.tolist()}, shift={self.shift:.6g})"
        )


def canonicalize(theta, tie_tol: float = 0.0) -> MultiplicityTheta:
    """Reduce a parameter vector to distinct values with multiplicities.

    Entries are sorted in decreasing order; neighbours within ``tie_tol`` are
    merged into one block (chained, so a run of close values collapses
    together) whose value is the block mean.  The largest distinct value is
    then moved to zero and the move is recorded in ``shift``.

    Parameters
    ----------
    theta : array_like, shape (p,)
        Bingham parameter, ``p >= 2``.
    tie_tol : float
        Merge tolerance.  The default 0 merges exact ties only.

    Returns
    -------
    MultiplicityTheta
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size < 2:
        raise InputError(f"need p >= 2 parameters, got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise InputError("parameter values must be finite")
    if not tie_tol >= 0:
        raise InputError("tie_tol must be non-negative")

    order = np.argsort(-theta, kind="stable")
    srt = theta[order]
    # block boundaries where the decrease exceeds the tolerance; compared
    # after the gauge shift so values that coincide once shifted share a block
    gauged = srt - srt[0]
    cuts = np.flatnonzero(gauged[:-1] - gauged[1:] > tie_tol) + 1
    groups = np.split(srt, cuts)
    levels = np.array([g[0] if np.all(g == g[0]) else g.mean() for g in groups])
    d = np.array([g.size for g in groups], dtype=int)
    shift = float(levels[0])
    return MultiplicityTheta(
        phi=_frozen(levels - shift),
        d=_frozen(d, int),
        order=_frozen(order, int),
        shift=shift,
        levels=_frozen(levels),
    )


def gauge_shift(log_c: float, c: float) -> float:
    """Log normalising constant at ``theta + c`` given the one at ``theta``."""
    return log_c + c


@dataclass(frozen=True)
class UniformMass:
    """Surface area of S^{p-1}, i.e. ``C(0)``."""

    p: int
    value: float


def log_uniform_mass(p: int) -> float:
    if p < 1:
        raise InputError("p must be positive")
    return math.log(2.0) + 0.5 * p * math.log(math.pi) - math.lgamma(0.5 * p)


def uniform_mass(p: int) -> UniformMass:
    """``2 pi^{p/2} / Gamma(p/2)``."""
    return UniformMass(p=p, value=math.exp(log_uniform_mass(p)))


@dataclass(frozen=True, eq=False)
class GVector:
    """Derivative vector of the normalising constant in one of three layouts.

    ``FULL``
        ``(dC/dphi_1, ..., dC/dphi_q) / C(0)``.
    ``REDUCED``
        ``(C, dC/dphi_1, ..., dC/dphi_{q-1}) / C(0)``, the last block being the
        one held at zero.
    ``LOG``
        ``eta_i = d log C / d phi_i``; ``log_c`` carries ``log(C/C(0))``.

    All derivatives are with respect to the block values, i.e. the sum of
    the coordinate derivatives over each block.
    """

    layout: Layout
    values: np.ndarray
    log_c: float

    @classmethod
    def full(cls, values) -> "GVector":
        values = _frozen(values)
        total = values.sum()
        return cls(Layout.FULL, values, math.log(total) if total > 0 else -math.inf)

    @classmethod
    def reduced(cls, values) -> "GVector":
        values = _frozen(values)
        return cls(Layout.REDUCED, values, math.log(values[0]) if values[0] > 0 else -math.inf)

    @classmethod
    def log(cls, values, log_c: float) -> "GVector":
        return cls(Layout.LOG, _frozen(values), float(log_c))

    @property
    def q(self) -> int:
        return int(self.values.size)

    def to_full(self) -> "GVector":
        if self.layout is Layout.FULL:
            return self
        if self.layout is Layout.LOG:
            return GVector(Layout.FULL, _frozen(math.exp(self.log_c) * self.values), self.log_c)
        v = self.values
        last = v[0] - v[1:].sum()
        return GVector(Layout.FULL, _frozen(np.append(v[1:], last)), self.log_c)

    def to_log(self) -> "GVector":
        if self.layout is Layout.LOG:
            return self
        full = self.to_full()
        c = math.exp(self.log_c)
        return GVector(Layout.LOG, _frozen(full.values / c), self.log_c)

    def to_reduced(self) -> "GVector":
        if self.layout is Layout.REDUCED:
            return self
        full = self.to_full().values
        c = math.exp(self.log_c)
        return GVector(Layout.REDUCED, _frozen(np.concatenate([[c], full[:-1]])), self.log_c)

    def __repr__(self):
        return (
            f"GVector({self.layout.value}, {np.array2string(self.values, precision=6)}, "
            f"log_c={self.log_c:.10g})"
        )
