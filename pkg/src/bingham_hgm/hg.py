"""
Holonomic gradient evaluation of the normalising constant.

Given the derivative vector at a point where the power series is cheap, the
vector anywhere else is obtained by integrating the Pfaffian system along the
straight segment between the two points.  Three state layouts are supported:
the linear block system (FULL), the reduced system with the last block held
at zero (REDUCED), and the logarithmic system for ``G / C`` carried together
with ``log C`` (LOG), which keeps the state bounded for large parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45

from . import pfaffian
from .exceptions import InputError, NumericalError
from .model import GVector, Layout, MultiplicityTheta, canonicalize, log_uniform_mass
from .series import DEFAULT_MAX_TERMS, series_grad, series_order

__all__ = [
    "OdeControl",
    "PathSegment",
    "Trajectory",
    "NormConstResult",
    "propagate",
    "propagate_log",
    "hg_norm_const",
    "integrate",
]

logger = logging.getLogger(__name__)

SERIES_RADIUS = 1.0
SEED_RADIUS = 0.5
LOG_THRESHOLD = 20.0


@dataclass(frozen=True)
class OdeControl:
    """Step control for the embedded Runge-Kutta 5(4) integrator."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_steps: int = 1_000_000
    initial_step: float = 1e-3

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InputError("ODE tolerances must be positive")
        if self.max_steps < 1 or not self.initial_step > 0:
            raise InputError("max_steps and initial_step must be positive")


@dataclass(frozen=True)
class PathSegment:
    """Affine path ``(1 - tau) start + tau end`` between two parameters.

    The path runs over the (un-gauged) distinct values.  Both endpoints must
    share the multiplicity pattern and the strict order of their values, so
    no two values cross along the way.
    """

    start: MultiplicityTheta
    end: MultiplicityTheta

    def __post_init__(self):
        if not np.array_equal(self.start.d, self.end.d):
            raise InputError("segment endpoints have different multiplicity patterns")

    @property
    def velocity(self) -> np.ndarray:
        return np.asarray(self.end.levels) - np.asarray(self.start.levels)

    def at(self, tau: float) -> np.ndarray:
        return (1 - tau) * np.asarray(self.start.levels) + tau * np.asarray(self.end.levels)

    @property
    def min_gap(self) -> float:
        if self.start.q < 2:
            return math.inf
        return float(min(np.diff(-self.start.levels).min(), np.diff(-self.end.levels).min()))


@dataclass
class Trajectory:
    """Accepted integrator steps: ``tau`` and the state after each step."""

    tau: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def append(self, t, y):
        self.tau.append(float(t))
        self.states.append(np.array(y, copy=True))

    def as_array(self) -> np.ndarray:
        return np.column_stack([np.asarray(self.tau), np.asarray(self.states)])


def integrate(fun, y0, t_end, ctl: OdeControl, on_step=None):
    """Integrate ``y' = fun(t, y)`` from 0 to ``t_end``; returns ``(y_end, n_steps)``.

    ``on_step(t, y)`` is called after every accepted step and may raise to
    abort the run.
    """
    y0 = np.asarray(y0, dtype=float)
    if t_end == 0:
        return y0.copy(), 0
    solver = RK45(fun, 0.0, y0, t_end, rtol=ctl.rel_tol, atol=ctl.abs_tol,
                  first_step=min(ctl.initial_step, abs(t_end)))
    steps = 0
    while solver.status == "running":
        if steps >= ctl.max_steps:
            raise NumericalError(f"ODE step budget of {ctl.max_steps} exhausted at t={solver.t:.6g}")
        solver.step()
        steps += 1
        if solver.status == "failed":
            raise NumericalError(f"ODE integration failed at t={solver.t:.6g}")
        if on_step is not None:
            on_step(solver.t, solver.y)
    return solver.y.copy(), steps


def _check_segment(seg: PathSegment):
    a, b = seg.start.levels, seg.end.levels
    if seg.start.q > 1 and (np.any(np.diff(a) >= 0) or np.any(np.diff(b) >= 0)):
        raise InputError("segment endpoints must be strictly decreasing")


def propagate(G0: GVector, seg: PathSegment, ctl: OdeControl | None = None,
              trajectory: Trajectory | None = None) -> GVector:
    """Carry a FULL or REDUCED derivative vector from ``seg.start`` to ``seg.end``.

    FULL vectors live at the un-gauged values of the endpoints.  REDUCED
    vectors live at the values shifted so that the last block is zero.
    """
    ctl = ctl or OdeControl()
    _check_segment(seg)
    if G0.layout is Layout.LOG:
        return propagate_log(G0, seg, ctl, trajectory)
    d = np.asarray(seg.start.d, dtype=float)
    if G0.q != seg.start.q:
        raise InputError("G0 length does not match the segment's block count")

    if G0.layout is Layout.FULL:
        a = np.asarray(seg.start.levels, dtype=float)
        v = seg.velocity

        def rhs(t, y):
            return pfaffian.directional_field(a + t * v, d, v, y)
    else:
        if seg.start.q < 2:
            raise InputError("no reduced system for a single distinct value")
        a = np.asarray(seg.start.levels - seg.start.levels[-1], dtype=float)
        v = (seg.end.levels - seg.end.levels[-1]) - a

        def rhs(t, y):
            return pfaffian.reduced_directional_field(a + t * v, d, v, y)

    if not np.any(v):
        return G0
    y, _ = integrate(rhs, G0.values, 1.0, ctl,
                     on_step=trajectory.append if trajectory is not None else None)
    if G0.layout is Layout.FULL:
        return GVector.full(y)
    return GVector.reduced(y)


def propagate_log(GL0: GVector, seg: PathSegment, ctl: OdeControl | None = None,
                  trajectory: Trajectory | None = None) -> GVector:
    """Carry ``(G / C, log C)`` along the segment with the logarithmic system.

    ``log C`` moves with rate ``velocity . G^L``; the state never grows with
    the parameter, unlike the linear layouts.
    """
    ctl = ctl or OdeControl()
    _check_segment(seg)
    GL0 = GL0.to_log()
    if GL0.q != seg.start.q:
        raise InputError("GL0 length does not match the segment's block count")
    d = np.asarray(seg.start.d, dtype=float)
    a = np.asarray(seg.start.levels, dtype=float)
    v = seg.velocity
    if not np.any(v):
        return GL0

    def rhs(t, y):
        gl = y[:-1]
        out = np.empty_like(y)
        out[:-1] = pfaffian.log_directional_field(a + t * v, d, v, gl)
        out[-1] = np.dot(v, gl)
        return out

    y0 = np.append(GL0.values, GL0.log_c)
    y, _ = integrate(rhs, y0, 1.0, ctl,
                     on_step=trajectory.append if trajectory is not None else None)
    return GVector.log(y[:-1], y[-1])


@dataclass(frozen=True)
class NormConstResult:
    """Outcome of :func:`hg_norm_const`.

    ``log_c`` is ``log(C(theta)/C(0))`` at the user's parameter and ``gl``
    holds the expectation parameters of the blocks of ``theta`` (canonical,
    decreasing order).
    """

    theta: MultiplicityTheta
    log_c: float
    gl: GVector
    method: str
    n_terms: int
    ode_steps: int
    seed: np.ndarray | None = None

    @property
    def value(self) -> float:
        """``C(theta) / C(0)``."""
        return math.exp(self.log_c)

    @property
    def log_raw(self) -> float:
        """``log C(theta)``."""
        return self.log_c + log_uniform_mass(self.theta.p)

    @property
    def raw(self) -> float:
        return math.exp(self.log_raw)

    @property
    def eta(self) -> np.ndarray:
        """``d log C / d theta_k`` for every coordinate, in user order."""
        per_coord = np.asarray(self.gl.values) / np.asarray(self.theta.d)
        return per_coord[self.theta.blocks]


def hg_norm_const(theta, eps: float = 1e-10, ctl: OdeControl | None = None,
                  tie_tol: float = 0.0, log_threshold: float = LOG_THRESHOLD,
                  layout: Layout | None = None, trajectory: Trajectory | None = None,
                  max_terms: int = DEFAULT_MAX_TERMS) -> NormConstResult:
    """Normalising constant ``C(theta)/C(0)`` and expectation parameters.

    Parameters
    ----------
    theta : array_like or MultiplicityTheta
        Bingham parameter in any order; exact ties (or ties within
        ``tie_tol``) select the degenerate system.
    eps : float
        Series tolerance at the seed point.
    ctl : OdeControl, optional
        Integrator settings.
    log_threshold : float
        The logarithmic system is used when ``||phi||_1`` exceeds this.
    layout : Layout, optional
        Force FULL or LOG propagation.
    """
    ctl = ctl or OdeControl()
    t = theta if isinstance(theta, MultiplicityTheta) else canonicalize(theta, tie_tol)

    if t.q == 1:
        gl = GVector.log(np.ones(1), 0.0)
        return NormConstResult(t, t.shift, gl, "closed-form", 0, 0)

    gauged = MultiplicityTheta.from_blocks(t.phi, t.d)
    l1 = t.l1
    if l1 <= SERIES_RADIUS and layout is None:
        gl = series_grad(gauged, eps, max_terms).to_log()
        n_terms = series_order(gauged, eps, max_terms)
        return NormConstResult(t, gl.log_c + t.shift, gl, "series", n_terms, 0)

    seed_phi = t.phi * (SEED_RADIUS / l1)
    seed = MultiplicityTheta.from_blocks(seed_phi, t.d)
    G0 = series_grad(seed, eps, max_terms)
    seg = PathSegment(seed, gauged)
    traj = trajectory if trajectory is not None else Trajectory()
    if layout is Layout.LOG or (layout is None and l1 > log_threshold):
        out = propagate_log(G0.to_log(), seg, ctl, traj)
        method = "hg-log"
    else:
        out = propagate(G0, seg, ctl, traj).to_log()
        method = "hg"
    gl = GVector.log(out.values, out.log_c + t.shift)
    return NormConstResult(t, gl.log_c, gl, method, series_order(seed, eps, max_terms),
                           len(traj.tau), seed_phi)
