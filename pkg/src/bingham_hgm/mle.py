"""
Maximum likelihood estimation by holonomic gradient descent.

The log-likelihood of N unit vectors with second moments ``s`` is
``l(theta) = N (sum_i theta_i s_i - log C(theta))``.  Its gradient and Hessian
only need ``eta = d log C / d phi`` and the Pfaffian matrices, and ``eta`` is
carried from one iterate to the next by the logarithmic system, so no
normalising constant is ever recomputed from scratch during the iteration.

The largest block is pinned at 0 and the remaining q - 1 block values are
optimised.  Ties in ``s`` are kept as ties in ``theta`` (the MLE has the same
order and tie pattern as ``s``), which is enforced structurally by fitting in
the degenerate system for that pattern.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import pfaffian
from .exceptions import InputError, NumericalError
from .hg import OdeControl, PathSegment, hg_norm_const, integrate, propagate_log
from .model import GVector, MultiplicityTheta, canonicalize, log_uniform_mass

__all__ = [
    "SuffStats",
    "FitResult",
    "sufficient_stats",
    "default_initial_point",
    "loglik_grad_hess",
    "fit_discrete",
    "fit_continuous",
]

logger = logging.getLogger(__name__)

SEED_EPS = 1e-10
NEAR_TIE = 1e-8
MAX_HALVINGS = 20


@dataclass(frozen=True, eq=False)
class SuffStats:
    """Second moments ``s_i = mean_t x_i(t)^2`` (on the open simplex) and the sample count."""

    s: np.ndarray
    n: int

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise InputError("need at least two sufficient statistics")
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise InputError(
                "all sufficient statistics must be positive; a zero means the data lie "
                "on a coordinate hyperplane and that coordinate should be dropped"
            )
        if abs(s.sum() - 1.0) > 1e-6:
            raise InputError(f"sufficient statistics must sum to 1 (got {s.sum():.8g})")
        if self.n < 1:
            raise InputError("sample count must be positive")
        object.__setattr__(self, "s", s / s.sum())

    @property
    def p(self) -> int:
        return int(self.s.size)


def sufficient_stats(data, norm_tol: float = 1e-8) -> SuffStats:
    """Sufficient statistics of an ``N x p`` array of unit vectors."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 2:
        raise InputError("data must be an N x p array with p >= 2")
    if not np.all(np.isfinite(x)):
        raise InputError("data contain non-finite values")
    norms = np.sqrt(np.sum(x * x, axis=1))
    bad = np.flatnonzero(np.abs(norms - 1.0) > norm_tol)
    if bad.size:
        raise InputError(f"row {bad[0]} has norm {norms[bad[0]]:.10g}, not 1")
    s = np.mean(x * x, axis=0)
    if np.any(s == 0):
        raise InputError(
            f"coordinate(s) {np.flatnonzero(s == 0).tolist()} vanish in every observation"
        )
    return SuffStats(s / s.sum(), x.shape[0])


@dataclass
class FitResult:
    """Outcome of a fit.

    ``theta_hat`` keeps the pattern and order of ``s`` with its largest block
    at 0.  ``residual`` is ``max_i |d log C(theta_hat)/d theta_i - s_i|``
    evaluated by a fresh HG run, independent of the iteration's own state.
    ``iterations`` lists ``(phi, max |grad l| / N)`` for every accepted
    iterate; ``trajectory`` holds ``(tau, phi, eta)`` of the continuous flow.
    """

    theta_hat: MultiplicityTheta
    eta_hat: np.ndarray
    loglik: float
    residual: float
    converged: bool
    mode: str
    iterations: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)

    @property
    def theta(self) -> np.ndarray:
        """The estimate in the coordinate order of the data."""
        return self.theta_hat.expand()


def _pattern(stats: SuffStats, tie_tol: float) -> MultiplicityTheta:
    pat = canonicalize(stats.s, tie_tol)
    if pat.q > 1 and np.min(-np.diff(pat.levels)) < NEAR_TIE:
        warnings.warn(
            "sufficient statistics contain near-ties treated as distinct; "
            "pass tie_tol to fit the degenerate model",
            RuntimeWarning,
            stacklevel=3,
        )
    return pat


def _with_values(pattern: MultiplicityTheta, phi) -> MultiplicityTheta:
    phi = np.array(phi, dtype=float)
    phi.setflags(write=False)
    return MultiplicityTheta(phi=phi, d=pattern.d, order=pattern.order, shift=0.0, levels=phi)


def default_initial_point(stats: SuffStats, tie_tol: float = 0.0) -> MultiplicityTheta:
    """A small starting point with the order and tie pattern of ``s``.

    Block k (0 = largest ``s``) gets ``-k c`` with ``c`` chosen so that the
    full parameter vector has l1 norm 1/2.
    """
    pat = _pattern(stats, tie_tol)
    rank = np.arange(pat.q, dtype=float)
    weight = float(np.dot(pat.d, rank))
    phi = -rank / (2 * weight) + 0.0 if weight > 0 else np.zeros(1)
    return _with_values(pat, phi)


def _block_sums(stats: SuffStats, theta: MultiplicityTheta) -> np.ndarray:
    return np.bincount(theta.blocks, weights=stats.s, minlength=theta.q)


def _check_pattern(stats: SuffStats, theta: MultiplicityTheta, tie_tol: float = 0.0):
    pat = canonicalize(stats.s, tie_tol)
    if not pat.same_pattern(theta):
        raise InputError(
            "parameter order/tie pattern differs from that of the sufficient statistics"
        )


def _eta_jacobian(phi, d, gl) -> np.ndarray:
    """``J[i, j] = d eta_i / d phi_j = (P_j G^L)_i - G^L_i G^L_j`` (symmetric)."""
    P = pfaffian.pfaffian_matrices(phi, d)  # P[j] acts on G
    J = np.einsum("jik,k->ij", P, gl) - np.outer(gl, gl)
    return 0.5 * (J + J.T)


def loglik_grad_hess(stats: SuffStats, theta: MultiplicityTheta, GL: GVector):
    """Log-likelihood with its gradient and Hessian in the block coordinates.

    ``GL`` must be the LOG vector at ``theta``'s values (``theta.levels``).
    Returns ``(loglik, grad, hess)`` with ``grad_i = N (S_i - eta_i)`` and
    ``hess_ij = -N d eta_i / d phi_j``, ``S_i`` being the block sums of ``s``.
    """
    if GL.q != theta.q:
        raise InputError("GL does not match the number of blocks of theta")
    if theta.p != stats.p:
        raise InputError("theta and the statistics have different dimensions")
    _check_pattern(stats, theta)
    S = _block_sums(stats, theta)
    gl = GL.to_log()
    eta = np.asarray(gl.values)
    N = stats.n
    phi = np.asarray(theta.levels)
    loglik = N * (float(np.dot(phi, S)) - gl.log_c - log_uniform_mass(stats.p))
    grad = N * (S - eta)
    if theta.q == 1:
        return loglik, grad, np.zeros((1, 1))
    hess = -N * _eta_jacobian(phi, theta.d, eta)
    return loglik, grad, hess


def _residual(eta_blocks, S, d) -> float:
    return float(np.max(np.abs(eta_blocks - S) / d))


def _ordered(phi) -> bool:
    return bool(np.all(np.diff(phi) < 0))


class _Newton:
    """Damped Newton iteration in the free block coordinates, carrying ``G^L`` by HG."""

    def __init__(self, stats, pattern, S, ctl):
        self.stats = stats
        self.pattern = pattern
        self.S = S
        self.d = np.asarray(pattern.d, dtype=float)
        self.ctl = ctl

    def loglik(self, phi, log_c):
        return self.stats.n * (float(np.dot(phi, self.S)) - log_c)

    def step(self, phi, gl):
        """One accepted Newton step; returns the new ``(phi, gl)``."""
        eta = np.asarray(gl.values)
        J = _eta_jacobian(phi, self.d, eta)[1:, 1:]
        rhs = (self.S - eta)[1:]
        try:
            if np.linalg.cond(J) > 1e14:
                raise np.linalg.LinAlgError
            delta = np.linalg.solve(J, rhs)
        except np.linalg.LinAlgError:
            raise NumericalError("Hessian is numerically singular") from None
        l0 = self.loglik(phi, gl.log_c)
        slack = 1e-12 * (abs(l0) + self.stats.n)
        lam = 1.0
        start = _with_values(self.pattern, phi)
        for _ in range(MAX_HALVINGS + 1):
            cand = phi.copy()
            cand[1:] += lam * delta
            if _ordered(cand):
                new = propagate_log(gl, PathSegment(start, _with_values(self.pattern, cand)), self.ctl)
                if self.loglik(cand, new.log_c) >= l0 - slack:
                    return cand, new
            lam *= 0.5
        raise NumericalError("no acceptable Newton step after step halving")

    def run(self, phi, gl, grad_tol, max_iter, trace):
        it = 0
        while True:
            res = _residual(np.asarray(gl.values), self.S, self.d)
            trace.append((phi.copy(), res))
            if res <= grad_tol or it >= max_iter:
                return phi, gl, it
            phi, gl = self.step(phi, gl)
            it += 1


def _fresh(pattern, phi, ctl):
    theta = _with_values(pattern, phi)
    r = hg_norm_const(theta, eps=SEED_EPS, ctl=ctl)
    return GVector.log(r.gl.values, r.log_c)


def _finish(stats, pattern, S, phi, ctl, mode, trace, trajectory, grad_tol):
    theta = _with_values(pattern, phi)
    gl = _fresh(pattern, phi, ctl)
    eta = np.asarray(gl.values)
    res = _residual(eta, S, pattern.d)
    loglik, _, _ = loglik_grad_hess(stats, theta, gl)
    eta_coord = (eta / pattern.d)[pattern.blocks]
    return FitResult(theta_hat=theta, eta_hat=eta_coord, loglik=loglik, residual=res,
                     converged=res <= grad_tol, mode=mode, iterations=trace,
                     trajectory=trajectory)


def _setup(stats, theta0, tie_tol):
    pattern = _pattern(stats, tie_tol)
    if theta0 is None:
        theta0 = default_initial_point(stats, tie_tol)
    elif not isinstance(theta0, MultiplicityTheta):
        theta0 = canonicalize(theta0)
    if not pattern.same_pattern(theta0):
        raise InputError("initial point must have the order and tie pattern of the statistics")
    S = _block_sums(stats, pattern)
    return pattern, np.asarray(theta0.phi, dtype=float), S


def fit_discrete(stats: SuffStats, theta0=None, grad_tol: float = 1e-8,
                 ctl: OdeControl | None = None, max_iter: int = 100,
                 tie_tol: float = 0.0) -> FitResult:
    """Newton-Raphson MLE with ``G^L`` carried between iterates by HG.

    Each step ``theta <- theta - Hess^{-1} grad`` is halved (at most 20
    times) if it would break the order of the blocks or lower the
    likelihood.  Iteration stops once ``max_i |eta_i - s_i| <= grad_tol``;
    the stopping point is then re-checked against a fresh evaluation and the
    iteration resumes from that fresh state if needed.
    """
    ctl = ctl or OdeControl()
    pattern, phi, S = _setup(stats, theta0, tie_tol)
    trace = []
    if pattern.q == 1:
        return _finish(stats, pattern, S, np.zeros(1), ctl, "discrete", trace, [], grad_tol)
    newton = _Newton(stats, pattern, S, ctl)
    gl = _fresh(pattern, phi, ctl)
    used = 0
    for _ in range(3):
        phi, gl, it = newton.run(phi, gl, grad_tol, max_iter - used, trace)
        used += it
        gl_new = _fresh(pattern, phi, ctl)
        if _residual(np.asarray(gl_new.values), S, pattern.d) <= grad_tol or used >= max_iter:
            break
        gl = gl_new
    return _finish(stats, pattern, S, phi, ctl, "discrete", trace, [], grad_tol)


def fit_continuous(stats: SuffStats, theta0=None, epsilon: float = 1e-2,
                   polish_steps: int = 3, ctl: OdeControl | None = None,
                   grad_tol: float = 1e-8, tie_tol: float = 0.0) -> FitResult:
    """Continuous-time Newton flow co-integrated with the logarithmic Pfaffian system.

    Solves ``d theta/d tau = -(1 - tau)^{-1} Hess^{-1} grad`` together with
    the HG equation for ``(G^L, log C)`` from ``tau = 0`` to ``1 - epsilon``.
    Along the exact flow ``grad(tau) = (1 - tau) grad(0)``, i.e. ``eta`` moves
    on the straight line from ``eta(theta0)`` to ``s``, which keeps the block
    order fixed; every accepted step is checked for it.  Up to
    ``polish_steps`` discrete Newton steps then remove the remaining
    ``epsilon`` fraction of the gradient.
    """
    if not 0 < epsilon < 1:
        raise InputError("epsilon must lie in (0, 1)")
    ctl = ctl or OdeControl()
    pattern, phi0, S = _setup(stats, theta0, tie_tol)
    if pattern.q == 1:
        return _finish(stats, pattern, S, np.zeros(1), ctl, "continuous", [], [], grad_tol)
    q = pattern.q
    d = np.asarray(pattern.d, dtype=float)
    gl0 = _fresh(pattern, phi0, ctl)

    def rhs(tau, y):
        phi = np.concatenate([[0.0], y[: q - 1]])
        gl = y[q - 1: 2 * q - 1]
        J = _eta_jacobian(phi, d, gl)[1:, 1:]
        v = np.zeros(q)
        v[1:] = np.linalg.solve(J, (S - gl)[1:]) / (1.0 - tau)
        out = np.empty_like(y)
        out[: q - 1] = v[1:]
        out[q - 1: 2 * q - 1] = pfaffian.log_directional_field(phi, d, v, gl)
        out[-1] = np.dot(v, gl)
        return out

    trajectory = [(0.0, phi0.copy(), np.asarray(gl0.values).copy())]

    def on_step(tau, y):
        phi = np.concatenate([[0.0], y[: q - 1]])
        if not _ordered(phi):
            raise NumericalError(f"block order lost at tau={tau:.6g}")
        trajectory.append((float(tau), phi, y[q - 1: 2 * q - 1].copy()))

    y0 = np.concatenate([phi0[1:], gl0.values, [gl0.log_c]])
    y, _ = integrate(rhs, y0, 1.0 - epsilon, ctl, on_step=on_step)
    phi = np.concatenate([[0.0], y[: q - 1]])
    gl = GVector.log(y[q - 1: 2 * q - 1], y[-1])

    trace = []
    newton = _Newton(stats, pattern, S, ctl)
    phi, gl, _ = newton.run(phi, gl, grad_tol, polish_steps, trace)
    return _finish(stats, pattern, S, phi, ctl, "continuous", trace, trajectory, grad_tol)
