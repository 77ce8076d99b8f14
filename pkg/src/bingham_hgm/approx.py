"""
Closed forms and fast approximations of the normalising constant.

* First-order saddle-point approximation (raw scale).
* The complex Bingham constant, which equals the real constant when every
  multiplicity is 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import InputError, NumericalError

__all__ = [
    "SaddleSolution",
    "saddle_t",
    "spa1",
    "log_spa1",
    "complex_bingham_const",
    "log_complex_bingham_const",
]

ROOT_TOL = 1e-12


@dataclass(frozen=True)
class SaddleSolution:
    t_star: float
    theta: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        """``-theta_k - t*``, all positive."""
        return -self.theta - self.t_star

    @property
    def residual(self) -> float:
        return abs(float(np.sum(0.5 / self.gaps)) - 1.0)


def _as_theta(theta):
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size < 2:
        raise InputError("need p >= 2 parameters")
    if not np.all(np.isfinite(theta)):
        raise InputError("parameter values must be finite")
    return theta


def saddle_t(theta) -> SaddleSolution:
    """Solve ``sum_k 1 / (2(-theta_k - t)) = 1`` for ``t < min_k(-theta_k)``.

    This is ``K'(t) = 1`` for the cumulant generating function
    ``K(t) = -1/2 sum_k log(1 - t/(-theta_k))`` of ``sum_k x_k^2`` with
    ``x_k ~ N(0, 1/(-2 theta_k))``.  In the gap variable ``u = min(-theta) - t``
    the left side decreases from +inf to 0, so the root is unique; it lies in
    ``[1/2, p/2]``.  Newton from the right end converges monotonically
    (the function is convex); bisection guards each step.
    """
    theta = _as_theta(theta)
    a = -theta
    m = a.min()
    b = a - m  # >= 0

    def f(u):
        return np.sum(0.5 / (b + u)) - 1.0

    def df(u):
        return -np.sum(0.5 / (b + u) ** 2)

    lo, hi = 0.5, 0.5 * theta.size
    if f(hi) > 0:  # only possible through rounding
        hi *= 1 + 1e-12
    u = lo
    for _ in range(200):
        fu = f(u)
        if fu > 0:
            lo = u
        else:
            hi = u
        if abs(fu) <= ROOT_TOL:
            break
        step = u - fu / df(u)
        u = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    else:
        raise NumericalError("saddle point iteration did not converge")
    return SaddleSolution(t_star=float(m - u), theta=theta)


def log_spa1(theta) -> float:
    """Log of the first-order saddle-point approximation of ``C(theta)``."""
    sol = saddle_t(theta)
    g = sol.gaps
    p = g.size
    k2 = 0.5 * np.sum(g ** -2.0)
    return (0.5 * math.log(2.0) + 0.5 * (p - 1) * math.log(math.pi)
            - 0.5 * math.log(k2) - 0.5 * np.sum(np.log(g)) - sol.t_star)


def spa1(theta) -> float:
    """First-order saddle-point approximation of the raw constant ``C(theta)``.

    ``sqrt(2) pi^{(p-1)/2} K''(t*)^{-1/2} prod_k (-theta_k - t*)^{-1/2} exp(-t*)``
    with ``K''(t) = 1/2 sum_k (-theta_k - t)^{-2}``.
    """
    return math.exp(log_spa1(theta))


def log_complex_bingham_const(phi, gap_min: float = 1e-6):
    """``(sign, log|C_c|)`` of the complex Bingham constant."""
    phi = np.asarray(phi, dtype=float).ravel()
    q = phi.size
    if q == 0 or not np.all(np.isfinite(phi)):
        raise InputError("phi must be a non-empty finite vector")
    if q == 1:
        return 1.0, math.log(2 * math.pi) + phi[0]
    diff = phi[:, None] - phi[None, :]
    off = ~np.eye(q, dtype=bool)
    gap = np.abs(diff[off]).min()
    if gap < gap_min:
        raise InputError(
            f"values {gap:.3g} apart; the closed form cancels catastrophically, "
            "evaluate the d=2 real embedding instead"
        )
    # a_j^{-1} = prod_{i != j} (phi_j - phi_i)
    dd = np.where(off, diff, 1.0)
    log_abs = -np.sum(np.log(np.abs(dd)), axis=1)
    signs = np.prod(np.sign(dd), axis=1)
    lse, sign = logsumexp(log_abs + phi, b=signs, return_sign=True)
    return float(sign), float(lse + math.log(2.0) + q * math.log(math.pi))


def complex_bingham_const(phi, gap_min: float = 1e-6) -> float:
    """``2 pi^q sum_j a_j exp(phi_j)`` with ``1/a_j = prod_{i != j}(phi_j - phi_i)``."""
    sign, logv = log_complex_bingham_const(phi, gap_min)
    return sign * math.exp(logv)
